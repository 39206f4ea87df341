#include "pks/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pks {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

void emit_csv(const TimeSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    const int ns = series.rows.empty() ? 0 : static_cast<int>(series.rows.front().mass.size());
    out << "# pks time series; units: t [time], mass [mass], com [length], m2 "
           "[mass length^2], upsilon15 [mass length^3], energies [dimensionless], "
           "dissipation/fisher [mass/time], dw2_step [mass length^2], admissibility "
           "[dimensionless], max_density [mass/length^2], boundary_fraction [1]\n";
    out << "t";
    for (int i = 1; i <= ns; ++i) out << ",mass_" << i;
    out << ",com_x,com_y,m2,upsilon15,entropy,entropy_pos,interaction,free_energy,"
           "dissipation,fisher,dw2_step,admissibility,max_density,boundary_fraction,"
           "stop_reason\n";
    for (size_t k = 0; k < series.rows.size(); ++k) {
        const auto& r = series.rows[k];
        out << fmt(r.t);
        for (double m : r.mass) out << ',' << fmt(m);
        out << ',' << fmt(r.com.x) << ',' << fmt(r.com.y) << ',' << fmt(r.m2) << ','
            << fmt(r.upsilon) << ',' << fmt(r.energy.entropy) << ','
            << fmt(r.energy.entropy_positive) << ',' << fmt(r.energy.interaction) << ','
            << fmt(r.energy.free_energy) << ',' << fmt(r.energy.dissipation) << ','
            << fmt(r.energy.fisher) << ',' << fmt(r.dw2_step) << ',' << fmt(r.admissibility)
            << ',' << fmt(r.max_density) << ',' << fmt(r.boundary_fraction) << ','
            << (k + 1 == series.rows.size() ? series.stop_reason : "") << "\n";
    }
}

TimeSeries parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    TimeSeries series;
    std::string line;
    int line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line, ',');
        if (header.empty()) {
            header = cells;
            continue;
        }
        if (cells.size() != header.size())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": ragged row");
        StepRecord r;
        size_t c = 0;
        const auto next = [&]() { return std::strtod(cells[c++].c_str(), nullptr); };
        r.t = next();
        while (c < header.size() && header[c].rfind("mass_", 0) == 0) r.mass.push_back(next());
        r.com.x = next();
        r.com.y = next();
        r.m2 = next();
        r.upsilon = next();
        r.energy.entropy = next();
        r.energy.entropy_positive = next();
        r.energy.interaction = next();
        r.energy.free_energy = next();
        r.energy.dissipation = next();
        r.energy.fisher = next();
        r.dw2_step = next();
        r.admissibility = next();
        r.max_density = next();
        r.boundary_fraction = next();
        const std::string reason = cells.back();
        if (!reason.empty()) series.stop_reason = reason;
        series.rows.push_back(std::move(r));
    }
    if (series.rows.empty()) throw ConfigError(path + ": no data rows");
    return series;
}

void emit_heatmap(const Field& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    const int rows = static_cast<int>(field.rows());
    const int cols = static_cast<int>(field.cols());
    const double mx = field.maxCoeff();
    out << "P5\n# max=" << fmt(mx) << "\n" << cols << " " << rows << "\n255\n";
    std::vector<unsigned char> buf(static_cast<size_t>(rows) * cols);
    // Image row 0 is the top: largest y first, x increasing along the row.
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double v = field(c, rows - 1 - r);
            const double scaled = mx > 0.0 ? v / mx : 0.0;
            buf[static_cast<size_t>(r) * cols + c] =
                static_cast<unsigned char>(std::lround(255.0 * std::clamp(scaled, 0.0, 1.0)));
        }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

namespace {
void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 8);
}
std::uint64_t get_u64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
void put_f64(std::ofstream& out, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(out, v);
}
double get_f64(std::ifstream& in) {
    const std::uint64_t v = get_u64(in);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}
}  // namespace

void write_raw_field(const DensityField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out.write("PKS1", 4);
    put_u64(out, static_cast<std::uint64_t>(field.species()));
    put_u64(out, static_cast<std::uint64_t>(field.grid.cells_per_side));
    put_f64(out, field.grid.half_width);
    for (const auto& v : field.values)
        for (int i = 0; i < v.rows(); ++i)
            for (int j = 0; j < v.cols(); ++j) put_f64(out, v(i, j));
}

DensityField read_raw_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "PKS1")
        throw ConfigError(path + ": bad magic, not a PKS1 field file");
    const auto ns = static_cast<int>(get_u64(in));
    const auto n = static_cast<int>(get_u64(in));
    const double L = get_f64(in);
    if (ns < 1 || ns > 64 || n < 8 || n > 16384)
        throw ConfigError(path + ": implausible field header");
    DensityField f;
    f.grid = make_grid(L, n);
    f.values.resize(ns);
    for (int s = 0; s < ns; ++s) {
        f.values[s].resize(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) f.values[s](i, j) = get_f64(in);
    }
    if (!in) throw ConfigError(path + ": truncated field file");
    // The format carries no mass vector; adopt the discrete masses as targets.
    f.target_mass = mass(f);
    return f;
}

}  // namespace pks
