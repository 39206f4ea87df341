#include "pks/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pks/criticality.hpp"

namespace pks {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

struct Parser {
    std::string origin;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
    }

    double num(const std::string& v) const {
        try {
            size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) fail("trailing characters in number '" + v + "'");
            return d;
        } catch (const ConfigError&) {
            throw;
        } catch (...) {
            fail("expected a number, got '" + v + "'");
        }
    }

    long integer(const std::string& v) const {
        const double d = num(v);
        if (d != std::floor(d)) fail("expected an integer, got '" + v + "'");
        return static_cast<long>(d);
    }

    bool flag(const std::string& v) const {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail("expected a boolean, got '" + v + "'");
    }

    std::vector<double> numbers(const std::string& v) const {
        std::vector<double> out;
        for (const auto& item : split_list(v)) out.push_back(num(item));
        return out;
    }
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    Parser p{origin, 0};
    std::istringstream in(text);
    std::string line, section;
    std::vector<std::pair<int, std::vector<double>>> interaction_rows;
    std::vector<std::pair<int, SpeciesProfile>> profiles;

    bool have_grid = false, have_species = false, have_horizon = false;

    while (std::getline(in, line)) {
        ++p.line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') p.fail("unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) p.fail("expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) p.fail("empty key");

        if (section == "grid") {
            if (key == "L") cfg.L = p.num(value);
            else if (key == "N") cfg.N = static_cast<int>(p.integer(value));
            else p.fail("unknown [grid] key '" + key + "'");
            have_grid = true;
        } else if (section == "species") {
            if (key == "n") cfg.n = static_cast<int>(p.integer(value));
            else if (key == "beta") cfg.beta = p.numbers(value);
            else if (key == "chi") cfg.chi = p.numbers(value);
            else if (key == "beta_tilde") cfg.beta_tilde = p.numbers(value);
            else p.fail("unknown [species] key '" + key + "'");
            have_species = true;
        } else if (section == "interaction") {
            if (key.rfind("row_", 0) != 0) p.fail("interaction keys are row_<i>");
            const int idx = static_cast<int>(p.integer(key.substr(4)));
            interaction_rows.emplace_back(idx, p.numbers(value));
        } else if (section.rfind("profile_", 0) == 0) {
            const int idx = static_cast<int>(p.integer(section.substr(8)));
            while (static_cast<int>(profiles.size()) < idx)
                profiles.emplace_back(static_cast<int>(profiles.size()) + 1, SpeciesProfile{});
            auto& prof = profiles[idx - 1].second;
            const auto nums = p.numbers(value);
            if (key == "gaussian") {
                if (nums.size() != 4) p.fail("gaussian needs cx, cy, sigma, weight");
                prof.push_back(GaussianProfile{{nums[0], nums[1]}, nums[2], nums[3]});
            } else if (key == "disk") {
                if (nums.size() != 4) p.fail("disk needs cx, cy, radius, weight");
                prof.push_back(DiskProfile{{nums[0], nums[1]}, nums[2], nums[3]});
            } else {
                p.fail("unknown profile component '" + key + "'");
            }
        } else if (section == "solver") {
            if (key == "kind") {
                if (value == "jko") cfg.kind = SolverKind::Jko;
                else if (value == "fv") cfg.kind = SolverKind::Fv;
                else p.fail("solver kind must be jko or fv");
            } else if (key == "tau") cfg.jko.tau = p.num(value);
            else if (key == "epsilon") cfg.jko.epsilon = p.num(value);
            else if (key == "c_eps") cfg.jko.c_eps = p.num(value);
            else if (key == "inner_tol") cfg.jko.inner_tol = p.num(value);
            else if (key == "inner_max") cfg.jko.inner_max = static_cast<int>(p.integer(value));
            else if (key == "outer_max") cfg.jko.outer_max = static_cast<int>(p.integer(value));
            else if (key == "outer_tol") cfg.jko.outer_tol = p.num(value);
            else if (key == "mass_projection") cfg.jko.mass_projection = p.flag(value);
            else if (key == "debias_prox") cfg.jko.debias_prox = p.flag(value);
            else if (key == "report_tol") cfg.jko.report_tol = p.num(value);
            else if (key == "inf_f_estimate") {
                cfg.jko.inf_f_estimate = value == "nan"
                                             ? std::numeric_limits<double>::quiet_NaN()
                                             : p.num(value);
            } else if (key == "dt_safety") cfg.fv.dt_safety = p.num(value);
            else if (key == "max_dt") cfg.fv.max_dt = p.num(value);
            else if (key == "floor") cfg.fv.floor = p.num(value);
            else p.fail("unknown [solver] key '" + key + "'");
        } else if (section == "run") {
            if (key == "T") {
                cfg.horizon = p.num(value);
                have_horizon = true;
            } else if (key == "snapshot_every")
                cfg.snapshot_every = static_cast<int>(p.integer(value));
            else if (key == "snapshots_raw") cfg.snapshots_raw = p.flag(value);
            else if (key == "heatmaps") cfg.heatmaps = p.flag(value);
            else if (key == "out") cfg.out_dir = value;
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(p.integer(value));
            else p.fail("unknown [run] key '" + key + "'");
        } else if (section.empty()) {
            p.fail("key outside any [section]");
        } else {
            p.fail("unknown section [" + section + "]");
        }
    }

    p.line_no = 0;
    if (!have_grid || cfg.L <= 0.0 || cfg.N == 0) p.fail("missing or invalid [grid] L, N");
    if (!have_species) p.fail("missing [species] section");

    const bool chi_form = !cfg.chi.empty() || !cfg.beta_tilde.empty();
    if (chi_form) {
        if (cfg.chi.size() != 2 || cfg.beta_tilde.size() != 2)
            p.fail("the (chi, beta_tilde) form needs exactly two entries each");
        cfg.n = 2;
    } else {
        if (cfg.beta.empty()) p.fail("[species] needs beta (or chi/beta_tilde)");
        if (cfg.n != static_cast<int>(cfg.beta.size()))
            p.fail("n does not match the length of beta");
    }

    if (!chi_form) {
        if (interaction_rows.empty()) p.fail("missing [interaction] rows");
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cfg.n, cfg.n);
        for (const auto& [idx, row] : interaction_rows) {
            if (idx < 1 || idx > cfg.n) p.fail("interaction row index out of range");
            if (static_cast<int>(row.size()) != cfg.n)
                p.fail("interaction row " + std::to_string(idx) + " has wrong length");
            for (int j = 0; j < cfg.n; ++j) a(idx - 1, j) = row[j];
        }
        cfg.interaction = a;
    }

    if (!profiles.empty()) {
        if (static_cast<int>(profiles.size()) != cfg.n)
            p.fail("profile sections do not cover every species");
        for (auto& [idx, prof] : profiles) cfg.profiles.push_back(prof);
    }

    if (!have_horizon && (cfg.kind == SolverKind::Jko || cfg.kind == SolverKind::Fv)) {
        // classify-only configs may omit [run]; solvers require it at use time.
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

InteractionMatrix RunConfig::matrix() const {
    if (!chi.empty()) return two_species_map(chi[0], chi[1], beta_tilde).first;
    if (interaction.size() == 0) throw ConfigError("no interaction matrix configured");
    bool all_zero = true;
    for (int i = 0; i < interaction.rows() && all_zero; ++i)
        for (int j = 0; j < interaction.cols(); ++j)
            if (interaction(i, j) != 0.0) {
                all_zero = false;
                break;
            }
    return all_zero ? InteractionMatrix::zero(n) : InteractionMatrix::make(interaction);
}

std::vector<double> RunConfig::masses() const {
    if (!chi.empty()) return two_species_map(chi[0], chi[1], beta_tilde).second;
    return beta;
}

DensityField RunConfig::initial_state(const GridSpec& g) const {
    if (profiles.empty()) throw ConfigError("config has no [profile_i] sections");
    return make_density(g, profiles, masses());
}

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

std::string emit_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[grid]\nL = " << fmt(cfg.L) << "\nN = " << cfg.N << "\n\n[species]\n";
    if (!cfg.chi.empty()) {
        out << "chi = " << fmt(cfg.chi[0]) << ", " << fmt(cfg.chi[1]) << "\n";
        out << "beta_tilde = " << fmt(cfg.beta_tilde[0]) << ", " << fmt(cfg.beta_tilde[1])
            << "\n";
    } else {
        out << "n = " << cfg.n << "\nbeta = ";
        for (size_t i = 0; i < cfg.beta.size(); ++i)
            out << (i ? ", " : "") << fmt(cfg.beta[i]);
        out << "\n";
    }
    if (cfg.interaction.size() != 0) {
        out << "\n[interaction]\n";
        for (int i = 0; i < cfg.interaction.rows(); ++i) {
            out << "row_" << (i + 1) << " = ";
            for (int j = 0; j < cfg.interaction.cols(); ++j)
                out << (j ? ", " : "") << fmt(cfg.interaction(i, j));
            out << "\n";
        }
    }
    for (size_t s = 0; s < cfg.profiles.size(); ++s) {
        out << "\n[profile_" << (s + 1) << "]\n";
        for (const auto& c : cfg.profiles[s]) {
            if (std::holds_alternative<GaussianProfile>(c)) {
                const auto& gp = std::get<GaussianProfile>(c);
                out << "gaussian = " << fmt(gp.center.x) << ", " << fmt(gp.center.y) << ", "
                    << fmt(gp.sigma) << ", " << fmt(gp.weight) << "\n";
            } else {
                const auto& dp = std::get<DiskProfile>(c);
                out << "disk = " << fmt(dp.center.x) << ", " << fmt(dp.center.y) << ", "
                    << fmt(dp.radius) << ", " << fmt(dp.weight) << "\n";
            }
        }
    }
    out << "\n[solver]\nkind = " << (cfg.kind == SolverKind::Jko ? "jko" : "fv") << "\n";
    out << "tau = " << fmt(cfg.jko.tau) << "\nepsilon = " << fmt(cfg.jko.epsilon)
        << "\nc_eps = " << fmt(cfg.jko.c_eps) << "\ninner_tol = " << fmt(cfg.jko.inner_tol)
        << "\ninner_max = " << cfg.jko.inner_max << "\nouter_max = " << cfg.jko.outer_max
        << "\nouter_tol = " << fmt(cfg.jko.outer_tol)
        << "\nmass_projection = " << (cfg.jko.mass_projection ? "true" : "false")
        << "\ndebias_prox = " << (cfg.jko.debias_prox ? "true" : "false")
        << "\nreport_tol = " << fmt(cfg.jko.report_tol) << "\ninf_f_estimate = "
        << (std::isnan(cfg.jko.inf_f_estimate) ? "nan" : fmt(cfg.jko.inf_f_estimate))
        << "\ndt_safety = " << fmt(cfg.fv.dt_safety) << "\nmax_dt = " << fmt(cfg.fv.max_dt)
        << "\nfloor = " << fmt(cfg.fv.floor) << "\n";
    out << "\n[run]\nT = " << fmt(cfg.horizon) << "\nsnapshot_every = " << cfg.snapshot_every
        << "\nsnapshots_raw = " << (cfg.snapshots_raw ? "true" : "false")
        << "\nheatmaps = " << (cfg.heatmaps ? "true" : "false") << "\nout = " << cfg.out_dir
        << "\nseed = " << cfg.seed << "\n";
    return out.str();
}

}  // namespace pks
