#include "pks/diagnostics.hpp"

#include <cmath>

#include "pks/grid_ot.hpp"

namespace pks {

SlopeCheck check_second_moment_law(const TimeSeries& series, const InteractionMatrix& A,
                                   const std::vector<double>& beta) {
    if (series.rows.size() < 20)
        throw ConfigError("second-moment fit needs at least 20 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(series.rows.size());
    for (const auto& r : series.rows) {
        sx += r.t;
        sy += r.m2;
        sxx += r.t * r.t;
        sxy += r.t * r.m2;
    }
    SlopeCheck out;
    out.fitted = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const std::uint32_t full = (1u << A.species()) - 1u;
    out.predicted = lambda_subset(A, beta, full) / (2.0 * M_PI);
    const double scale = std::max(std::abs(out.predicted), 1e-300);
    out.relative_error = std::abs(out.fitted - out.predicted) / scale;
    return out;
}

TelescopingCheck check_telescoping(const TimeSeries& series, Regime regime) {
    if (regime != Regime::Critical)
        throw ConfigError("telescoping identity applies to critical runs only");
    if (series.rows.size() < 2) throw ConfigError("telescoping needs at least one step");
    TelescopingCheck out;
    const double m2_0 = series.rows.front().m2;
    const double noise_floor = 1e-6 * m2_0;
    double dw2_sum = 0.0;
    for (size_t k = 1; k < series.rows.size(); ++k) {
        const double dw2 = series.rows[k].dw2_step;
        if (std::isnan(dw2)) throw ConfigError("telescoping needs jko step distances");
        const double dm2 = series.rows[k - 1].m2 - series.rows[k].m2;
        dw2_sum += dw2;
        if (std::abs(dm2) < noise_floor) continue;
        out.max_step_defect =
            std::max(out.max_step_defect, std::abs(dw2 - dm2) / std::abs(dm2));
        ++out.steps_checked;
    }
    const double total_drop = m2_0 - series.rows.back().m2;
    out.cumulative_defect =
        std::abs(dw2_sum - total_drop) / std::max(std::abs(total_drop), noise_floor);
    return out;
}

namespace {

// d_w1(rho_i, beta_i delta_c) = beta^{-1/2} int |x - c| rho_i: the coupling to
// a point mass is unique.
double dw1_to_point(const DensityField& f, int species, Vec2 c) {
    const auto& g = f.grid;
    double acc = 0.0;
    for (int i = 0; i < g.cells_per_side; ++i) {
        const double dx = g.coord(i) - c.x;
        for (int j = 0; j < g.cells_per_side; ++j) {
            const double dy = g.coord(j) - c.y;
            acc += std::hypot(dx, dy) * f.values[species](i, j);
        }
    }
    return acc * g.cell_area() / std::sqrt(f.target_mass[species]);
}

}  // namespace

ConcentrationReport detect_concentration(const TimeSeries& series) {
    if (series.snapshots.empty()) throw ConfigError("detect_concentration needs snapshots");
    ConcentrationReport rep;
    const DensityField& last = series.snapshots.back();
    const int ns = last.species();
    const Vec2 com = center_of_mass(last);

    // Common concentration point: mean of the species peak locations.
    double px = 0.0, py = 0.0;
    std::vector<Vec2> peaks(ns);
    for (int i = 0; i < ns; ++i) {
        peaks[i] = peak_density(last, i).second;
        px += peaks[i].x;
        py += peaks[i].y;
    }
    rep.common_point = {px / ns, py / ns};
    for (int i = 0; i < ns; ++i)
        rep.peak_spread = std::max(rep.peak_spread,
                                   std::hypot(peaks[i].x - rep.common_point.x,
                                              peaks[i].y - rep.common_point.y));

    // d_w1 to the Dirac at the COM across snapshots; trend over final quarter.
    const size_t count = series.snapshots.size();
    const size_t start = count > 4 ? count - 1 - (count - 1) / 4 : 0;
    rep.dw1_to_dirac_first.resize(ns);
    rep.dw1_to_dirac_last.resize(ns);
    bool decreasing = count >= 2;
    for (int i = 0; i < ns; ++i) {
        double prev = dw1_to_point(series.snapshots[start], i, com);
        rep.dw1_to_dirac_first[i] = prev;
        for (size_t k = start + 1; k < count; ++k) {
            const double cur = dw1_to_point(series.snapshots[k], i, com);
            if (cur > prev * 1.05) decreasing = false;
            prev = cur;
        }
        rep.dw1_to_dirac_last[i] = prev;
    }
    rep.trend_decreasing = decreasing;
    rep.concentrating = series.stop_reason.rfind("concentration", 0) == 0;
    return rep;
}

FisherInequalityReport fisher_inequality_report(const TimeSeries& series, double tau) {
    FisherInequalityReport rep;
    if (!(tau > 0.0)) throw ConfigError("fisher report needs tau > 0");
    double worst = -1e300;
    for (size_t k = 1; k < series.rows.size(); ++k) {
        const double dh = series.rows[k - 1].energy.entropy - series.rows[k].energy.entropy;
        const double q = series.rows[k].energy.fisher - (2.0 / tau) * dh;
        worst = std::max(worst, q);
        ++rep.steps;
    }
    rep.fitted_constant = rep.steps ? worst : 0.0;
    return rep;
}

double upsilon_envelope_constant(const TimeSeries& series) {
    if (series.rows.size() < 2) return 0.0;
    const double y0 = series.rows.front().upsilon;
    const double T = series.rows.back().t;
    const auto holds = [&](double c) {
        const double bound = std::exp(c * T) * (y0 + c * T);
        for (const auto& r : series.rows)
            if (r.upsilon > bound) return false;
        return true;
    };
    if (holds(0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (!holds(hi)) {
        hi *= 2.0;
        if (hi > 1e12) return hi;  // effectively unbounded growth
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (holds(mid) ? hi : lo) = mid;
    }
    return hi;
}

HolderFit holder_fit(const TimeSeries& series) {
    HolderFit fit;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < series.snapshots.size(); ++i)
        for (size_t j = i + 1; j < series.snapshots.size(); ++j) {
            const double dt = std::abs(series.snapshot_times[j] - series.snapshot_times[i]);
            if (dt <= 0.0) continue;
            const double d = dw1_multi(series.snapshots[i], series.snapshots[j]);
            if (d <= 0.0) continue;
            lx.push_back(std::log(dt));
            ly.push_back(std::log(d));
        }
    fit.pairs = static_cast<int>(lx.size());
    if (fit.pairs < 2) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < fit.pairs; ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
    }
    const double m = fit.pairs;
    fit.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.constant = std::exp((sy - fit.exponent * sx) / m);
    return fit;
}

double com_drift_rate(const TimeSeries& series) {
    if (series.rows.size() < 2) return 0.0;
    const Vec2 c0 = series.rows.front().com;
    double worst = 0.0;
    for (const auto& r : series.rows) {
        if (r.t <= 0.0) continue;
        const double d = std::hypot(r.com.x - c0.x, r.com.y - c0.y);
        worst = std::max(worst, d / r.t);
    }
    return worst;
}

}  // namespace pks
