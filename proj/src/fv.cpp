#include "pks/fv.hpp"

#include <cmath>

#include "pks/grid_ot.hpp"

namespace pks {

namespace {

double max_face_speed(const DensityField& state, const InteractionMatrix& A,
                      const PotentialField& pot) {
    const int n = state.grid.cells_per_side;
    const double invh = 1.0 / state.grid.spacing;
    double vmax = 0.0;
    for (int i = 0; i < state.species(); ++i) {
        // Face velocities are potential differences across the face; the cell
        // loop below recomputes them, here only the magnitude matters.
        Field u = Field::Zero(n, n);
        for (int j = 0; j < state.species(); ++j) {
            const double a = A.a(i, j);
            if (a != 0.0) u += a * pot.u[j];
        }
        for (int r = 0; r + 1 < n; ++r)
            for (int c = 0; c < n; ++c)
                vmax = std::max(vmax, std::abs(u(r + 1, c) - u(r, c)) * invh);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c + 1 < n; ++c)
                vmax = std::max(vmax, std::abs(u(r, c + 1) - u(r, c)) * invh);
    }
    if (!std::isfinite(vmax)) throw NumericalError("non-finite advection speed");
    return vmax;
}

}  // namespace

double cfl_dt(const DensityField& state, const InteractionMatrix& A, const FvConfig& cfg,
              const PotentialField& pot) {
    if (!(cfg.dt_safety > 0.0) || cfg.dt_safety > 1.0)
        throw ConfigError("dt_safety must lie in (0, 1]");
    const double h = state.grid.spacing;
    const double vmax = max_face_speed(state, A, pot);
    const double dt = cfg.dt_safety / (4.0 / (h * h) + 4.0 * vmax / h);
    return std::min(dt, cfg.max_dt);
}

DensityField fv_step(const DensityField& state, const InteractionMatrix& A, double dt,
                     const PotentialField& pot) {
    const GridSpec& g = state.grid;
    const int n = g.cells_per_side;
    const double h = g.spacing;
    const double invh = 1.0 / h;
    if (state.species() != A.species()) throw DimensionError("fv species mismatch");

    DensityField next = state;
    for (int s = 0; s < state.species(); ++s) {
        Field u = Field::Zero(n, n);
        for (int j = 0; j < state.species(); ++j) {
            const double a = A.a(s, j);
            if (a != 0.0) u += a * pot.u[j];
        }
        const Field& rho = state.values[s];
        Field& out = next.values[s];

        // Flux on the face between (r,c) and (r+1,c):
        //   diffusion  -(rho_R - rho_L)/h, advection v * upwind(rho),
        //   v = (u_R - u_L)/h (attractive drift points up the potential).
        // No-flux walls: boundary faces carry zero flux, so the update
        // telescopes and conserves mass to round-off.
        Field fx = Field::Zero(n + 1, n);  // fx(r,c): face below cell r in x
        Field fy = Field::Zero(n, n + 1);
        for (int r = 0; r + 1 < n; ++r)
            for (int c = 0; c < n; ++c) {
                const double v = (u(r + 1, c) - u(r, c)) * invh;
                const double upw = v >= 0.0 ? rho(r, c) : rho(r + 1, c);
                fx(r + 1, c) = v * upw - (rho(r + 1, c) - rho(r, c)) * invh;
            }
        for (int r = 0; r < n; ++r)
            for (int c = 0; c + 1 < n; ++c) {
                const double v = (u(r, c + 1) - u(r, c)) * invh;
                const double upw = v >= 0.0 ? rho(r, c) : rho(r, c + 1);
                fy(r, c + 1) = v * upw - (rho(r, c + 1) - rho(r, c)) * invh;
            }
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                const double div = (fx(r + 1, c) - fx(r, c) + fy(r, c + 1) - fy(r, c)) * invh;
                const double val = rho(r, c) - dt * div;
                if (val < 0.0) {
                    if (val < -1e-13 * std::max(1.0, rho(r, c)))
                        throw NumericalError("fv step produced a negative cell (CFL violation)");
                    out(r, c) = 0.0;
                } else {
                    out(r, c) = val;
                }
            }
    }
    return next;
}

namespace {

StepRecord fv_record(double t, const DensityField& state, const InteractionMatrix& A,
                     const PotentialField& pot) {
    StepRecord row;
    row.t = t;
    row.mass = mass(state);
    row.com = center_of_mass(state);
    row.m2 = second_moment(state);
    row.upsilon = upsilon_moment(state, 1.5);
    row.energy = free_energy(state, A, pot);
    double peak = 0.0;
    for (int i = 0; i < state.species(); ++i)
        peak = std::max(peak, peak_density(state, i).first);
    row.max_density = peak;
    row.boundary_fraction = boundary_mass_fraction(state);
    row.dw2_step = std::numeric_limits<double>::quiet_NaN();
    row.admissibility = std::numeric_limits<double>::quiet_NaN();
    return row;
}

}  // namespace

TimeSeries fv_run(const DensityField& initial, const InteractionMatrix& A,
                  const FvConfig& cfg, double horizon, const FvRunOptions& opts) {
    if (!(horizon > 0.0)) throw ConfigError("fv_run needs a positive horizon");
    NewtonianSolver poisson(initial.grid);
    TimeSeries series;
    DensityField state = renormalize(initial);
    PotentialField pot = poisson.solve(state);

    StepRecord r0 = fv_record(0.0, state, A, pot);
    series.rows.push_back(r0);
    if (opts.sink) opts.sink(r0);
    series.snapshot_times.push_back(0.0);
    series.snapshots.push_back(state);

    const double area = state.grid.cell_area();
    double t = 0.0;
    double next_record = opts.record_every;
    long step_index = 0;
    while (t < horizon) {
        const double dt = std::min(cfl_dt(state, A, cfg, pot), horizon - t);
        DensityField next = state;
        try {
            next = fv_step(state, A, dt, pot);
        } catch (const NumericalError&) {
            series.stop_reason = "numerical_failure";
            break;
        }
        state = std::move(next);
        t += dt;
        ++step_index;
        pot = poisson.solve(state);

        const bool record = opts.record_every <= 0.0 || t + 1e-15 >= next_record ||
                            t >= horizon;
        if (record) {
            next_record += opts.record_every;
            StepRecord row = fv_record(t, state, A, pot);
            series.rows.push_back(row);
            if (opts.sink) opts.sink(row);
        }
        if (opts.snapshot_every > 0 && step_index % opts.snapshot_every == 0) {
            series.snapshot_times.push_back(t);
            series.snapshots.push_back(state);
        }

        bool concentrated = false;
        for (int i = 0; i < state.species(); ++i)
            if (peak_density(state, i).first > state.target_mass[i] / (4.0 * area))
                concentrated = true;
        if (concentrated) {
            if (series.rows.back().t != t) {
                StepRecord row = fv_record(t, state, A, pot);
                series.rows.push_back(row);
                if (opts.sink) opts.sink(row);
            }
            series.stop_reason = "concentration";
            break;
        }
    }
    if (series.rows.back().t != t && series.stop_reason == "horizon") {
        StepRecord row = fv_record(t, state, A, pot);
        series.rows.push_back(row);
        if (opts.sink) opts.sink(row);
    }
    if (series.snapshot_times.back() != t) {
        series.snapshot_times.push_back(t);
        series.snapshots.push_back(state);
    }
    return series;
}

namespace {

// Least-squares slope of ln(d) vs ln(|dt|) over all snapshot pairs.
void fit_holder(const TimeSeries& s, double& expo, double& constant) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < s.snapshots.size(); ++i)
        for (size_t j = i + 1; j < s.snapshots.size(); ++j) {
            const double dt = std::abs(s.snapshot_times[j] - s.snapshot_times[i]);
            if (dt <= 0.0) continue;
            const double d = dw1_multi(s.snapshots[i], s.snapshots[j]);
            if (d <= 0.0) continue;
            lx.push_back(std::log(dt));
            ly.push_back(std::log(d));
        }
    if (lx.size() < 2) {
        expo = 0.0;
        constant = 0.0;
        return;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
    }
    const double m = static_cast<double>(lx.size());
    expo = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    constant = std::exp((sy - expo * sx) / m);
}

}  // namespace

CrossValidation cross_validate(const TimeSeries& a, const TimeSeries& b,
                               CompareMetric metric) {
    CrossValidation cv;
    if (a.snapshots.empty() || b.snapshots.empty())
        throw ConfigError("cross_validate needs snapshots");
    if (!a.snapshots.front().grid.same_as(b.snapshots.front().grid))
        throw DimensionError("cross_validate needs a common grid");

    // Match snapshot times within half the coarser cadence.
    for (size_t i = 0; i < a.snapshot_times.size(); ++i) {
        size_t best = 0;
        double bestgap = 1e300;
        for (size_t j = 0; j < b.snapshot_times.size(); ++j) {
            const double gap = std::abs(a.snapshot_times[i] - b.snapshot_times[j]);
            if (gap < bestgap) {
                bestgap = gap;
                best = j;
            }
        }
        const double scale = std::max(1e-12, a.snapshot_times.back() * 0.02);
        if (bestgap > scale) continue;
        double d = 0.0;
        if (metric == CompareMetric::DW1) {
            d = dw1_multi(a.snapshots[i], b.snapshots[best]);
        } else {
            const auto& fa = a.snapshots[i];
            const auto& fb = b.snapshots[best];
            for (int s = 0; s < fa.species(); ++s)
                d += (fa.values[s] - fb.values[s]).abs().sum() * fa.grid.cell_area();
        }
        cv.times.push_back(a.snapshot_times[i]);
        cv.distance.push_back(d);
        cv.max_distance = std::max(cv.max_distance, d);
    }
    fit_holder(a, cv.holder_exponent_a, cv.holder_constant_a);
    fit_holder(b, cv.holder_exponent_b, cv.holder_constant_b);
    return cv;
}

}  // namespace pks
