#include "pks/jko.hpp"

#include <cmath>

namespace pks {

namespace {

double pick_epsilon(const GridSpec& grid, const JkoConfig& cfg) {
    if (cfg.epsilon > 0.0) return cfg.epsilon;
    return std::max(cfg.eps_min, cfg.c_eps * grid.spacing * grid.spacing);
}

StepRecord make_record(double t, const DensityField& state, const InteractionMatrix& A,
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

JkoSolver::JkoSolver(const GridSpec& grid, const InteractionMatrix& A,
                     const JkoConfig& cfg)
    : A_(A), cfg_(cfg), eps_(pick_epsilon(grid, cfg)), ot_(grid, eps_), poisson_(grid) {
    if (!(cfg.tau > 0.0)) throw ConfigError("jko needs tau > 0");
    if (!(cfg.inner_tol > 0.0) || !(cfg.outer_tol > 0.0) || !(cfg.report_tol > 0.0))
        throw ConfigError("jko tolerances must be positive");
}

double JkoSolver::inf_f_estimate() const {
    if (std::isfinite(cfg_.inf_f_estimate)) return cfg_.inf_f_estimate;
    return std::isfinite(running_min_f_) ? running_min_f_ - 1.0 : -1e9;
}

Field JkoSolver::effective_potential(const DensityField& ref, const PotentialField& pot,
                                     int species) const {
    const int n = ref.grid.cells_per_side;
    Field v = Field::Zero(n, n);
    for (int j = 0; j < ref.species(); ++j) {
        const double a = A_.a(species, j);
        if (a != 0.0) v -= a * pot.u[j];
    }
    if (cfg_.debias_prox) {
        // Frozen self-transport dual phi = f_sym + eps ln(q/beta); subtracting
        // phi/(2 tau) from the potential turns the plain entropic prox into a
        // Sinkhorn-divergence prox to first order. ln is capped so empty cells
        // do not force the iterate to zero there.
        const double area = ref.grid.cell_area();
        const Field q = ref.values[species] * area;
        const double beta = q.sum();
        const auto sym = ot_.symmetric(q, cfg_.inner_tol, cfg_.inner_max);
        const double cap = -650.0;
        for (int k = 0; k < n * n; ++k) {
            const double qh = q(k) / beta;
            const double lnq = qh > 0.0 ? std::max(std::log(qh), cap) : cap;
            v(k) -= (sym.f(k) + eps_ * lnq) / (2.0 * cfg_.tau);
        }
    }
    return v;
}

std::pair<DensityField, JkoStepReport> JkoSolver::step(const DensityField& state) {
    const GridSpec& grid = state.grid;
    const int n = grid.cells_per_side;
    const double area = grid.cell_area();
    const int ns = state.species();
    if (ns != A_.species()) throw DimensionError("state species do not match matrix");
    if (warm_f_.empty()) warm_f_.assign(ns, Field::Zero(n, n));

    JkoStepReport rep;
    PotentialField pot = poisson_.solve(state);
    rep.energy_before = free_energy(state, A_, pot);
    running_min_f_ = std::min(running_min_f_, rep.energy_before.free_energy);
    rep.admissibility_margin = inf_f_estimate() + second_moment(state) / (2.0 * cfg_.tau) -
                               rep.energy_before.free_energy;

    DensityField next = state;
    std::vector<Field> veff(ns);
    for (int i = 0; i < ns; ++i) veff[i] = effective_potential(state, pot, i);

    rep.inner_iterations = 0;
    rep.converged = true;
    DensityField candidate = state;
    for (int outer = 0;; ++outer) {
        rep.outer_iterations = outer;
        for (int i = 0; i < ns; ++i) {
            const Field q = state.values[i] * area;
            GridOt::ProxResult pr;
            try {
                pr = ot_.prox_step(q, veff[i], cfg_.tau, cfg_.inner_tol, cfg_.inner_max,
                                   &warm_f_[i]);
            } catch (const NumericalError& e) {
                throw NumericalError("jko prox failed for species " + std::to_string(i + 1) +
                                     ": " + e.what());
            }
            rep.inner_iterations += pr.iterations;
            if (!pr.converged) rep.converged = false;
            warm_f_[i] = pr.f;
            candidate.values[i] = pr.p / area;
        }
        if (outer >= cfg_.outer_max) break;
        // Fixed-point refresh: rebuild interaction potentials (and the
        // debiasing dual) from the candidate, stop when they settle.
        const PotentialField pot_new = poisson_.solve(candidate);
        double rel_change = 0.0;
        std::vector<Field> veff_new(ns);
        for (int i = 0; i < ns; ++i) {
            veff_new[i] = effective_potential(candidate, pot_new, i);
            const double scale = std::max(1.0, veff[i].abs().maxCoeff());
            rel_change = std::max(rel_change,
                                  (veff_new[i] - veff[i]).abs().maxCoeff() / scale);
        }
        veff = std::move(veff_new);
        if (rel_change < cfg_.outer_tol) break;
    }
    next = candidate;

    // Mass projection and defect bookkeeping.
    rep.mass_defect = 0.0;
    const auto masses = mass(next);
    for (int i = 0; i < ns; ++i)
        rep.mass_defect = std::max(rep.mass_defect,
                                   std::abs(masses[i] - next.target_mass[i]) /
                                       next.target_mass[i]);
    if (cfg_.mass_projection) next = renormalize(next);

    // Diagnostics: debiased step distances, energies, production terms.
    rep.dw2.resize(ns);
    for (int i = 0; i < ns; ++i) {
        rep.dw2[i] = ot_.debiased_distance_sq(next.values[i] * area,
                                              state.values[i] * area,
                                              cfg_.report_tol, cfg_.inner_max);
        if (rep.dw2[i] < 0.0) rep.dw2[i] = 0.0;  // debiasing noise near zero
    }
    const PotentialField pot_after = poisson_.solve(next);
    rep.energy_after = free_energy(next, A_, pot_after);
    running_min_f_ = std::min(running_min_f_, rep.energy_after.free_energy);
    rep.production_lhs.resize(ns);
    for (int i = 0; i < ns; ++i)
        rep.production_lhs[i] = rep.dw2[i] / (cfg_.tau * cfg_.tau);
    rep.production_rhs = dissipation_by_species(next, A_, pot_after);
    rep.concentration.resize(ns);
    for (int i = 0; i < ns; ++i) {
        const double threshold = next.target_mass[i] / (4.0 * area);
        rep.concentration[i] = peak_density(next, i).first > threshold;
    }
    return {next, rep};
}

TimeSeries jko_run(const DensityField& initial, const InteractionMatrix& A,
                   const JkoConfig& cfg, double horizon, const JkoRunOptions& opts) {
    if (!(horizon > 0.0)) throw ConfigError("jko_run needs a positive horizon");
    JkoSolver solver(initial.grid, A, cfg);
    TimeSeries series;

    DensityField state = renormalize(initial);
    {
        NewtonianSolver poisson(initial.grid);
        StepRecord r0 = make_record(0.0, state, A, poisson.solve(state));
        series.rows.push_back(r0);
        if (opts.sink) opts.sink(r0);
    }
    series.snapshot_times.push_back(0.0);
    series.snapshots.push_back(state);

    const int steps = static_cast<int>(std::ceil(horizon / cfg.tau));
    int failed_streak = 0;
    for (int k = 1; k <= steps; ++k) {
        const double t = k * cfg.tau;
        DensityField next = state;
        JkoStepReport rep;
        try {
            std::tie(next, rep) = solver.step(state);
        } catch (const NumericalError&) {
            series.stop_reason = "numerical_failure";
            break;
        }

        state = next;
        StepRecord row;
        row.t = t;
        row.mass = mass(state);
        row.com = center_of_mass(state);
        row.m2 = second_moment(state);
        row.upsilon = upsilon_moment(state, 1.5);
        row.energy = rep.energy_after;
        row.dw2_species = rep.dw2;
        row.dw2_step = 0.0;
        for (double d : rep.dw2) row.dw2_step += d;
        row.admissibility = rep.admissibility_margin;
        double peak = 0.0;
        for (int i = 0; i < state.species(); ++i)
            peak = std::max(peak, peak_density(state, i).first);
        row.max_density = peak;
        row.boundary_fraction = boundary_mass_fraction(state);
        series.rows.push_back(row);
        if (opts.sink) opts.sink(row);

        const bool want_snapshot =
            opts.keep_all_states ||
            (opts.snapshot_every > 0 && k % opts.snapshot_every == 0);
        if (want_snapshot) {
            series.snapshot_times.push_back(t);
            series.snapshots.push_back(state);
        }

        bool concentrated = false;
        for (bool c : rep.concentration) concentrated |= c;
        if (concentrated) {
            series.stop_reason = "concentration";
            break;
        }
        failed_streak = rep.converged ? 0 : failed_streak + 1;
        if (failed_streak >= 2) {
            series.stop_reason = "concentration_sinkhorn_stall";
            break;
        }
    }
    if (series.snapshot_times.back() != series.rows.back().t) {
        series.snapshot_times.push_back(series.rows.back().t);
        series.snapshots.push_back(state);
    }
    return series;
}

std::vector<double> production_identity_report(const JkoStepReport& report) {
    std::vector<double> gaps(report.dw2.size(), 0.0);
    for (size_t i = 0; i < gaps.size(); ++i) {
        const double lhs = report.production_lhs[i];
        const double rhs = report.production_rhs[i];
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        gaps[i] = std::abs(lhs - rhs) / scale;
    }
    return gaps;
}

// --- weak-form residual ----------------------------------------------------

namespace {

struct XiEval {
    Field psi;       // spatial part
    Field dpsi_dx;
    Field dpsi_dy;
};

XiEval eval_test_function(const GridSpec& g, const TestFunction& xi) {
    const int n = g.cells_per_side;
    XiEval e;
    e.psi.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = g.coord(i), y = g.coord(j);
            const double s2 = (x * x + y * y) / (xi.radius * xi.radius);
            double bump = 0.0;
            if (s2 < 1.0) {
                const double c = 1.0 - s2;
                bump = c * c * c;
            }
            double poly = 1.0;
            if (xi.kind == TestFunction::Kind::Linear)
                poly = x * xi.direction.x + y * xi.direction.y;
            else if (xi.kind == TestFunction::Kind::Quadratic)
                poly = x * x + y * y;
            e.psi(i, j) = poly * bump;
        }
    gradient(g, e.psi, e.dpsi_dx, e.dpsi_dy);
    return e;
}

}  // namespace

double weak_residual_jko(const TimeSeries& series, const InteractionMatrix& A,
                         const TestFunction& xi) {
    if (series.snapshots.size() != series.rows.size())
        throw ConfigError("weak residual needs a series with every state retained");
    if (series.snapshots.size() < 2) throw ConfigError("weak residual needs >= 2 states");

    const GridSpec& g = series.snapshots.front().grid;
    const double area = g.cell_area();
    const int ns = series.snapshots.front().species();
    const double T = series.rows.back().t;
    const auto gfun = [T](double t) {
        const double c = 1.0 - t / T;
        return c * c;
    };
    // int_a^b (1 - t/T)^2 dt
    const auto gint = [T](double a, double b) {
        const auto F = [T](double t) {
            const double c = 1.0 - t / T;
            return -T * c * c * c / 3.0;
        };
        return F(b) - F(a);
    };

    const XiEval e = eval_test_function(g, xi);
    NewtonianSolver poisson(g);

    double worst = 0.0;
    std::vector<double> resid(ns, 0.0);
    // + int xi(0) rho^0
    for (int i = 0; i < ns; ++i)
        resid[i] += gfun(0.0) * (e.psi * series.snapshots.front().values[i]).sum() * area;

    Field drx, dry;
    for (size_t k = 1; k < series.snapshots.size(); ++k) {
        const DensityField& rho = series.snapshots[k];
        const double t0 = series.rows[k - 1].t, t1 = series.rows[k].t;
        const PotentialField pot = poisson.solve(rho);
        const auto vel = drift_velocity(pot, A);
        for (int i = 0; i < ns; ++i) {
            // time-derivative part, exact in time on the slab
            resid[i] += (gfun(t1) - gfun(t0)) * (e.psi * rho.values[i]).sum() * area;
            // flux part: grad xi . (grad rho - rho sum a grad u)
            gradient(g, rho.values[i], drx, dry);
            const double flux =
                ((e.dpsi_dx * (drx - rho.values[i] * vel[i].first)) +
                 (e.dpsi_dy * (dry - rho.values[i] * vel[i].second)))
                    .sum() *
                area;
            resid[i] -= gint(t0, t1) * flux;
        }
    }
    for (int i = 0; i < ns; ++i) worst = std::max(worst, std::abs(resid[i]));
    return worst;
}

}  // namespace pks
