#pragma once

#include <functional>
#include <limits>
#include <memory>

#include "pks/grid_ot.hpp"
#include "pks/potential.hpp"
#include "pks/series.hpp"
#include "pks/transport.hpp"

namespace pks {

struct JkoConfig {
    double tau = 1e-3;
    double epsilon = 0.0;   // 0: adaptive max(eps_min, c_eps h^2)
    double c_eps = 4.0;
    double eps_min = 1e-12;
    double inner_tol = 1e-7;   // Sinkhorn marginal tolerance of the prox
    int inner_max = 20000;
    int outer_max = 0;         // potential refreshes per step (0 = semi-implicit)
    double outer_tol = 1e-4;   // relative potential change for the refresh loop
    bool mass_projection = true;
    /// Subtract the frozen self-transport dual from the step potential. This
    /// cancels the O(eps/tau) entropic smoothing of the plain prox; without it
    /// the scheme diffuses at rate 1 + eps/(2 tau) instead of 1.
    bool debias_prox = true;
    /// Estimate of inf F used by the admissibility margin; NaN means "running
    /// minimum of F seen so far, minus one unit of slack".
    double inf_f_estimate = std::numeric_limits<double>::quiet_NaN();
    double report_tol = 1e-7;  // tolerance of the reported debiased distances
};

struct JkoStepReport {
    std::vector<double> dw2;             // per-species debiased squared distance
    EnergyBreakdown energy_before;
    EnergyBreakdown energy_after;
    std::vector<double> production_lhs;  // dw2 / tau^2
    std::vector<double> production_rhs;  // per-species dissipation of the new state
    double admissibility_margin = 0.0;
    double mass_defect = 0.0;            // max relative defect before projection
    int outer_iterations = 0;
    int inner_iterations = 0;
    bool converged = true;
    std::vector<bool> concentration;     // peak above beta_i / (4 h^2)
};

/// Minimizing-movement stepper. One instance owns the transport and potential
/// workspaces plus per-species warm-started duals for a single trajectory.
class JkoSolver {
  public:
    JkoSolver(const GridSpec& grid, const InteractionMatrix& A, const JkoConfig& cfg);

    double epsilon() const { return eps_; }
    const JkoConfig& config() const { return cfg_; }

    /// One minimizing-movement step for every species.
    std::pair<DensityField, JkoStepReport> step(const DensityField& state);

    /// Current inf-F estimate used for admissibility margins.
    double inf_f_estimate() const;

  private:
    Field effective_potential(const DensityField& ref, const PotentialField& pot,
                              int species) const;

    InteractionMatrix A_;
    JkoConfig cfg_;
    double eps_;
    GridOt ot_;
    NewtonianSolver poisson_;
    std::vector<Field> warm_f_;       // prox duals per species
    double running_min_f_ = std::numeric_limits<double>::infinity();
};

struct JkoRunOptions {
    int snapshot_every = 0;        // 0: only initial and final snapshot
    bool keep_all_states = false;  // retain every iterate (weak-residual studies)
    std::function<void(const StepRecord&)> sink;  // streaming observer
};

TimeSeries jko_run(const DensityField& initial, const InteractionMatrix& A,
                   const JkoConfig& cfg, double horizon, const JkoRunOptions& opts = {});

/// Per-species relative gap between dw2/tau^2 and the dissipation integral.
std::vector<double> production_identity_report(const JkoStepReport& report);

// --- weak-form residual --------------------------------------------------

/// Compactly supported space test functions: poly(x) * bump(|x|/R) with
/// bump(s) = (1 - s^2)^3 on s < 1. Time factor (1 - t/T)^2.
struct TestFunction {
    enum class Kind { Constant, Linear, Quadratic } kind = Kind::Constant;
    Vec2 direction{1.0, 0.0};  // for Linear
    double radius = 1.0;
};

/// Discrete weak-form residual of the piecewise-constant interpolation, max
/// over species. The series must retain every iterate (keep_all_states).
double weak_residual_jko(const TimeSeries& series, const InteractionMatrix& A,
                         const TestFunction& xi);

}  // namespace pks
