#pragma once

#include "pks/potential.hpp"
#include "pks/series.hpp"

namespace pks {

struct FvConfig {
    double dt_safety = 0.4;   // in (0, 1]
    double max_dt = 1e9;      // hard cap
    double floor = 0.0;       // vacuum threshold (diagnostics only)
};

/// Stable explicit step size: dt_safety / (4/h^2 + 4 max|v|/h), which is at
/// most dt_safety * min(h^2/4, h/max|v|) and keeps the conservative upwind
/// update positivity-preserving.
double cfl_dt(const DensityField& state, const InteractionMatrix& A, const FvConfig& cfg,
              const PotentialField& pot);

/// One conservative explicit step: centered diffusion fluxes, first-order
/// upwind advection with face velocities from the potential differences,
/// no-flux walls. Throws on a negative cell (CFL violation).
DensityField fv_step(const DensityField& state, const InteractionMatrix& A, double dt,
                     const PotentialField& pot);

struct FvRunOptions {
    int snapshot_every = 0;  // in accepted steps; 0 keeps only first/last
    double record_every = 0.0;  // diagnostics cadence in time units (0: every step)
    std::function<void(const StepRecord&)> sink;
};

TimeSeries fv_run(const DensityField& initial, const InteractionMatrix& A,
                  const FvConfig& cfg, double horizon, const FvRunOptions& opts = {});

struct CrossValidation {
    std::vector<double> times;
    std::vector<double> distance;   // d_w1 between the two states per time
    double max_distance = 0.0;
    double holder_exponent_a = 0.0; // fitted |t-s|^alpha modulus of series A
    double holder_exponent_b = 0.0;
    double holder_constant_a = 0.0;
    double holder_constant_b = 0.0;
};

enum class CompareMetric { DW1, L1 };

/// Compares two trajectories at shared snapshot times and fits the Holder
/// modulus of each trajectory in d_w1.
CrossValidation cross_validate(const TimeSeries& a, const TimeSeries& b,
                               CompareMetric metric = CompareMetric::DW1);

}  // namespace pks
