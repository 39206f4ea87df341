#pragma once

#include <string>
#include <vector>

#include "pks/functionals.hpp"
#include "pks/grid.hpp"

namespace pks {

/// One diagnostics row. Fields that only exist for the JKO scheme (step
/// distances, admissibility margin) hold NaN in finite-volume runs.
struct StepRecord {
    double t = 0.0;
    std::vector<double> mass;
    Vec2 com;
    double m2 = 0.0;
    double upsilon = 0.0;  // p = 1.5 radial moment
    EnergyBreakdown energy;
    double dw2_step = 0.0;            // sum of per-species squared step distances
    std::vector<double> dw2_species;  // per-species (empty for fv)
    double admissibility = 0.0;
    double max_density = 0.0;
    double boundary_fraction = 0.0;
};

struct TimeSeries {
    std::vector<StepRecord> rows;
    std::string stop_reason = "horizon";
    /// Snapshot states (always includes t=0 when snapshots are kept).
    std::vector<double> snapshot_times;
    std::vector<DensityField> snapshots;
};

}  // namespace pks
