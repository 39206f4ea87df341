#pragma once

#include "pks/criticality.hpp"
#include "pks/series.hpp"

namespace pks {

struct SlopeCheck {
    double fitted = 0.0;
    double predicted = 0.0;
    double relative_error = 0.0;
};

/// Least-squares dM2/dt against the Lambda_I/(2 pi) prediction over the
/// pre-stop window. Needs at least 20 samples.
SlopeCheck check_second_moment_law(const TimeSeries& series, const InteractionMatrix& A,
                                   const std::vector<double>& beta);

struct TelescopingCheck {
    double max_step_defect = 0.0;   // per-step, on steps above the noise floor
    double cumulative_defect = 0.0; // sum dw2 vs M2(0) - M2(end)
    int steps_checked = 0;
};

/// Per-step and cumulative defect of dw2_step = M2(k-1) - M2(k); refuses
/// unless the regime is Critical. Noise floor: steps with |dM2| below
/// 1e-6 * M2(0) are skipped in the per-step maximum.
TelescopingCheck check_telescoping(const TimeSeries& series, Regime regime);

struct ConcentrationReport {
    bool concentrating = false;
    Vec2 common_point{0.0, 0.0};     // mean of per-species peak locations
    double peak_spread = 0.0;        // max distance of a species peak from it
    std::vector<double> dw1_to_dirac_first;  // per species at the window start
    std::vector<double> dw1_to_dirac_last;
    bool trend_decreasing = false;   // over the final quarter, 5% slack
};

/// Tracks the closed-form d_w1(rho_i, beta_i delta_COM) and peak locations
/// over the retained snapshots.
ConcentrationReport detect_concentration(const TimeSeries& series);

struct FisherInequalityReport {
    double fitted_constant = 0.0;  // max_k fisher_k - (2/tau)(H_{k-1} - H_k)
    int steps = 0;
};
FisherInequalityReport fisher_inequality_report(const TimeSeries& series, double tau);

/// Smallest C >= 0 with upsilon_k <= e^{C T}(upsilon_0 + C T) for all rows.
double upsilon_envelope_constant(const TimeSeries& series);

struct HolderFit {
    double exponent = 0.0;
    double constant = 0.0;
    int pairs = 0;
};
/// Fits d_w1(rho(t), rho(s)) ~ C |t-s|^alpha over snapshot pairs.
HolderFit holder_fit(const TimeSeries& series);

/// Maximum COM displacement from the initial COM per unit time.
double com_drift_rate(const TimeSeries& series);

}  // namespace pks
