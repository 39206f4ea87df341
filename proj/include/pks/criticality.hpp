#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "pks/grid.hpp"

namespace pks {

enum class Regime { SubCritical, Critical, SuperCritical, Inadmissible };

const char* regime_name(Regime r);

/// Result of classifying a mass vector against the interaction matrix.
///
/// lambda_values maps each nonempty subset J of {1..n} (encoded as a bitmask)
/// to Lambda_J(beta). The full set I always has key (1<<n)-1.
struct RegimeReport {
    Regime regime = Regime::Inadmissible;
    std::map<std::uint32_t, double> lambda_values;
    std::uint32_t witness = 0;  // subset attaining the minimum Lambda_J
    double tolerance = 0.0;     // absolute tolerance used for Lambda_I ~ 0
    /// True when some J has Lambda_J = 0 (within tol) but a_ii +
    /// Lambda_{J\{i}} <= 0 for some i in J; reported, never acted on.
    bool secondary_condition_violated = false;
};

/// Lambda_J(beta) = sum_{i in J} beta_i (8 pi - sum_{j in J} a_ij beta_j).
double lambda_subset(const InteractionMatrix& A, const std::vector<double>& beta,
                     std::uint32_t subset_mask);

/// Weighted variant: 8 pi sum_{i in J} b_i beta_i - sum_{i,j in J} a_ij beta_i beta_j.
double lambda_weighted(const InteractionMatrix& A, const std::vector<double>& beta,
                       const std::vector<double>& b, std::uint32_t subset_mask);

/// Exhaustive 2^n - 1 subset classification; n <= 20.
/// tol is relative to the 8 pi sum(beta) scale.
RegimeReport classify(const InteractionMatrix& A, const std::vector<double>& beta,
                      double tol = 1e-10);

/// Maps the two-species single-chemoattractant model with sensitivities
/// (chi1, chi2) and masses beta_tilde onto the symmetric form:
/// a_ij = chi_i chi_j, beta_i = beta_tilde_i / chi_i.
std::pair<InteractionMatrix, std::vector<double>> two_species_map(
    double chi1, double chi2, const std::vector<double>& beta_tilde);

/// -2 pi M2(0) / Lambda_I when Lambda_I < 0, otherwise no bound.
std::optional<double> blowup_time_bound(const InteractionMatrix& A,
                                        const std::vector<double>& beta,
                                        double second_moment_initial);

}  // namespace pks
