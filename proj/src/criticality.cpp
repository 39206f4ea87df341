#include "pks/criticality.hpp"

#include <cmath>
#include <limits>

namespace pks {

namespace {
constexpr double kEightPi = 8.0 * M_PI;

void check_inputs(const InteractionMatrix& A, const std::vector<double>& beta) {
    if (static_cast<int>(beta.size()) != A.species())
        throw DimensionError("mass vector size does not match interaction matrix");
    for (double b : beta)
        if (!(b > 0.0)) throw ConfigError("masses must be strictly positive");
}
}  // namespace

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::SubCritical: return "SubCritical";
        case Regime::Critical: return "Critical";
        case Regime::SuperCritical: return "SuperCritical";
        case Regime::Inadmissible: return "Inadmissible";
    }
    return "?";
}

double lambda_subset(const InteractionMatrix& A, const std::vector<double>& beta,
                     std::uint32_t subset_mask) {
    check_inputs(A, beta);
    if (subset_mask == 0) throw ConfigError("subset must be nonempty");
    const int n = A.species();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(subset_mask & (1u << i))) continue;
        double row = 0.0;
        for (int j = 0; j < n; ++j)
            if (subset_mask & (1u << j)) row += A.a(i, j) * beta[j];
        acc += beta[i] * (kEightPi - row);
    }
    return acc;
}

double lambda_weighted(const InteractionMatrix& A, const std::vector<double>& beta,
                       const std::vector<double>& b, std::uint32_t subset_mask) {
    check_inputs(A, beta);
    if (subset_mask == 0) throw ConfigError("subset must be nonempty");
    if (b.size() != beta.size()) throw DimensionError("weight vector size mismatch");
    for (double w : b)
        if (!(w > 0.0)) throw ConfigError("weights must be strictly positive");
    const int n = A.species();
    double lin = 0.0, quad = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(subset_mask & (1u << i))) continue;
        lin += b[i] * beta[i];
        for (int j = 0; j < n; ++j)
            if (subset_mask & (1u << j)) quad += A.a(i, j) * beta[i] * beta[j];
    }
    return kEightPi * lin - quad;
}

RegimeReport classify(const InteractionMatrix& A, const std::vector<double>& beta,
                      double tol) {
    check_inputs(A, beta);
    const int n = A.species();
    if (n > 20) throw ConfigError("subset enumeration limited to n <= 20 species");

    double beta_sum = 0.0;
    for (double b : beta) beta_sum += b;
    RegimeReport rep;
    rep.tolerance = tol * kEightPi * beta_sum;

    const std::uint32_t full = (n == 20) ? 0xFFFFFu : ((1u << n) - 1u);
    double min_lambda = std::numeric_limits<double>::infinity();
    double min_proper = std::numeric_limits<double>::infinity();
    for (std::uint32_t J = 1; J <= full; ++J) {
        const double l = lambda_subset(A, beta, J);
        rep.lambda_values[J] = l;
        if (l < min_lambda) {
            min_lambda = l;
            rep.witness = J;
        }
        if (J != full && l < min_proper) min_proper = l;
    }
    const double lambda_I = rep.lambda_values[full];

    if (min_lambda > rep.tolerance) {
        rep.regime = Regime::SubCritical;
    } else if (min_lambda < -rep.tolerance) {
        rep.regime = Regime::SuperCritical;
    } else if (std::abs(lambda_I) <= rep.tolerance &&
               (n == 1 || min_proper > rep.tolerance)) {
        rep.regime = Regime::Critical;
    } else {
        // e.g. Lambda_I = 0 together with a vanishing proper subset value
        rep.regime = Regime::Inadmissible;
    }

    // Secondary admissibility condition: where some Lambda_J vanishes, each
    // i in J must have a_ii + Lambda_{J \ {i}} > 0. With positive diagonals
    // this never binds; it is recorded for reporting only.
    for (const auto& [J, l] : rep.lambda_values) {
        if (std::abs(l) > rep.tolerance) continue;
        for (int i = 0; i < n; ++i) {
            if (!(J & (1u << i))) continue;
            const std::uint32_t rest = J & ~(1u << i);
            const double lrest = rest == 0 ? 0.0 : rep.lambda_values.at(rest);
            if (!(A.a(i, i) + lrest > 0.0)) rep.secondary_condition_violated = true;
        }
    }
    return rep;
}

std::pair<InteractionMatrix, std::vector<double>> two_species_map(
    double chi1, double chi2, const std::vector<double>& beta_tilde) {
    if (!(chi1 > 0.0) || !(chi2 > 0.0))
        throw ConfigError("two-species sensitivities must be positive");
    if (beta_tilde.size() != 2) throw ConfigError("two-species map needs a 2-vector of masses");
    for (double b : beta_tilde)
        if (!(b > 0.0)) throw ConfigError("masses must be strictly positive");
    Eigen::MatrixXd a(2, 2);
    a << chi1 * chi1, chi1 * chi2, chi1 * chi2, chi2 * chi2;
    return {InteractionMatrix::make(a), {beta_tilde[0] / chi1, beta_tilde[1] / chi2}};
}

std::optional<double> blowup_time_bound(const InteractionMatrix& A,
                                        const std::vector<double>& beta,
                                        double second_moment_initial) {
    if (!(second_moment_initial > 0.0))
        throw ConfigError("initial second moment must be positive");
    const std::uint32_t full = (1u << A.species()) - 1u;
    const double lambda_I = lambda_subset(A, beta, full);
    if (lambda_I >= 0.0) return std::nullopt;
    return -2.0 * M_PI * second_moment_initial / lambda_I;
}

}  // namespace pks
