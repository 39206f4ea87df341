#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pks/grid.hpp"

namespace pks {

/// Weighted point cloud in the plane with total mass beta.
struct DiscreteMeasure {
    std::vector<Vec2> support;
    std::vector<double> weights;
    double total_mass = 0.0;

    int size() const { return static_cast<int>(support.size()); }
    static DiscreteMeasure make(std::vector<Vec2> pts, std::vector<double> w);
};

/// Collapses a density field species to a measure on cell centers, dropping
/// cells below the threshold (absolute density).
DiscreteMeasure measure_from_field(const DensityField& field, int species,
                                   double drop_below = 0.0);

struct OTResult {
    double squared_cost = 0.0;      // d_w^2 (or d_w1 cost for linear-cost solves)
    std::vector<double> dual_f;     // potential on mu
    std::vector<double> dual_g;     // potential on nu
    std::optional<Eigen::MatrixXd> plan;  // exact solver only, small instances
    int iterations = 0;
    double epsilon = 0.0;           // 0 for the exact solver
    bool converged = false;
    double marginal_error = 0.0;    // max relative marginal violation
};

enum class OTCost { SquaredEuclidean, Euclidean };

/// Exact discrete optimal transport by network simplex on the dense bipartite
/// graph. Mass-scaled convention: the reported cost is the optimum over plans
/// of total mass beta (so for |x-y|^2 it is d_w^2 directly).
/// Guards: support sizes <= 4096, total masses equal to 1e-9 relative.
OTResult exact_ot(const DiscreteMeasure& mu, const DiscreteMeasure& nu, OTCost cost);

/// Quadratic-cost wrapper: d_w^2(mu, nu).
OTResult exact_w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Kantorovich-Rubinstein distance with the beta^{1/2} normalization:
/// d_w1 = beta^{-1/2} * (optimal mass-beta linear cost). Exact solver.
double dw1_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct SinkhornOptions {
    int max_iter = 5000;
    double tol = 1e-9;     // max relative marginal violation
    bool debias = true;    // return the Sinkhorn divergence
};

/// Log-domain stabilized Sinkhorn on general supports (cost evaluated on the
/// fly; no cost matrix is stored). With debias the squared-cost field holds
/// S_eps = OT_eps(mu,nu) - OT_eps(mu,mu)/2 - OT_eps(nu,nu)/2.
/// Never silently wrong: if the marginal tolerance is not reached within
/// max_iter the result carries converged=false and the best iterate.
OTResult sinkhorn_w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             double epsilon, const SinkhornOptions& opts = {});

struct MultiDistanceOptions {
    double epsilon = 0.0;        // 0: adaptive max(eps_min, c_eps h^2)
    double c_eps = 4.0;
    double eps_min = 1e-12;
    double tol = 1e-8;
    int max_iter = 20000;
    int exact_below = 600;       // use the LP when both supports are this small
    double support_floor = 0.0;  // density threshold when extracting supports
};

/// Multi-species squared distance d_w(rho, eta)^2 = sum_i d_w^2(rho_i, eta_i);
/// debiased entropic at grid scale, exact LP when supports are small.
double dw_multi(const DensityField& rho, const DensityField& eta,
                const MultiDistanceOptions& opts = {});

}  // namespace pks
