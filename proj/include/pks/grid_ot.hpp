#pragma once

#include <Eigen/Dense>

#include "pks/grid.hpp"

namespace pks {

/// Separable log-domain entropic transport on one grid at one epsilon.
///
/// The quadratic cost factorizes across coordinates, so the Gibbs kernel is
/// applied as two stabilized N x N matrix products per sweep (O(N^3) instead
/// of O(N^4)); the cost matrix is never materialized. All public entry points
/// take cell MASS arrays (density times cell area).
///
/// Two dual conventions appear:
///  - "weighted" (plan = exp((f+g-C)/eps) q1 (x) q2 on probability weights),
///    used for distances and the symmetric self potentials;
///  - "unweighted"/Lebesgue (plan = diag(e^{f/eps}) K diag(e^{g/eps}) on
///    masses), used by the proximal step whose closed-form cell update is an
///    exponential reweighting.
class GridOt {
  public:
    GridOt(const GridSpec& grid, double epsilon);

    double epsilon() const { return eps_; }
    const GridSpec& grid() const { return grid_; }

    /// out(a1,a2) = log sum_{b1,b2} exp(W(b1,b2) - |x_a - x_b|^2 / eps).
    /// Entries of W may be -inf (excluded points).
    void apply_log_kernel(const Field& W, Field& out) const;

    struct Solve {
        Field f, g;            // duals
        double value = 0.0;    // <f,q1> + <g,q2> on probability weights
        int iterations = 0;
        double marginal_error = 0.0;
        bool converged = false;
    };

    /// Balanced OT_eps between two mass arrays (weighted convention,
    /// probability-normalized internally). Warm start via io_f/io_g.
    Solve balanced(const Field& q1, const Field& q2, double tol, int max_iter,
                   const Field* warm_f = nullptr, const Field* warm_g = nullptr) const;

    /// Symmetric fixed point f of OT_eps(q, q); value = 2 <f, q-hat>.
    Solve symmetric(const Field& q, double tol, int max_iter,
                    const Field* warm_f = nullptr) const;

    /// Debiased squared distance beta * S_eps(q1/beta, q2/beta).
    double debiased_distance_sq(const Field& q1, const Field& q2, double tol,
                                int max_iter) const;

    struct ProxResult {
        Field p;               // new masses (unprojected)
        Field f, g;            // Lebesgue-convention duals
        int iterations = 0;
        double marginal_error = 0.0;
        bool converged = false;
    };

    /// Entropic Wasserstein proximal step of the entropy-plus-linear objective
    ///
    ///   argmin_p  2 tau [ sum_c p ln(p/h^2) + <V, p> ] + OT_eps(p, q)
    ///
    /// by generalized Sinkhorn: the g-sweep is the KL projection onto the
    /// fixed marginal q, and the p-sweep is the closed-form KL prox
    ///
    ///   (2 tau + eps) ln p = eps ln s - 2 tau (1 + V - ln h^2),  s = K e^{g/eps},
    ///
    /// i.e. p = s^{eps/(2 tau + eps)} exp(-2 tau (1 + V - ln h^2)/(2 tau + eps)).
    /// V may carry an extra frozen debiasing potential; see jko.cpp.
    ProxResult prox_step(const Field& q, const Field& V, double tau, double tol,
                         int max_iter, const Field* warm_f = nullptr) const;

  private:
    GridSpec grid_;
    double eps_;
    Eigen::MatrixXd gibbs_;  // 1-D kernel exp(-(x_i - x_j)^2 / eps)
};

/// Kantorovich-Rubinstein cost between two equal-mass density fields on the
/// grid via the Beckmann flow formulation, solved with a primal-dual
/// (Chambolle-Pock) iteration; returns the optimal mass-scale cost
/// (so d_w1 = cost / sqrt(beta)). gap_out receives the final relative
/// primal-dual gap.
double w1_grid_cost(const GridSpec& grid, const Field& density_a, const Field& density_b,
                    double tol = 2e-3, int max_iter = 40000, double* gap_out = nullptr);

/// Multi-species d_w1(rho, eta) = sum_i d_w1(rho_i, eta_i) with the paper's
/// beta^{1/2} scaling; exact LP when supports are small, Beckmann otherwise.
double dw1_multi(const DensityField& rho, const DensityField& eta,
                 int exact_below = 600, double tol = 2e-3);

}  // namespace pks
