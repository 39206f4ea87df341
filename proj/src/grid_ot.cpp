#include "pks/grid_ot.hpp"

#include <cmath>
#include <limits>

#include "pks/transport.hpp"

namespace pks {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Elementwise ln with ln(0) = -inf and no FP exception noise.
inline double safe_log(double v) { return v > 0.0 ? std::log(v) : -kInf; }

Field log_of(const Field& q) {
    Field out(q.rows(), q.cols());
    for (Eigen::Index i = 0; i < q.size(); ++i) out(i) = safe_log(q(i));
    return out;
}
}  // namespace

GridOt::GridOt(const GridSpec& grid, double epsilon) : grid_(grid), eps_(epsilon) {
    if (!(epsilon > 0.0)) throw ConfigError("grid OT needs epsilon > 0");
    const int n = grid.cells_per_side;
    gibbs_.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = grid.coord(i) - grid.coord(j);
            gibbs_(i, j) = std::exp(-d * d / eps_);
        }
}

void GridOt::apply_log_kernel(const Field& W, Field& out) const {
    const int n = grid_.cells_per_side;
    // Pass 1 contracts the column index: T(b1, a2) = sum_b2 e^{W(b1,b2)-m1} G(b2,a2),
    // stabilized by the row max m1(b1). Pass 2 contracts the row index with
    // per-column stabilization. Rows/columns that are entirely -inf stay -inf.
    Eigen::MatrixXd E(n, n);
    Eigen::VectorXd m1(n);
    for (int i = 0; i < n; ++i) {
        double mx = -kInf;
        for (int j = 0; j < n; ++j) mx = std::max(mx, W(i, j));
        m1(i) = mx;
        if (mx == -kInf) {
            E.row(i).setZero();
        } else {
            for (int j = 0; j < n; ++j) {
                const double w = W(i, j);
                E(i, j) = w == -kInf ? 0.0 : std::exp(w - mx);
            }
        }
    }
    Eigen::MatrixXd T = E * gibbs_;
    Eigen::MatrixXd L1(n, n);
    for (int i = 0; i < n; ++i) {
        const double mx = m1(i);
        for (int j = 0; j < n; ++j)
            L1(i, j) = T(i, j) > 0.0 && mx != -kInf ? std::log(T(i, j)) + mx : -kInf;
    }
    Eigen::VectorXd m2(n);
    for (int j = 0; j < n; ++j) {
        double mx = -kInf;
        for (int i = 0; i < n; ++i) mx = std::max(mx, L1(i, j));
        m2(j) = mx;
        if (mx == -kInf) {
            E.col(j).setZero();
        } else {
            for (int i = 0; i < n; ++i) {
                const double w = L1(i, j);
                E(i, j) = w == -kInf ? 0.0 : std::exp(w - mx);
            }
        }
    }
    T.noalias() = gibbs_ * E;  // gibbs_ is symmetric
    out.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out(i, j) = T(i, j) > 0.0 && m2(j) != -kInf ? std::log(T(i, j)) + m2(j) : -kInf;
}

GridOt::Solve GridOt::balanced(const Field& q1, const Field& q2, double tol, int max_iter,
                               const Field* warm_f, const Field* warm_g) const {
    const int n = grid_.cells_per_side;
    const double b1 = q1.sum(), b2 = q2.sum();
    if (!(b1 > 0.0) || !(b2 > 0.0)) throw DegenerateFieldError("balanced OT needs mass");
    if (std::abs(b1 - b2) / std::max(b1, b2) > 1e-9)
        throw ConfigError("balanced OT needs equal total masses");
    const Field lq1 = log_of(q1 / b1), lq2 = log_of(q2 / b2);

    Solve r;
    r.f = warm_f ? *warm_f : Field::Zero(n, n);
    r.g = warm_g ? *warm_g : Field::Zero(n, n);
    Field tmp(n, n), W(n, n);

    for (int it = 1; it <= max_iter; ++it) {
        r.iterations = it;
        W = r.g / eps_ + lq2;
        apply_log_kernel(W, tmp);
        r.f = (-eps_) * tmp;
        W = r.f / eps_ + lq1;
        apply_log_kernel(W, tmp);
        const Field g_new = (-eps_) * tmp;
        const double delta = (g_new - r.g).abs().maxCoeff();
        r.g = g_new;
        if (delta < 0.05 * eps_ * tol || it == max_iter) {
            // True marginal check on the q1 side (q2 side is exact after the
            // g sweep): row marginal = q1_hat * exp((f - f_consistent)/eps).
            W = r.g / eps_ + lq2;
            apply_log_kernel(W, tmp);
            double err = 0.0;
            for (Eigen::Index k = 0; k < tmp.size(); ++k) {
                if (lq1(k) == -kInf) continue;
                err = std::max(err, std::abs(std::exp((r.f(k) + eps_ * tmp(k)) / eps_) - 1.0));
            }
            r.marginal_error = err;
            if (err <= tol) {
                r.converged = true;
                break;
            }
        }
    }
    r.value = ((r.f * q1).sum() / b1) + ((r.g * q2).sum() / b2);
    return r;
}

GridOt::Solve GridOt::symmetric(const Field& q, double tol, int max_iter,
                                const Field* warm_f) const {
    const int n = grid_.cells_per_side;
    const double b = q.sum();
    if (!(b > 0.0)) throw DegenerateFieldError("symmetric OT needs mass");
    const Field lq = log_of(q / b);

    Solve r;
    r.f = warm_f ? *warm_f : Field::Zero(n, n);
    Field tmp(n, n), W(n, n);
    for (int it = 1; it <= max_iter; ++it) {
        r.iterations = it;
        W = r.f / eps_ + lq;
        apply_log_kernel(W, tmp);
        const Field fn = 0.5 * (r.f + (-eps_) * tmp);
        const double delta = (fn - r.f).abs().maxCoeff();
        r.f = fn;
        if (delta < 0.05 * eps_ * tol) {
            r.converged = true;
            break;
        }
    }
    r.g = r.f;
    r.marginal_error = 0.0;
    r.value = 2.0 * (r.f * q).sum() / b;
    return r;
}

double GridOt::debiased_distance_sq(const Field& q1, const Field& q2, double tol,
                                    int max_iter) const {
    const double beta = q1.sum();
    const Solve ab = balanced(q1, q2, tol, max_iter);
    const Solve aa = symmetric(q1, tol, max_iter, &ab.f);
    const Solve bb = symmetric(q2, tol, max_iter, &ab.g);
    return beta * (ab.value - 0.5 * aa.value - 0.5 * bb.value);
}

GridOt::ProxResult GridOt::prox_step(const Field& q, const Field& V, double tau,
                                     double tol, int max_iter, const Field* warm_f) const {
    if (!(tau > 0.0)) throw ConfigError("prox step needs tau > 0");
    const int n = grid_.cells_per_side;
    const double h2 = grid_.cell_area();
    const Field lq = log_of(q);
    const double w = eps_ / (2.0 * tau + eps_);
    const Field drive = (-2.0 * tau / (2.0 * tau + eps_)) * (1.0 + V - std::log(h2));

    ProxResult r;
    r.f = warm_f ? *warm_f : Field::Zero(n, n);
    r.g = Field::Zero(n, n);
    Field tmp(n, n), W(n, n), lp(n, n), ls(n, n);
    for (int it = 1; it <= max_iter; ++it) {
        r.iterations = it;
        // marginal sweep: e^{g/eps} (K^T e^{f/eps}) = q
        W = r.f / eps_;
        apply_log_kernel(W, tmp);
        for (Eigen::Index k = 0; k < W.size(); ++k)
            r.g(k) = lq(k) == -kInf ? -kInf : eps_ * (lq(k) - tmp(k));
        // prox sweep: closed-form exponential reweighting
        W = r.g / eps_;
        apply_log_kernel(W, ls);
        lp = w * ls + drive;
        const Field f_new = eps_ * (lp - ls);
        const double delta = (f_new - r.f).abs().maxCoeff();
        r.f = f_new;
        if (delta < 0.05 * eps_ * tol || it == max_iter) {
            // q-side marginal error of the final plan
            W = r.f / eps_;
            apply_log_kernel(W, tmp);
            double err = 0.0;
            for (Eigen::Index k = 0; k < W.size(); ++k) {
                if (lq(k) == -kInf) continue;
                const double q_est = std::exp(r.g(k) / eps_ + tmp(k));
                err = std::max(err, std::abs(q_est - q(k)) / q(k));
            }
            r.marginal_error = err;
            if (err <= tol) {
                r.converged = true;
                break;
            }
        }
    }
    r.p = lp.exp();
    for (Eigen::Index k = 0; k < r.p.size(); ++k)
        if (!std::isfinite(r.p(k))) throw NumericalError("prox produced non-finite mass");
    return r;
}

// ---------------------------------------------------------------------------
// Beckmann W1 on the grid: min ||m||_{2,1} s.t. div m = a - b, no-flux walls.
// Chambolle-Pock on the saddle  min_m max_phi  sum h^2 |m| + <phi, f - Div m> h^2
// with Div the negative adjoint of the forward-difference gradient.
// ---------------------------------------------------------------------------

namespace {

void grad_forward(const GridSpec& g, const Field& phi, Field& gx, Field& gy) {
    const int n = g.cells_per_side;
    const double invh = 1.0 / g.spacing;
    gx.setZero(n, n);
    gy.setZero(n, n);
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n; ++j) gx(i, j) = (phi(i + 1, j) - phi(i, j)) * invh;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n - 1; ++j) gy(i, j) = (phi(i, j + 1) - phi(i, j)) * invh;
}

// Negative adjoint of grad_forward: <grad phi, m> = -<phi, div m>.
void div_adjoint(const GridSpec& g, const Field& mx, const Field& my, Field& out) {
    const int n = g.cells_per_side;
    const double invh = 1.0 / g.spacing;
    out.setZero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = 0.0;
            if (i < n - 1) v -= mx(i, j);
            if (i > 0) v += mx(i - 1, j);
            if (j < n - 1) v -= my(i, j);
            if (j > 0) v += my(i, j - 1);
            out(i, j) = -v * invh;  // divergence
        }
}

}  // namespace

double w1_grid_cost(const GridSpec& grid, const Field& density_a, const Field& density_b,
                    double tol, int max_iter, double* gap_out) {
    const int n = grid.cells_per_side;
    const double h = grid.spacing, h2 = grid.cell_area();
    const double mass_a = density_a.sum() * h2, mass_b = density_b.sum() * h2;
    if (std::abs(mass_a - mass_b) / std::max(mass_a, mass_b) > 1e-9)
        throw ConfigError("w1 needs equal masses");
    const Field f = density_a - density_b;
    if ((f.abs()).maxCoeff() == 0.0) {
        if (gap_out) *gap_out = 0.0;
        return 0.0;
    }

    // Step sizes: ||Div||^2 <= 8/h^2.
    const double sigma = h / (2.0 * std::sqrt(2.0));
    Field mx = Field::Zero(n, n), my = Field::Zero(n, n);
    Field mx_prev = mx, my_prev = my;
    Field phi = Field::Zero(n, n);
    Field gx(n, n), gy(n, n), div(n, n);

    double primal = kInf, dual = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        // dual ascent on phi with overrelaxed m
        div_adjoint(grid, 2.0 * mx - mx_prev, 2.0 * my - my_prev, div);
        phi += sigma * (f - div);
        // primal descent on m + shrinkage
        grad_forward(grid, phi, gx, gy);
        mx_prev = mx;
        my_prev = my;
        mx += sigma * gx;  // descent on <phi, -div m> = +<grad phi, m>
        my += sigma * gy;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double nrm = std::hypot(mx(i, j), my(i, j));
                const double scale = nrm > sigma ? 1.0 - sigma / nrm : 0.0;
                mx(i, j) *= scale;
                my(i, j) *= scale;
            }
        if (it % 50 == 0 || it == max_iter) {
            primal = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) primal += std::hypot(mx(i, j), my(i, j));
            primal *= h2;
            grad_forward(grid, phi, gx, gy);
            double lip = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    lip = std::max(lip, std::hypot(gx(i, j), gy(i, j)));
            dual = (phi * f).sum() * h2 / std::max(1.0, lip);
            // Feasibility of the flow: residual of div m = f.
            div_adjoint(grid, mx, my, div);
            const double resid = (div - f).abs().sum() * h2;
            const double scale = std::max(std::abs(primal), std::abs(dual));
            if (scale > 0.0 && std::abs(primal - dual) / scale < tol &&
                resid < tol * (density_a.abs().sum() * h2)) {
                if (gap_out) *gap_out = std::abs(primal - dual) / scale;
                return 0.5 * (primal + std::abs(dual));
            }
        }
    }
    if (gap_out) *gap_out = std::abs(primal - dual) / std::max(1e-300, std::abs(primal));
    return primal;
}

double dw1_multi(const DensityField& rho, const DensityField& eta, int exact_below,
                 double tol) {
    if (!rho.grid.same_as(eta.grid)) throw DimensionError("dw1_multi needs a common grid");
    if (rho.species() != eta.species()) throw DimensionError("dw1_multi species mismatch");
    double acc = 0.0;
    for (int i = 0; i < rho.species(); ++i) {
        const DiscreteMeasure a = measure_from_field(rho, i);
        const DiscreteMeasure b = measure_from_field(eta, i);
        if (a.size() <= exact_below && b.size() <= exact_below) {
            acc += dw1_exact(a, b);
        } else {
            const double c = w1_grid_cost(rho.grid, rho.values[i], eta.values[i], tol);
            acc += c / std::sqrt(rho.target_mass[i]);
        }
    }
    return acc;
}

}  // namespace pks
