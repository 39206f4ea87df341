#include "pks/potential.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>

namespace pks {

namespace {

// 16-point Gauss-Legendre nodes/weights on [0,1].
constexpr int kGL = 16;
const double kGLx[kGL] = {
    0.005299532504175031, 0.027712488463383712, 0.06718439880608412,
    0.12229779582249845,  0.19106187779867811,  0.27099161117138625,
    0.35919822461037054,  0.45249374508118123,  0.5475062549188188,
    0.6408017753896295,   0.7290083888286136,   0.8089381222013219,
    0.8777022158035415,   0.9328156011939159,   0.9722875115366163,
    0.9947004674958249};
const double kGLw[kGL] = {
    0.013576229705877047, 0.03112676196932395, 0.04757925584124639,
    0.06231448562776694,  0.07479799440828837, 0.08457825969750127,
    0.09130170752246179,  0.0947253052275343,  0.0947253052275343,
    0.09130170752246179,  0.08457825969750127, 0.07479799440828837,
    0.06231448562776694,  0.04757925584124639, 0.03112676196932395,
    0.013576229705877047};

// Integrand of the unit-cell constant: the difference d = x - y of two
// uniform points in the unit square has density (1-|d1|)(1-|d2|) on [-1,1]^2,
// so c0 = 4 int_{[0,1]^2} (1-a)(1-b) ln sqrt(a^2+b^2) da db.
double c0_on_box(double ax, double bx, double ay, double by) {
    const double wx = bx - ax, wy = by - ay;
    double acc = 0.0;
    for (int i = 0; i < kGL; ++i) {
        const double a = ax + wx * kGLx[i];
        for (int j = 0; j < kGL; ++j) {
            const double b = ay + wy * kGLx[j];
            acc += kGLw[i] * kGLw[j] * (1.0 - a) * (1.0 - b) *
                   0.5 * std::log(a * a + b * b);
        }
    }
    return acc * wx * wy;
}

double compute_c0() {
    // Dyadic refinement toward the origin where ln r is singular. Each L-shaped
    // shell [s/2, s]^2 \ [0, s/2)^2 is smooth and handled by tensor quadrature.
    double acc = 0.0;
    double s = 1.0;
    for (int level = 0; level < 52; ++level) {
        const double h = s / 2.0;
        acc += c0_on_box(h, s, 0.0, h);   // lower right
        acc += c0_on_box(0.0, h, h, s);   // upper left
        acc += c0_on_box(h, s, h, s);     // upper right
        s = h;
    }
    return 4.0 * acc;
}

}  // namespace

double kernel_self_unit_constant() {
    static const double c0 = compute_c0();
    return c0;
}

double kernel_self_constant(const GridSpec& grid) {
    if (!(grid.spacing > 0.0)) throw ConfigError("kernel_self_constant needs a valid grid");
    return std::log(grid.spacing) + kernel_self_unit_constant();
}

struct NewtonianSolver::Impl {
    GridSpec grid;
    int m = 0;            // padded size 2N
    int mc = 0;           // complex columns m/2 + 1
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double* real_buf = nullptr;
    fftw_complex* cplx_buf = nullptr;
    std::vector<std::complex<double>> kernel_hat;

    ~Impl() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (real_buf) fftw_free(real_buf);
        if (cplx_buf) fftw_free(cplx_buf);
    }
};

NewtonianSolver::NewtonianSolver(const GridSpec& grid) : impl_(std::make_unique<Impl>()) {
    const int n = grid.cells_per_side;
    impl_->grid = grid;
    impl_->m = 2 * n;
    impl_->mc = impl_->m / 2 + 1;
    const int m = impl_->m;
    impl_->real_buf = fftw_alloc_real(static_cast<size_t>(m) * m);
    impl_->cplx_buf = fftw_alloc_complex(static_cast<size_t>(m) * impl_->mc);
    impl_->fwd = fftw_plan_dft_r2c_2d(m, m, impl_->real_buf, impl_->cplx_buf, FFTW_MEASURE);
    impl_->bwd = fftw_plan_dft_c2r_2d(m, m, impl_->cplx_buf, impl_->real_buf, FFTW_MEASURE);

    // Log kernel at lattice displacements, wrapped onto the padded grid so the
    // circular convolution reproduces the linear one on the physical block.
    // Displacement index d in [-(N-1), N-1] maps to row (d + m) mod m.
    const double h = grid.spacing;
    const double self = kernel_self_constant(grid);
    std::vector<double> k(static_cast<size_t>(m) * m, 0.0);
    for (int dx = -(n - 1); dx <= n - 1; ++dx) {
        const int r = (dx + m) % m;
        for (int dy = -(n - 1); dy <= n - 1; ++dy) {
            const int c = (dy + m) % m;
            const double d2 = (static_cast<double>(dx) * dx + static_cast<double>(dy) * dy);
            k[static_cast<size_t>(r) * m + c] =
                (dx == 0 && dy == 0) ? self : std::log(h * std::sqrt(d2));
        }
    }
    for (size_t i = 0; i < k.size(); ++i) impl_->real_buf[i] = k[i];
    fftw_execute(impl_->fwd);
    impl_->kernel_hat.resize(static_cast<size_t>(m) * impl_->mc);
    for (size_t i = 0; i < impl_->kernel_hat.size(); ++i)
        impl_->kernel_hat[i] = {impl_->cplx_buf[i][0], impl_->cplx_buf[i][1]};
}

NewtonianSolver::~NewtonianSolver() = default;

const GridSpec& NewtonianSolver::grid() const { return impl_->grid; }

Field NewtonianSolver::potential_of(const Field& rho) const {
    const int n = impl_->grid.cells_per_side;
    const int m = impl_->m;
    if (rho.rows() != n || rho.cols() != n)
        throw DimensionError("density shape does not match solver grid");

    double* rb = impl_->real_buf;
    std::fill(rb, rb + static_cast<size_t>(m) * m, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rb[static_cast<size_t>(i) * m + j] = rho(i, j);
    fftw_execute(impl_->fwd);

    const double scale = -impl_->grid.cell_area() /
                         (2.0 * M_PI * static_cast<double>(m) * m);
    for (size_t i = 0; i < impl_->kernel_hat.size(); ++i) {
        const std::complex<double> v(impl_->cplx_buf[i][0], impl_->cplx_buf[i][1]);
        const std::complex<double> w = v * impl_->kernel_hat[i] * scale;
        impl_->cplx_buf[i][0] = w.real();
        impl_->cplx_buf[i][1] = w.imag();
    }
    fftw_execute(impl_->bwd);

    Field u(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) u(i, j) = rb[static_cast<size_t>(i) * m + j];
    return u;
}

void gradient(const GridSpec& grid, const Field& f, Field& dfdx, Field& dfdy) {
    const int n = grid.cells_per_side;
    const double inv2h = 1.0 / (2.0 * grid.spacing);
    const double invh = 1.0 / grid.spacing;
    dfdx.resize(n, n);
    dfdy.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            dfdx(i, j) = (i == 0)       ? (f(1, j) - f(0, j)) * invh
                         : (i == n - 1) ? (f(n - 1, j) - f(n - 2, j)) * invh
                                        : (f(i + 1, j) - f(i - 1, j)) * inv2h;
            dfdy(i, j) = (j == 0)       ? (f(i, 1) - f(i, 0)) * invh
                         : (j == n - 1) ? (f(i, n - 1) - f(i, n - 2)) * invh
                                        : (f(i, j + 1) - f(i, j - 1)) * inv2h;
        }
    }
}

PotentialField NewtonianSolver::solve(const DensityField& field) const {
    if (!field.grid.same_as(impl_->grid))
        throw DimensionError("density grid does not match solver grid");
    PotentialField out;
    out.grid = field.grid;
    out.u.reserve(field.species());
    out.du_dx.resize(field.species());
    out.du_dy.resize(field.species());
    for (int s = 0; s < field.species(); ++s) {
        out.u.push_back(potential_of(field.values[s]));
        gradient(field.grid, out.u.back(), out.du_dx[s], out.du_dy[s]);
    }
    return out;
}

PotentialField newtonian_potential(const DensityField& field) {
    NewtonianSolver solver(field.grid);
    return solver.solve(field);
}

std::vector<std::pair<Field, Field>> drift_velocity(const PotentialField& pot,
                                                    const InteractionMatrix& A) {
    if (pot.species() != A.species())
        throw DimensionError("species count mismatch between potential and matrix");
    const int n = pot.grid.cells_per_side;
    std::vector<std::pair<Field, Field>> v;
    v.reserve(pot.species());
    for (int i = 0; i < pot.species(); ++i) {
        Field vx = Field::Zero(n, n), vy = Field::Zero(n, n);
        for (int j = 0; j < pot.species(); ++j) {
            const double a = A.a(i, j);
            if (a == 0.0) continue;
            vx += a * pot.du_dx[j];
            vy += a * pot.du_dy[j];
        }
        v.emplace_back(std::move(vx), std::move(vy));
    }
    return v;
}

}  // namespace pks
