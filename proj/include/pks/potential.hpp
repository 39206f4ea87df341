#pragma once

#include <memory>
#include <vector>

#include "pks/grid.hpp"

namespace pks {

/// Per-species Newtonian potentials u_i = -(1/2pi) ln|.| * rho_i and their
/// centered-difference gradients.
struct PotentialField {
    GridSpec grid;
    std::vector<Field> u;
    std::vector<Field> du_dx;
    std::vector<Field> du_dy;

    int species() const { return static_cast<int>(u.size()); }
};

/// Mean of ln|x - y| over two points drawn uniformly from the same h x h cell;
/// equals ln(h) + c0 with a pure-number constant c0. Evaluated once per grid by
/// dyadically refined Gauss-Legendre quadrature around the log singularity.
double kernel_self_constant(const GridSpec& grid);

/// The unit-cell constant c0 = kernel_self_constant - ln h.
double kernel_self_unit_constant();

/// Free-space convolution engine for one grid. Owns FFTW plans and the
/// transformed log kernel (zero-padded to (2N)^2, so no periodic images).
/// Not safe for concurrent use of one instance; make one per thread.
class NewtonianSolver {
  public:
    explicit NewtonianSolver(const GridSpec& grid);
    ~NewtonianSolver();
    NewtonianSolver(const NewtonianSolver&) = delete;
    NewtonianSolver& operator=(const NewtonianSolver&) = delete;

    /// Potential of a single density field.
    Field potential_of(const Field& rho) const;

    /// Potentials and gradients of every species.
    PotentialField solve(const DensityField& field) const;

    const GridSpec& grid() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper; builds a solver internally.
PotentialField newtonian_potential(const DensityField& field);

/// Centered-difference gradient, one-sided at the boundary.
void gradient(const GridSpec& grid, const Field& f, Field& dfdx, Field& dfdy);

/// Advection field v_i = sum_j a_ij grad u_j per species; returns pairs
/// (x-component, y-component).
std::vector<std::pair<Field, Field>> drift_velocity(const PotentialField& pot,
                                                    const InteractionMatrix& A);

}  // namespace pks
