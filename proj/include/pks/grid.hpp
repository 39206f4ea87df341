#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "pks/errors.hpp"

namespace pks {

/// Dense N x N scalar field on the grid; element (i,j) lives at cell (i,j).
using Field = Eigen::ArrayXXd;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Uniform cell-centered discretization of the square [-L, L]^2.
///
/// Cell (i,j) has center (coord(i), coord(j)) with coord(i) = -L + (i + 1/2) h
/// and h = 2L/N. All quadrature is midpoint rule with weight h^2.
struct GridSpec {
    double half_width = 0.0;   // L
    int cells_per_side = 0;    // N
    double spacing = 0.0;      // h = 2L/N

    double coord(int i) const { return -half_width + (i + 0.5) * spacing; }
    double cell_area() const { return spacing * spacing; }
    int cell_count() const { return cells_per_side * cells_per_side; }

    bool same_as(const GridSpec& o) const {
        return half_width == o.half_width && cells_per_side == o.cells_per_side;
    }
};

GridSpec make_grid(double half_width, int cells_per_side);

/// Nonnegative per-species cell densities (units mass/area) with target
/// masses beta. Discrete mass of species i is h^2 * sum(values[i]).
struct DensityField {
    GridSpec grid;
    std::vector<Field> values;
    std::vector<double> target_mass;

    int species() const { return static_cast<int>(values.size()); }
};

/// Symmetric nonnegative sensitivity matrix with strictly positive diagonal.
struct InteractionMatrix {
    Eigen::MatrixXd a;

    int species() const { return static_cast<int>(a.rows()); }
    static InteractionMatrix make(const Eigen::MatrixXd& a);
    static InteractionMatrix zero(int n);
};

// --- analytic initial profiles ------------------------------------------

struct GaussianProfile {
    Vec2 center;
    double sigma = 1.0;
    double weight = 1.0;  // mass fraction of the species
};

struct DiskProfile {
    Vec2 center;
    double radius = 1.0;
    double weight = 1.0;
};

using ProfileComponent = std::variant<GaussianProfile, DiskProfile>;
using SpeciesProfile = std::vector<ProfileComponent>;

/// Samples each species' profile mixture at cell centers and renormalizes to
/// the exact discrete target mass. Throws DegenerateFieldError if a species
/// has no mass on the grid (profile entirely outside the domain).
DensityField make_density(const GridSpec& grid,
                          const std::vector<SpeciesProfile>& profiles,
                          const std::vector<double>& beta);

// --- moments and normalization ------------------------------------------

/// Discrete per-species masses h^2 sum(values_i).
std::vector<double> mass(const DensityField& field);

/// Mass-weighted mean position over all species; throws on zero total mass.
Vec2 center_of_mass(const DensityField& field);

/// M2 = sum_i h^2 sum_cells |x|^2 rho_i.
double second_moment(const DensityField& field);

/// sum_i h^2 sum_cells (|x|^2)^p rho_i for p in (1, 2].
double upsilon_moment(const DensityField& field, double p);

/// Scales every species so its discrete mass equals target_mass exactly.
DensityField renormalize(const DensityField& field);

/// Fraction of total mass in the outermost ring of cells.
double boundary_mass_fraction(const DensityField& field);

/// Peak density value and its cell center location for one species.
std::pair<double, Vec2> peak_density(const DensityField& field, int i);

}  // namespace pks
