#include "pks/grid.hpp"

#include <cmath>

namespace pks {

GridSpec make_grid(double half_width, int cells_per_side) {
    if (!(half_width > 0.0))
        throw ConfigError("grid half_width must be positive, got " + std::to_string(half_width));
    if (cells_per_side < 8)
        throw ConfigError("grid needs at least 8 cells per side, got " +
                          std::to_string(cells_per_side));
    GridSpec g;
    g.half_width = half_width;
    g.cells_per_side = cells_per_side;
    g.spacing = 2.0 * half_width / cells_per_side;
    return g;
}

InteractionMatrix InteractionMatrix::make(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw ConfigError("interaction matrix must be square and nonempty");
    for (int i = 0; i < a.rows(); ++i) {
        if (!(a(i, i) > 0.0))
            throw ConfigError("interaction matrix needs strictly positive diagonal");
        for (int j = 0; j < a.cols(); ++j) {
            if (a(i, j) < 0.0) throw ConfigError("interaction matrix entries must be >= 0");
            if (a(i, j) != a(j, i)) throw ConfigError("interaction matrix must be symmetric");
        }
    }
    return InteractionMatrix{a};
}

InteractionMatrix InteractionMatrix::zero(int n) {
    // All-zero couplings; bypasses the positive-diagonal validation since this
    // stands for "no interaction" (pure diffusion).
    return InteractionMatrix{Eigen::MatrixXd::Zero(n, n)};
}

namespace {

double sample_component(const ProfileComponent& c, double x, double y) {
    if (std::holds_alternative<GaussianProfile>(c)) {
        const auto& g = std::get<GaussianProfile>(c);
        const double dx = x - g.center.x, dy = y - g.center.y;
        const double s2 = g.sigma * g.sigma;
        return g.weight * std::exp(-(dx * dx + dy * dy) / (2.0 * s2)) /
               (2.0 * M_PI * s2);
    }
    const auto& d = std::get<DiskProfile>(c);
    const double dx = x - d.center.x, dy = y - d.center.y;
    const bool inside = dx * dx + dy * dy <= d.radius * d.radius;
    return inside ? d.weight / (M_PI * d.radius * d.radius) : 0.0;
}

void validate_profile(const SpeciesProfile& profile, int species_index) {
    if (profile.empty())
        throw ConfigError("species " + std::to_string(species_index + 1) + " has no profile");
    double wsum = 0.0;
    for (const auto& c : profile) {
        if (std::holds_alternative<GaussianProfile>(c)) {
            const auto& g = std::get<GaussianProfile>(c);
            if (!(g.sigma > 0.0)) throw ConfigError("gaussian profile needs sigma > 0");
            if (!(g.weight > 0.0)) throw ConfigError("profile weight must be positive");
            wsum += g.weight;
        } else {
            const auto& d = std::get<DiskProfile>(c);
            if (!(d.radius > 0.0)) throw ConfigError("disk profile needs radius > 0");
            if (!(d.weight > 0.0)) throw ConfigError("profile weight must be positive");
            wsum += d.weight;
        }
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw ConfigError("profile mass fractions of species " +
                          std::to_string(species_index + 1) + " sum to " +
                          std::to_string(wsum) + ", expected 1");
}

}  // namespace

DensityField make_density(const GridSpec& grid,
                          const std::vector<SpeciesProfile>& profiles,
                          const std::vector<double>& beta) {
    if (profiles.empty() || profiles.size() != beta.size())
        throw ConfigError("profile list and mass vector must have matching nonzero size");
    const int n = grid.cells_per_side;
    DensityField field;
    field.grid = grid;
    field.target_mass = beta;
    field.values.reserve(profiles.size());
    for (size_t s = 0; s < profiles.size(); ++s) {
        if (!(beta[s] > 0.0)) throw ConfigError("target masses must be positive");
        validate_profile(profiles[s], static_cast<int>(s));
        Field v(n, n);
        for (int i = 0; i < n; ++i) {
            const double x = grid.coord(i);
            for (int j = 0; j < n; ++j) {
                const double y = grid.coord(j);
                double acc = 0.0;
                for (const auto& c : profiles[s]) acc += sample_component(c, x, y);
                v(i, j) = acc;
            }
        }
        field.values.push_back(std::move(v));
    }
    return renormalize(field);
}

std::vector<double> mass(const DensityField& field) {
    std::vector<double> m(field.species());
    const double a = field.grid.cell_area();
    for (int i = 0; i < field.species(); ++i) m[i] = a * field.values[i].sum();
    return m;
}

Vec2 center_of_mass(const DensityField& field) {
    const auto& g = field.grid;
    double mx = 0.0, my = 0.0, mtot = 0.0;
    for (const auto& v : field.values) {
        for (int i = 0; i < g.cells_per_side; ++i) {
            const double x = g.coord(i);
            for (int j = 0; j < g.cells_per_side; ++j) {
                const double w = v(i, j);
                mx += w * x;
                my += w * g.coord(j);
                mtot += w;
            }
        }
    }
    if (mtot <= 0.0) throw DegenerateFieldError("center of mass undefined for zero total mass");
    return {mx / mtot, my / mtot};
}

double second_moment(const DensityField& field) {
    const auto& g = field.grid;
    double acc = 0.0;
    for (const auto& v : field.values) {
        for (int i = 0; i < g.cells_per_side; ++i) {
            const double x2 = g.coord(i) * g.coord(i);
            for (int j = 0; j < g.cells_per_side; ++j) {
                const double y = g.coord(j);
                acc += (x2 + y * y) * v(i, j);
            }
        }
    }
    return acc * g.cell_area();
}

double upsilon_moment(const DensityField& field, double p) {
    if (!(p > 1.0) || !(p <= 2.0))
        throw ConfigError("upsilon exponent must lie in (1, 2], got " + std::to_string(p));
    const auto& g = field.grid;
    double acc = 0.0;
    for (const auto& v : field.values) {
        for (int i = 0; i < g.cells_per_side; ++i) {
            const double x2 = g.coord(i) * g.coord(i);
            for (int j = 0; j < g.cells_per_side; ++j) {
                const double y = g.coord(j);
                const double r2 = x2 + y * y;
                acc += std::pow(r2, p) * v(i, j);
            }
        }
    }
    return acc * g.cell_area();
}

DensityField renormalize(const DensityField& field) {
    DensityField out = field;
    const double a = field.grid.cell_area();
    for (int i = 0; i < field.species(); ++i) {
        const double m = a * field.values[i].sum();
        if (!(m > 0.0))
            throw DegenerateFieldError("species " + std::to_string(i + 1) +
                                       " has zero discrete mass, cannot renormalize");
        out.values[i] = field.values[i] * (field.target_mass[i] / m);
    }
    return out;
}

double boundary_mass_fraction(const DensityField& field) {
    const int n = field.grid.cells_per_side;
    double edge = 0.0, total = 0.0;
    for (const auto& v : field.values) {
        total += v.sum();
        edge += v.row(0).sum() + v.row(n - 1).sum();
        // avoid double counting the four corner cells
        edge += v.col(0).segment(1, n - 2).sum() + v.col(n - 1).segment(1, n - 2).sum();
    }
    return total > 0.0 ? edge / total : 0.0;
}

std::pair<double, Vec2> peak_density(const DensityField& field, int i) {
    Eigen::Index r, c;
    const double peak = field.values.at(i).maxCoeff(&r, &c);
    return {peak, Vec2{field.grid.coord(static_cast<int>(r)),
                       field.grid.coord(static_cast<int>(c))}};
}

}  // namespace pks
