#include "pks/functionals.hpp"

#include <cmath>

namespace pks {

double density_floor(const DensityField& field) {
    double beta_sum = 0.0;
    for (double b : field.target_mass) beta_sum += b;
    const double l2 = field.grid.half_width * field.grid.half_width;
    return 1e-30 * beta_sum / l2;
}

double entropy(const DensityField& field) {
    double acc = 0.0;
    for (const auto& v : field.values) {
        for (int i = 0; i < v.rows(); ++i)
            for (int j = 0; j < v.cols(); ++j) {
                const double r = v(i, j);
                if (r > 0.0) acc += r * std::log(r);  // 0 ln 0 = 0
            }
    }
    return acc * field.grid.cell_area();
}

double entropy_positive(const DensityField& field) {
    double acc = 0.0;
    for (const auto& v : field.values) {
        for (int i = 0; i < v.rows(); ++i)
            for (int j = 0; j < v.cols(); ++j) {
                const double r = v(i, j);
                if (r > 1.0) acc += r * std::log(r);
            }
    }
    return acc * field.grid.cell_area();
}

double interaction_energy(const DensityField& field, const InteractionMatrix& A,
                          const PotentialField& pot) {
    if (field.species() != A.species() || pot.species() != A.species())
        throw DimensionError("species count mismatch in interaction energy");
    double acc = 0.0;
    for (int i = 0; i < field.species(); ++i)
        for (int j = 0; j < field.species(); ++j) {
            const double a = A.a(i, j);
            if (a == 0.0) continue;
            acc += a * (field.values[i] * pot.u[j]).sum();
        }
    return -0.5 * acc * field.grid.cell_area();
}

double interaction_energy(const DensityField& field, const InteractionMatrix& A) {
    return interaction_energy(field, A, newtonian_potential(field));
}

namespace {

// Shared kernel of D_F and the Fisher information: per-species integral of
// |grad rho / rho - drift|^2 rho with the drift optionally zero.
std::vector<double> weighted_velocity_norms(const DensityField& field,
                                            const InteractionMatrix* A,
                                            const PotentialField* pot) {
    const auto& g = field.grid;
    const int n = g.cells_per_side;
    const double floor = density_floor(field);
    std::vector<double> out(field.species(), 0.0);
    Field drx, dry;
    for (int s = 0; s < field.species(); ++s) {
        gradient(g, field.values[s], drx, dry);
        Field vx = Field::Zero(n, n), vy = Field::Zero(n, n);
        if (A != nullptr) {
            for (int j = 0; j < field.species(); ++j) {
                const double a = A->a(s, j);
                if (a == 0.0) continue;
                vx += a * pot->du_dx[j];
                vy += a * pot->du_dy[j];
            }
        }
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double r = field.values[s](i, j);
                if (r <= floor) continue;
                const double ex = drx(i, j) / r - vx(i, j);
                const double ey = dry(i, j) / r - vy(i, j);
                acc += (ex * ex + ey * ey) * r;
            }
        out[s] = acc * g.cell_area();
    }
    return out;
}

}  // namespace

std::vector<double> dissipation_by_species(const DensityField& field,
                                           const InteractionMatrix& A,
                                           const PotentialField& pot) {
    if (field.species() != A.species() || pot.species() != A.species())
        throw DimensionError("species count mismatch in dissipation");
    return weighted_velocity_norms(field, &A, &pot);
}

double dissipation(const DensityField& field, const InteractionMatrix& A,
                   const PotentialField& pot) {
    double acc = 0.0;
    for (double v : dissipation_by_species(field, A, pot)) acc += v;
    return acc;
}

double fisher_information(const DensityField& field) {
    double acc = 0.0;
    for (double v : weighted_velocity_norms(field, nullptr, nullptr)) acc += v;
    return acc;
}

EnergyBreakdown free_energy(const DensityField& field, const InteractionMatrix& A,
                            const PotentialField& pot) {
    EnergyBreakdown e;
    e.entropy = entropy(field);
    e.entropy_positive = entropy_positive(field);
    e.interaction = interaction_energy(field, A, pot);
    e.free_energy = e.entropy + e.interaction;
    e.dissipation = dissipation(field, A, pot);
    e.fisher = fisher_information(field);
    return e;
}

EnergyBreakdown free_energy(const DensityField& field, const InteractionMatrix& A) {
    return free_energy(field, A, newtonian_potential(field));
}

double admissibility_margin(const DensityField& field, const InteractionMatrix& A,
                            double tau, double inf_f_estimate) {
    if (!(tau > 0.0)) throw ConfigError("admissibility margin needs tau > 0");
    const EnergyBreakdown e = free_energy(field, A);
    return inf_f_estimate + second_moment(field) / (2.0 * tau) - e.free_energy;
}

}  // namespace pks
