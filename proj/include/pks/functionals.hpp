#pragma once

#include "pks/grid.hpp"
#include "pks/potential.hpp"

namespace pks {

/// All scalar energies of one state. free_energy = entropy + interaction.
struct EnergyBreakdown {
    double entropy = 0.0;           // sum_i int rho_i ln rho_i
    double entropy_positive = 0.0;  // sum_i int rho_i (ln rho_i)_+
    double interaction = 0.0;       // sum_ij (a_ij/4pi) int int rho_i ln|x-y| rho_j
    double free_energy = 0.0;
    double dissipation = 0.0;       // D_F
    double fisher = 0.0;            // sum_i int |grad rho_i / rho_i|^2 rho_i
};

/// Density floor used in log/ratio terms: cells below it contribute zero.
double density_floor(const DensityField& field);

double entropy(const DensityField& field);
double entropy_positive(const DensityField& field);

/// Interaction energy computed through the potentials:
/// -(1/2) sum_ij a_ij int rho_i u_j  (uses int int rho_i ln|x-y| rho_j = -2pi int rho_i u_j).
double interaction_energy(const DensityField& field, const InteractionMatrix& A,
                          const PotentialField& pot);
double interaction_energy(const DensityField& field, const InteractionMatrix& A);

double dissipation(const DensityField& field, const InteractionMatrix& A,
                   const PotentialField& pot);
std::vector<double> dissipation_by_species(const DensityField& field,
                                           const InteractionMatrix& A,
                                           const PotentialField& pot);
double fisher_information(const DensityField& field);

/// Assembles every scalar; reuses the supplied potentials.
EnergyBreakdown free_energy(const DensityField& field, const InteractionMatrix& A,
                            const PotentialField& pot);
EnergyBreakdown free_energy(const DensityField& field, const InteractionMatrix& A);

/// [inf_F_estimate + M2/(2 tau)] - F; a positive value certifies the strict
/// step-admissibility inequality relative to the supplied estimate.
double admissibility_margin(const DensityField& field, const InteractionMatrix& A,
                            double tau, double inf_f_estimate);

}  // namespace pks
