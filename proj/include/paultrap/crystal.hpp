#pragma once

#include <vector>

#include "paultrap/core.hpp"

namespace paultrap::crystal {

/// s = (q^2 / (4 pi eps0 m omega_z^2))^(1/3).
double characteristic_length(const IonSpecies& species, double omega_z);

struct CrystalResult {
    std::vector<double> positions;  // m, ascending, centered on the well
    double length_scale;            // s, m
    bool converged;
    double gradient_norm;  // dimensionless force residual
};

/// Linear-chain equilibrium of n ions (1..50) in a harmonic axial well.
CrystalResult equilibrium_positions(const IonSpecies& species, double omega_z, int n);

/// Dimensionless energy sum u_i^2/2 + sum_{i<j} 1/|u_i - u_j| and its gradient.
double dimensionless_energy(const std::vector<double>& u);
std::vector<double> dimensionless_gradient(const std::vector<double>& u);

}  // namespace paultrap::crystal
