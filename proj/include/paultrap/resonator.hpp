#pragma once

#include "paultrap/core.hpp"

namespace paultrap::resonator {

/// Lumped parallel RLC: omega0^2 = 1/(LC), Q = R C omega0.
struct RlcModel {
    double l;           // H
    double c;           // F
    double r_parallel;  // ohm
    double omega0;      // rad/s
    double q;
};

RlcModel rlc_from_measurement(double omega0, double q, double l);

struct ChipLoss {
    double r_combined;  // R_p, ohm
    double r_chip;      // R_t, ohm
    double dissipated;  // W
};

/// Chip loss inferred from the drop in Q when the chip is attached, assuming no frequency shift:
/// R_p = q_after/(C omega0), 1/R_p = 1/R + 1/R_t, P = V^2 / (2 R_t).
ChipLoss chip_loss(const RlcModel& before, double q_after, double v_rf);

/// Q_L = Q_0 / (1 + kappa).
double loaded_q(double q0, double kappa);

/// kappa = Q_0/Q_L - 1.
double coupling_from_q(double q0, double q_loaded);

/// Q_L = omega0 / delta_omega (FWHM).
double q_from_linewidth(double omega0, double delta_omega_fwhm);

/// Inductance mu0 l (ln(2d/a) + 1/4) of a lead of length l and radius a at distance d from its return.
/// The prefactor is mu0 rather than mu0/(2 pi), reproducing the 495 nH estimate for a 10 cm lead.
double lead_inductance(double length, double radius, double separation);

}  // namespace paultrap::resonator
