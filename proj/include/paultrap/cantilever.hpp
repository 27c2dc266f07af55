#pragma once

#include "paultrap/core.hpp"

namespace paultrap::cantilever {

/// First clamped-free eigenvalue beta L, root of cos(x) cosh(x) = -1.
double first_mode_eigenvalue();

/// First flexural mode normalized to unit tip displacement; x = z/h_c in [0, 1], clamp at 0.
double mode_shape(double x);

struct ModeIntegrals {
    double xi_prime;     // (1/h) int f dz over the overlap
    double xi_dprime;    // (1/h) int f^2 dz over the overlap
    double xi_c_dprime;  // (1/h_c) int f^2 dz over the whole beam
};

/// Integrals over the overlap region [h_c - h, h_c] measured from the clamp.
ModeIntegrals mode_integrals(double h_c, double h);

struct CantileverDevice {
    double h_c;       // length, m
    double s;         // thickness, m
    double w;         // width, m
    double rho;       // kg/m^3
    double d0;        // gap, m
    double h;         // RF electrode overlap, m
    double omega_c;   // rad/s
    double q_c_mech;  // mechanical Q
    double effective_mass;
    double xi_prime;
    double xi_dprime;
    double xi_c_dprime;

    double gamma() const { return omega_c / q_c_mech; }
};

CantileverDevice make_device(double h_c, double s, double w, double rho, double d0, double h, double omega_c,
                             double q_c_mech);

/// Parallel-plate coupling capacitance eps0 w h / d.
double coupling_capacitance(double w, double h, double d);

struct RfCircuit {
    double l0;      // H
    double c0;      // F
    double c_c;     // F
    double omega0;  // rad/s
    double q_rf;
    double gamma;  // omega0 / q_rf

    /// Parallel resistance Q Omega0 L0 of the resonator.
    double r_res() const { return q_rf * omega0 * l0; }
};

/// Circuit with C0 chosen so that 1/sqrt(L0 (C0 + C_c)) = omega0.
RfCircuit make_circuit(double l0, double omega0, double q_rf, double c_c);

/// V_max^2 = 2 P R_res.
double v_max_squared(const RfCircuit& circuit, double power);

/// 1 / (1 + (2 Q dOmega / Omega0)^2).
double lorentzian(double delta_omega, double omega0, double q_rf);

/// Time-averaged force C_c V^2 / (4 d).
double rf_force(double c_c, double v_rf, double d);

struct DampingShift {
    double gamma_prime;    // rad/s
    double kappa;
    double omega_shifted;  // rad/s
    double phase;          // omega_c tau, rad
};

/// delta_omega = Omega0 - Omega_rf; positive detuning damps.
DampingShift damping_and_shift(const CantileverDevice& device, const RfCircuit& circuit, double v_max_sq,
                               double delta_omega);

struct EquivalentCircuit {
    double l_eq;  // H
    double c_eq;  // F
    double r_eq;  // ohm
    double r_rf;  // ohm
};

/// L_eq = m d0^2 / (q_c xi')^2, C_eq = 1/(omega_c^2 L_eq), R_eq = L_eq Gamma, R_RF = L_eq Gamma'.
EquivalentCircuit equivalent_circuit(const CantileverDevice& device, double charge, double gamma_prime = 0.0);

/// Cantilever charge implied by a measured L_eq.
double charge_from_l_eq(const CantileverDevice& device, double l_eq);

struct NoiseVoltages {
    double e_req2;  // V^2/Hz
    double e_rs2;
    double e_rf2;
};

struct Resistances {
    double r_eq;
    double r_rf;
    double r_s;
};

/// T_eff = e_n^2 / (4 k_B (R_eq + R_RF + R_s)).
double effective_temperature(const NoiseVoltages& noise, const Resistances& r);

/// n_heat / n_cool ~ 2 k_B T_c Q_RF / (hbar Omega0 Q_c).
double ground_state_ratio(double t_c, double omega0, double q_rf, double q_c);

}  // namespace paultrap::cantilever
