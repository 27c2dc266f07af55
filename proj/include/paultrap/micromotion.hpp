#pragma once

#include <complex>
#include <optional>

#include "paultrap/core.hpp"

namespace paultrap::micromotion {

/// x_d = q E_dc / (m omega_r^2).
double displacement_from_field(const IonSpecies& species, double omega_r, double e_dc);

/// x_um = sqrt(2) (omega_r / Omega_rf) x_d.
double micromotion_amplitude(double omega_r, double omega_rf, double x_d);

/// beta = (2 pi / lambda) x cos(theta).
double modulation_index(double wavelength, double amplitude, double angle_deg);

/// Amplitude that produces a given modulation index.
double amplitude_for_index(double beta, double wavelength, double angle_deg);

struct MicromotionState {
    double displacement;  // m
    double amplitude;     // m
    double beta;
    double geometry_angle_deg;
};

MicromotionState excess_micromotion(const IonSpecies& species, double omega_r, double omega_rf, double e_dc,
                                    double wavelength, double angle_deg);

struct LineParams {
    double gamma;       // rad/s, full linewidth
    double omega_rf;    // rad/s
    double wavelength;  // m
};

/// Smallest n with sum_{|k|<=n} J_k^2(beta) > 1 - 1e-9, or empty beyond n = 64.
std::optional<int> default_n_max(double beta);

/// Low-intensity fluorescence vs detuning for an ion with micromotion modulation index beta,
/// normalized so that beta = 0 on resonance gives 1.
class FluorescenceSpectrum {
public:
    FluorescenceSpectrum(LineParams line, double beta, std::optional<int> n_max = std::nullopt);

    double operator()(double detuning) const;
    double beta() const noexcept { return beta_; }
    int n_max() const noexcept { return n_max_; }

private:
    LineParams line_;
    double beta_;
    int n_max_;
    std::vector<double> weights_;  // J_n^2 for n = 0..n_max
};

/// beta where the carrier and first sideband have equal strength (J0^2 = J1^2), by bisection.
double sideband_equality_beta();

/// 360 deg x delta_d / lambda_rf.
double phase_from_path_difference(double delta_d, double omega_rf);

struct PhaseImbalance {
    double x0;               // m, micromotion amplitude at the null
    bool small_angle_valid;  // false when |phi| > 0.2 rad
};

/// |x0| = q E0 phi / (m Omega^2) for an RF phase difference phi between electrodes.
PhaseImbalance phase_imbalance_micromotion(const IonSpecies& species, double e0, double phi_deg, double omega_rf);

struct DividerResponse {
    double magnitude;
    double phase_deg;  // signed
    std::complex<double> ratio;
};

/// Output of a two-element divider, V_out / V_in = Z_shunt / (Z_series + Z_shunt).
DividerResponse rc_phase_shift(std::complex<double> z_series, std::complex<double> z_shunt);

std::complex<double> resistor(double r);
std::complex<double> capacitor(double c, double omega);
std::complex<double> inductor(double l, double omega);

}  // namespace paultrap::micromotion
