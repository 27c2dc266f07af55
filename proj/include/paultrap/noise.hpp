#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "paultrap/core.hpp"

namespace paultrap::noise {

/// Gamma_{0->1} = q^2 S_E / (4 m hbar omega), quanta/s.
double heating_rate_from_se(const IonSpecies& species, double omega, double s_e);
double se_from_heating_rate(const IonSpecies& species, double omega, double rate);

/// 4 k_B T R, V^2/Hz.
double johnson_voltage_psd(double r, double t);

/// Power transmission 1/(1 + (omega R C)^2) of a first-order RC low-pass.
double rc_attenuation(double omega, double r, double c);

struct RcFilter {
    double r;  // ohm
    double c;  // F
};

/// n_electrodes x q^2/(4 m hbar omega) x S_V x coupling^2 x A_LP.
double electrode_noise_heating(const IonSpecies& species, double omega, double s_v, std::optional<RcFilter> filter,
                               double coupling, int n_electrodes);

/// 10 log10 of (1 + 4 Q^2 ((omega - omega0)/omega0)^2)^-1.
double resonator_filter_attenuation(double omega, double omega0, double q_loaded);

/// 4 k_B T R filtered by the resonator line shape, V^2/Hz.
double resonator_johnson_psd(double omega, double omega0, double q_loaded, double r_parallel, double t);

/// Relative noise PSD r = S_En / E0^2 from a carrier-referenced level in dBc.
double relative_psd_from_dbc(double dbc);

/// Axial heating from RF amplitude noise. e0 and de0_dz are at the actual drive amplitude.
double rfam_axial_heating(const IonSpecies& species, double omega_z, double omega_rf, double e0, double de0_dz,
                          double relative_psd);

/// Radial heating from RF amplitude noise for an ion displaced x from the RF null.
double rfam_radial_heating(const IonSpecies& species, double omega_x, double x, double relative_psd);

struct PatchField {
    double field;      // V/m
    bool far_field;    // r >= 5a
    bool thick_layer;  // pi t >= a
};

/// Vertical field (4 V_s / pi^2)(a / R^2) exp(-pi t / a) of an exposed dielectric strip.
PatchField patch_field(double v_s, double a, double t, double r);

/// Per-volt fields of one electrode (C_E) and of the RF electrodes (D_E) at the ion.
struct CouplingConstants {
    std::array<double, 3> c_e{};  // V/m per V
    std::array<double, 3> d_e{};  // V/m per V
    double dez_dz = 0.0;          // V/m^2 per V
};

// Budget sources. `omega`, when set, must match the budget frequency.

struct FieldNoiseSource {
    std::string label;
    double s_e;  // (V/m)^2/Hz at the ion
    std::optional<double> omega;
};

struct ElectrodeNoiseSource {
    std::string label;
    double s_v;  // V^2/Hz at the source
    std::optional<RcFilter> filter;
    double coupling;  // V/m per V
    int n_electrodes = 1;
    std::optional<double> omega;
};

struct RfAmAxialSource {
    std::string label;
    double omega_rf;
    double e0;      // V/m at drive amplitude
    double de0_dz;  // V/m^2 at drive amplitude
    double relative_psd;
    bool two_sideband = false;
    std::optional<double> omega;
};

struct RfAmRadialSource {
    std::string label;
    double displacement;  // m
    double relative_psd;
    bool two_sideband = false;
    std::optional<double> omega;
};

using NoiseSource = std::variant<FieldNoiseSource, ElectrodeNoiseSource, RfAmAxialSource, RfAmRadialSource>;

struct BudgetLine {
    std::string label;
    std::string mechanism;
    std::string formula;
    double rate;            // quanta/s
    double s_e_equivalent;  // (V/m)^2/Hz
};

struct BudgetReport {
    double omega;
    std::vector<BudgetLine> lines;
    double total_rate;  // quanta/s
    double total_s_e;
};

BudgetReport heating_budget(const IonSpecies& species, double omega, const std::vector<NoiseSource>& sources);

}  // namespace paultrap::noise
