#pragma once

#include <numbers>
#include <string>

#include "paultrap/errors.hpp"

namespace paultrap {

/// SI constants (CODATA 2018 exact or recommended values).
namespace constants {
inline constexpr double epsilon0 = 8.8541878128e-12;          // F/m
inline constexpr double mu0 = 1.25663706212e-6;               // H/m
inline constexpr double hbar = 1.054571817e-34;               // J s
inline constexpr double k_boltzmann = 1.380649e-23;           // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double amu = 1.66053906660e-27;              // kg
inline constexpr double speed_of_light = 299792458.0;         // m/s
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

// Unit conversions. Internal computation is SI with angular frequencies;
// MHz, um and dB appear only at I/O boundaries.
namespace units {
constexpr double mhz_to_rad_s(double mhz) { return constants::two_pi * mhz * 1e6; }
constexpr double rad_s_to_mhz(double omega) { return omega / (constants::two_pi * 1e6); }
constexpr double hz_to_rad_s(double hz) { return constants::two_pi * hz; }
constexpr double rad_s_to_hz(double omega) { return omega / constants::two_pi; }
constexpr double um_to_m(double um) { return um * 1e-6; }
constexpr double m_to_um(double m) { return m * 1e6; }
constexpr double amu_to_kg(double amu) { return amu * constants::amu; }
constexpr double kg_to_amu(double kg) { return kg / constants::amu; }
constexpr double deg_to_rad(double deg) { return deg * constants::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / constants::pi; }
}  // namespace units

/// 10^(db/10).
double db_to_power_ratio(double db);
/// 10·log10(ratio); ratio must be positive.
double power_ratio_to_db(double ratio);

/// Power in dBm dissipated by a voltage PSD S_V (V^2/Hz) across a reference load, per Hz.
double voltage_psd_to_dbm_per_hz(double s_v, double load_ohm = 50.0);
double dbm_per_hz_to_voltage_psd(double dbm, double load_ohm = 50.0);

class IonSpecies {
public:
    IonSpecies(double mass_kg, double charge_c, std::string label);

    double mass() const noexcept { return mass_; }
    double charge() const noexcept { return charge_; }
    const std::string& label() const noexcept { return label_; }

private:
    double mass_;
    double charge_;
    std::string label_;
};

/// Species from a mass in atomic mass units and an integer charge state.
IonSpecies make_species(double mass_amu, int charge_e, std::string label);

/// Looks up the handful of species used in the examples ("24Mg+", "9Be+", ...).
IonSpecies species_by_label(const std::string& label);

struct RfDrive {
    double omega_rf;         // rad/s
    double v_rf;             // V, amplitude
    double phase_deg = 0.0;  // per-electrode offset

    RfDrive(double omega_rf, double v_rf, double phase_deg = 0.0);
};

}  // namespace paultrap
