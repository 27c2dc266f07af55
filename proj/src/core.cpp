#include "paultrap/core.hpp"

#include <cmath>
#include <map>

namespace paultrap {

double db_to_power_ratio(double db) { return std::pow(10.0, db / 10.0); }

double power_ratio_to_db(double ratio) {
    if (!(ratio > 0.0)) throw ValidationError("power ratio must be positive to convert to dB");
    return 10.0 * std::log10(ratio);
}

double voltage_psd_to_dbm_per_hz(double s_v, double load_ohm) {
    // P [W/Hz] = S_V / R ; dBm = 10 log10(P / 1 mW)
    return power_ratio_to_db(s_v / load_ohm / 1e-3);
}

double dbm_per_hz_to_voltage_psd(double dbm, double load_ohm) {
    return db_to_power_ratio(dbm) * 1e-3 * load_ohm;
}

IonSpecies::IonSpecies(double mass_kg, double charge_c, std::string label)
    : mass_(mass_kg), charge_(charge_c), label_(std::move(label)) {
    if (!(mass_kg > 0.0) || !std::isfinite(mass_kg))
        throw ValidationError("ion mass must be positive, got " + std::to_string(mass_kg));
    if (charge_c == 0.0 || !std::isfinite(charge_c))
        throw ValidationError("ion charge must be nonzero");
}

IonSpecies make_species(double mass_amu, int charge_e, std::string label) {
    if (!(mass_amu > 0.0)) throw ValidationError("mass_amu must be positive");
    if (charge_e == 0) throw ValidationError("charge_e must be nonzero");
    return IonSpecies(units::amu_to_kg(mass_amu), charge_e * constants::elementary_charge,
                      std::move(label));
}

IonSpecies species_by_label(const std::string& label) {
    // Integer mass numbers, matching how the worked examples are quoted.
    static const std::map<std::string, std::pair<double, int>> table = {
        {"24Mg+", {24.0, 1}}, {"25Mg+", {25.0, 1}}, {"9Be+", {9.0, 1}},
        {"40Ca+", {40.0, 1}}, {"171Yb+", {171.0, 1}}, {"88Sr+", {88.0, 1}},
    };
    auto it = table.find(label);
    if (it == table.end()) throw ValidationError("unknown species label '" + label + "'");
    return make_species(it->second.first, it->second.second, label);
}

RfDrive::RfDrive(double omega, double v, double phase)
    : omega_rf(omega), v_rf(v), phase_deg(phase) {
    if (!(omega > 0.0)) throw ValidationError("RF angular frequency must be positive");
    if (!(v >= 0.0)) throw ValidationError("RF amplitude must be non-negative");
}

}  // namespace paultrap
