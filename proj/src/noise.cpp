#include "paultrap/noise.hpp"

#include <fmt/format.h>

#include <cmath>

namespace paultrap::noise {

namespace {

double rate_prefactor(const IonSpecies& sp, double omega) {
    if (!(omega > 0.0)) throw ValidationError("motional frequency must be positive");
    return 1.0 / (4.0 * sp.mass() * constants::hbar * omega);
}

void require_nonnegative(double v, const char* what) {
    if (!(v >= 0.0)) throw ValidationError(fmt::format("{} must be non-negative", what));
}

}  // namespace

double heating_rate_from_se(const IonSpecies& sp, double omega, double s_e) {
    require_nonnegative(s_e, "S_E");
    return sp.charge() * sp.charge() * s_e * rate_prefactor(sp, omega);
}

double se_from_heating_rate(const IonSpecies& sp, double omega, double rate) {
    require_nonnegative(rate, "heating rate");
    return rate / (sp.charge() * sp.charge() * rate_prefactor(sp, omega));
}

double johnson_voltage_psd(double r, double t) {
    require_nonnegative(r, "resistance");
    require_nonnegative(t, "temperature");
    return 4.0 * constants::k_boltzmann * t * r;
}

double rc_attenuation(double omega, double r, double c) {
    require_nonnegative(r, "resistance");
    require_nonnegative(c, "capacitance");
    if (std::isinf(omega)) return 0.0;
    const double x = omega * r * c;
    return 1.0 / (1.0 + x * x);
}

double electrode_noise_heating(const IonSpecies& sp, double omega, double s_v, std::optional<RcFilter> filter,
                               double coupling, int n_electrodes) {
    require_nonnegative(s_v, "S_V");
    if (n_electrodes < 0) throw ValidationError("electrode count must be non-negative");
    const double a = filter ? rc_attenuation(omega, filter->r, filter->c) : 1.0;
    return n_electrodes * heating_rate_from_se(sp, omega, s_v * coupling * coupling * a);
}

namespace {

double line_shape(double omega, double omega0, double q_loaded) {
    if (!(omega0 > 0.0)) throw ValidationError("resonance frequency must be positive");
    if (!(q_loaded > 0.0)) throw ValidationError("loaded Q must be positive");
    const double x = 2.0 * q_loaded * (omega - omega0) / omega0;
    return 1.0 / (1.0 + x * x);
}

}  // namespace

double resonator_filter_attenuation(double omega, double omega0, double q_loaded) {
    return 10.0 * std::log10(line_shape(omega, omega0, q_loaded));
}

double resonator_johnson_psd(double omega, double omega0, double q_loaded, double r_parallel, double t) {
    return johnson_voltage_psd(r_parallel, t) * line_shape(omega, omega0, q_loaded);
}

double relative_psd_from_dbc(double dbc) { return db_to_power_ratio(dbc); }

double rfam_axial_heating(const IonSpecies& sp, double omega_z, double omega_rf, double e0, double de0_dz,
                          double relative_psd) {
    require_nonnegative(relative_psd, "relative noise PSD");
    if (!(omega_rf > 0.0)) throw ValidationError("RF frequency must be positive");
    const double force = sp.charge() * sp.charge() / (sp.mass() * omega_rf * omega_rf) * e0 * de0_dz;
    return rate_prefactor(sp, omega_z) * force * force * relative_psd;
}

double rfam_radial_heating(const IonSpecies& sp, double omega_x, double x, double relative_psd) {
    require_nonnegative(relative_psd, "relative noise PSD");
    require_nonnegative(x, "displacement");
    const double force = 2.0 * sp.mass() * omega_x * omega_x * x;
    return rate_prefactor(sp, omega_x) * force * force * relative_psd;
}

PatchField patch_field(double v_s, double a, double t, double r) {
    if (!(a > 0.0) || !(r > 0.0)) throw ValidationError("strip width and distance must be positive");
    require_nonnegative(t, "recess depth");
    const double e = 4.0 * v_s / (constants::pi * constants::pi) * a / (r * r) * std::exp(-constants::pi * t / a);
    return {e, r >= 5.0 * a, constants::pi * t >= a};
}

namespace {

void check_omega(const std::optional<double>& src, double omega, const std::string& label) {
    if (src && std::abs(*src - omega) > 1e-12 * omega)
        throw ValidationError(fmt::format("source '{}' is specified at a different motional frequency", label));
}

struct LineBuilder {
    const IonSpecies& sp;
    double omega;

    BudgetLine operator()(const FieldNoiseSource& s) const {
        check_omega(s.omega, omega, s.label);
        return {s.label, "field noise", "q^2 S_E / (4 m hbar omega)", heating_rate_from_se(sp, omega, s.s_e), 0.0};
    }
    BudgetLine operator()(const ElectrodeNoiseSource& s) const {
        check_omega(s.omega, omega, s.label);
        return {s.label, "electrode voltage noise", "n q^2 S_V C_E^2 A_LP / (4 m hbar omega)",
                electrode_noise_heating(sp, omega, s.s_v, s.filter, s.coupling, s.n_electrodes), 0.0};
    }
    BudgetLine operator()(const RfAmAxialSource& s) const {
        check_omega(s.omega, omega, s.label);
        const double k = s.two_sideband ? 2.0 : 1.0;
        return {s.label, "RF amplitude noise (axial)", "[q^2 E0 dE0/dz / (m Omega^2)]^2 r / (4 m hbar omega)",
                k * rfam_axial_heating(sp, omega, s.omega_rf, s.e0, s.de0_dz, s.relative_psd), 0.0};
    }
    BudgetLine operator()(const RfAmRadialSource& s) const {
        check_omega(s.omega, omega, s.label);
        const double k = s.two_sideband ? 2.0 : 1.0;
        return {s.label, "RF amplitude noise (radial)", "[2 m omega^2 x]^2 r / (4 m hbar omega)",
                k * rfam_radial_heating(sp, omega, s.displacement, s.relative_psd), 0.0};
    }
};

}  // namespace

BudgetReport heating_budget(const IonSpecies& sp, double omega, const std::vector<NoiseSource>& sources) {
    BudgetReport rep{omega, {}, 0.0, 0.0};
    const LineBuilder build{sp, omega};
    for (const auto& src : sources) {
        BudgetLine line = std::visit(build, src);
        line.s_e_equivalent = se_from_heating_rate(sp, omega, line.rate);
        rep.total_rate += line.rate;
        rep.lines.push_back(std::move(line));
    }
    rep.total_s_e = se_from_heating_rate(sp, omega, rep.total_rate);
    return rep;
}

}  // namespace paultrap::noise
