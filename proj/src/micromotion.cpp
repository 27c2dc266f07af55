#include "paultrap/micromotion.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>

namespace paultrap::micromotion {

namespace {

double bessel_j(int n, double x) { return std::cyl_bessel_j(static_cast<double>(std::abs(n)), x); }

}  // namespace

double displacement_from_field(const IonSpecies& sp, double omega_r, double e_dc) {
    if (!(omega_r > 0.0)) throw ValidationError("secular frequency must be positive");
    return sp.charge() * e_dc / (sp.mass() * omega_r * omega_r);
}

double micromotion_amplitude(double omega_r, double omega_rf, double x_d) {
    if (!(omega_rf > 0.0)) throw ValidationError("RF frequency must be positive");
    return std::sqrt(2.0) * omega_r / omega_rf * x_d;
}

double modulation_index(double wavelength, double amplitude, double angle_deg) {
    if (!(wavelength > 0.0)) throw ValidationError("wavelength must be positive");
    // cos(90 deg) should vanish exactly
    const double c = angle_deg == 90.0 ? 0.0 : std::cos(units::deg_to_rad(angle_deg));
    return constants::two_pi / wavelength * std::abs(amplitude) * std::abs(c);
}

double amplitude_for_index(double beta, double wavelength, double angle_deg) {
    if (!(wavelength > 0.0)) throw ValidationError("wavelength must be positive");
    const double c = std::cos(units::deg_to_rad(angle_deg));
    if (std::abs(c) < 1e-15) throw DomainError("k-vector is perpendicular to the micromotion");
    return beta * wavelength / (constants::two_pi * std::abs(c));
}

MicromotionState excess_micromotion(const IonSpecies& sp, double omega_r, double omega_rf, double e_dc,
                                    double wavelength, double angle_deg) {
    MicromotionState st;
    st.displacement = std::abs(displacement_from_field(sp, omega_r, e_dc));
    st.amplitude = micromotion_amplitude(omega_r, omega_rf, st.displacement);
    st.beta = modulation_index(wavelength, st.amplitude, angle_deg);
    st.geometry_angle_deg = angle_deg;
    return st;
}

std::optional<int> default_n_max(double beta) {
    double sum = bessel_j(0, beta) * bessel_j(0, beta);
    if (sum > 1.0 - 1e-9) return 0;
    for (int n = 1; n <= 64; ++n) {
        const double j = bessel_j(n, beta);
        sum += 2.0 * j * j;
        if (sum > 1.0 - 1e-9) return n;
    }
    return std::nullopt;
}

FluorescenceSpectrum::FluorescenceSpectrum(LineParams line, double beta, std::optional<int> n_max)
    : line_(line), beta_(beta) {
    if (!(line.gamma > 0.0)) throw ValidationError("linewidth must be positive");
    if (!(line.wavelength > 0.0)) throw ValidationError("wavelength must be positive");
    if (!(line.omega_rf > 0.0)) throw ValidationError("RF frequency must be positive");
    if (!(beta >= 0.0)) throw ValidationError("modulation index must be non-negative");
    const auto needed = default_n_max(beta);
    if (!needed) throw ValidationError("modulation index too large for 64 sidebands");
    if (n_max && *n_max < *needed)
        throw ValidationError("n_max too small: sideband weights do not sum to 1 - 1e-9");
    n_max_ = n_max ? *n_max : std::max(1, *needed);
    weights_.resize(n_max_ + 1);
    for (int n = 0; n <= n_max_; ++n) {
        const double j = bessel_j(n, beta);
        weights_[n] = j * j;
    }
}

double FluorescenceSpectrum::operator()(double detuning) const {
    const double hw2 = 0.25 * line_.gamma * line_.gamma;
    auto lorentz = [&](double d) { return hw2 / (d * d + hw2); };
    double sum = weights_[0] * lorentz(detuning);
    for (int n = 1; n <= n_max_; ++n)
        sum += weights_[n] * (lorentz(detuning + n * line_.omega_rf) + lorentz(detuning - n * line_.omega_rf));
    return sum;
}

double sideband_equality_beta() {
    auto f = [](double b) {
        const double j0 = bessel_j(0, b), j1 = bessel_j(1, b);
        return j0 * j0 - j1 * j1;
    };
    auto [lo, hi] = boost::math::tools::bisect(f, 1.0, 2.0, boost::math::tools::eps_tolerance<double>(50));
    return 0.5 * (lo + hi);
}

double phase_from_path_difference(double delta_d, double omega_rf) {
    if (!(omega_rf > 0.0)) throw ValidationError("RF frequency must be positive");
    const double lambda_rf = constants::two_pi * constants::speed_of_light / omega_rf;
    return 360.0 * delta_d / lambda_rf;
}

PhaseImbalance phase_imbalance_micromotion(const IonSpecies& sp, double e0, double phi_deg, double omega_rf) {
    if (!(omega_rf > 0.0)) throw ValidationError("RF frequency must be positive");
    const double phi = units::deg_to_rad(phi_deg);
    const double x0 = std::abs(sp.charge() * e0 * phi / (sp.mass() * omega_rf * omega_rf));
    return {x0, std::abs(phi) <= 0.2};
}

DividerResponse rc_phase_shift(std::complex<double> z_series, std::complex<double> z_shunt) {
    const auto total = z_series + z_shunt;
    if (std::abs(total) == 0.0) throw ValidationError("divider impedances sum to zero");
    const auto ratio = z_shunt / total;
    return {std::abs(ratio), units::rad_to_deg(std::arg(ratio)), ratio};
}

std::complex<double> resistor(double r) { return {r, 0.0}; }

std::complex<double> capacitor(double c, double omega) {
    if (!(c > 0.0) || !(omega > 0.0)) throw ValidationError("capacitance and frequency must be positive");
    return {0.0, -1.0 / (omega * c)};
}

std::complex<double> inductor(double l, double omega) { return {0.0, omega * l}; }

}  // namespace paultrap::micromotion
