#include "paultrap/cantilever.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>

namespace paultrap::cantilever {

double first_mode_eigenvalue() {
    static const double root = [] {
        auto f = [](double x) { return std::cos(x) * std::cosh(x) + 1.0; };
        std::uintmax_t it = 100;
        auto [a, b] = boost::math::tools::toms748_solve(f, 1.5, 2.5, boost::math::tools::eps_tolerance<double>(52), it);
        return 0.5 * (a + b);
    }();
    return root;
}

namespace {

double raw_mode(double x, double beta) {
    const double sigma = (std::cosh(beta) + std::cos(beta)) / (std::sinh(beta) + std::sin(beta));
    const double b = beta * x;
    return std::cosh(b) - std::cos(b) - sigma * (std::sinh(b) - std::sin(b));
}

template <class F>
double integrate(F f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

}  // namespace

double mode_shape(double x) {
    const double beta = first_mode_eigenvalue();
    return raw_mode(x, beta) / raw_mode(1.0, beta);
}

ModeIntegrals mode_integrals(double h_c, double h) {
    if (!(h_c > 0.0) || !(h > 0.0)) throw ValidationError("lengths must be positive");
    if (h > h_c) throw ValidationError("overlap length exceeds cantilever length");
    const double r = h / h_c;
    const double lo = 1.0 - r;
    ModeIntegrals out;
    out.xi_prime = integrate([](double x) { return mode_shape(x); }, lo, 1.0) / r;
    out.xi_dprime = integrate([](double x) { return std::pow(mode_shape(x), 2); }, lo, 1.0) / r;
    out.xi_c_dprime = integrate([](double x) { return std::pow(mode_shape(x), 2); }, 0.0, 1.0);
    return out;
}

CantileverDevice make_device(double h_c, double s, double w, double rho, double d0, double h, double omega_c,
                             double q_c_mech) {
    if (!(s > 0.0) || !(w > 0.0) || !(d0 > 0.0)) throw ValidationError("lengths must be positive");
    if (!(rho > 0.0)) throw ValidationError("density must be positive");
    if (!(omega_c > 0.0)) throw ValidationError("mechanical frequency must be positive");
    if (!(q_c_mech > 0.0)) throw ValidationError("mechanical Q must be positive");
    const ModeIntegrals xi = mode_integrals(h_c, h);
    CantileverDevice d{h_c, s, w, rho, d0, h, omega_c, q_c_mech, 0.0, xi.xi_prime, xi.xi_dprime, xi.xi_c_dprime};
    d.effective_mass = rho * xi.xi_c_dprime * w * h_c * s;
    return d;
}

double coupling_capacitance(double w, double h, double d) {
    if (!(w > 0.0) || !(h > 0.0) || !(d > 0.0)) throw ValidationError("lengths must be positive");
    return constants::epsilon0 * w * h / d;
}

RfCircuit make_circuit(double l0, double omega0, double q_rf, double c_c) {
    if (!(l0 > 0.0)) throw ValidationError("inductance must be positive");
    if (!(omega0 > 0.0)) throw ValidationError("resonance frequency must be positive");
    if (!(q_rf > 0.0)) throw ValidationError("Q must be positive");
    if (!(c_c >= 0.0)) throw ValidationError("coupling capacitance must be non-negative");
    const double c_total = 1.0 / (omega0 * omega0 * l0);
    if (c_total <= c_c) throw ValidationError("coupling capacitance exceeds the total resonator capacitance");
    return {l0, c_total - c_c, c_c, omega0, q_rf, omega0 / q_rf};
}

double v_max_squared(const RfCircuit& c, double power) {
    if (!(power >= 0.0)) throw ValidationError("power must be non-negative");
    return 2.0 * power * c.r_res();
}

double lorentzian(double delta_omega, double omega0, double q_rf) {
    const double x = 2.0 * q_rf * delta_omega / omega0;
    return 1.0 / (1.0 + x * x);
}

double rf_force(double c_c, double v_rf, double d) {
    if (!(d > 0.0)) throw ValidationError("gap must be positive");
    return c_c * v_rf * v_rf / (4.0 * d);
}

DampingShift damping_and_shift(const CantileverDevice& dev, const RfCircuit& c, double v_max_sq, double delta_omega) {
    const double l = lorentzian(delta_omega, c.omega0, c.q_rf);
    const double m = dev.effective_mass;
    const double wc = dev.omega_c;
    const double d2 = dev.d0 * dev.d0;
    const double ratio = c.c_c / (c.c_c + c.c0);
    const double phase = wc * 4.0 * l / c.gamma;

    DampingShift out;
    out.phase = phase;
    out.kappa = c.c_c * v_max_sq * l / (2.0 * m * wc * wc * d2) *
                (dev.xi_dprime + 2.0 * dev.xi_prime * dev.xi_prime * c.q_rf * delta_omega * l / c.gamma * ratio);
    out.gamma_prime = c.q_rf * v_max_sq * c.c_c * c.c_c / (m * wc * d2 * (c.c_c + c.c0)) * dev.xi_prime *
                      dev.xi_prime * delta_omega * l * l / c.gamma * std::sin(phase);
    if (out.kappa >= 1.0) throw DomainError("spring softening kappa >= 1: cantilever is statically unstable");
    out.omega_shifted = wc * std::sqrt(1.0 - out.kappa);
    return out;
}

EquivalentCircuit equivalent_circuit(const CantileverDevice& dev, double charge, double gamma_prime) {
    if (charge == 0.0) throw ValidationError("cantilever charge must be nonzero");
    const double qx = charge * dev.xi_prime;
    const double l_eq = dev.effective_mass * dev.d0 * dev.d0 / (qx * qx);
    return {l_eq, 1.0 / (dev.omega_c * dev.omega_c * l_eq), l_eq * dev.gamma(), l_eq * gamma_prime};
}

double charge_from_l_eq(const CantileverDevice& dev, double l_eq) {
    if (!(l_eq > 0.0)) throw ValidationError("inductance must be positive");
    return std::sqrt(dev.effective_mass / l_eq) * dev.d0 / dev.xi_prime;
}

double effective_temperature(const NoiseVoltages& n, const Resistances& r) {
    const double rsum = r.r_eq + r.r_rf + r.r_s;
    if (!(rsum > 0.0)) throw ValidationError("total resistance must be positive");
    return (n.e_req2 + n.e_rs2 + n.e_rf2) / (4.0 * constants::k_boltzmann * rsum);
}

double ground_state_ratio(double t_c, double omega0, double q_rf, double q_c) {
    if (!(t_c >= 0.0)) throw ValidationError("temperature must be non-negative");
    if (!(omega0 > 0.0) || !(q_rf > 0.0) || !(q_c > 0.0)) throw ValidationError("frequency and Q must be positive");
    return 2.0 * constants::k_boltzmann * t_c * q_rf / (constants::hbar * omega0 * q_c);
}

}  // namespace paultrap::cantilever
