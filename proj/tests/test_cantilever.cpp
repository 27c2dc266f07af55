#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "paultrap/cantilever.hpp"

using namespace paultrap;
using namespace paultrap::cantilever;

namespace {

CantileverDevice reference_device() {
    return make_device(1.5e-3, 14e-6, 200e-6, 2330.0, 16e-6, 1.5e-3, units::hz_to_rad_s(7e3), 2e4);
}

RfCircuit reference_circuit(const CantileverDevice& d) {
    return make_circuit(330e-9, units::mhz_to_rad_s(100.0), 234.0, coupling_capacitance(d.w, d.h, d.d0));
}

// Composite Simpson rule of g over [a, b].
template <class G>
double simpson(G&& g, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = g(a) + g(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("first clamped-free eigenvalue") {
    const double b = first_mode_eigenvalue();
    CHECK(b == doctest::Approx(1.8751).epsilon(0.0001 / 1.8751));
    CHECK(std::abs(std::cos(b) * std::cosh(b) + 1.0) < 1e-12);
}

TEST_CASE("mode shape solves the beam equation with clamped-free ends") {
    const double b = first_mode_eigenvalue();
    const double h = 1e-3;
    auto d1 = [&](double x) { return (mode_shape(x + h) - mode_shape(x - h)) / (2 * h); };
    auto d2 = [&](double x) { return (mode_shape(x + h) - 2 * mode_shape(x) + mode_shape(x - h)) / (h * h); };
    CHECK(std::abs(mode_shape(0.0)) < 1e-12);
    CHECK(mode_shape(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(d1(0.0)) < 1e-5);
    CHECK(std::abs(d2(1.0)) < 1e-4);
    CHECK(std::abs((d2(1.0 + h) - d2(1.0 - h)) / (2 * h)) < 1e-3);
    for (double x = 0.1; x < 0.95; x += 0.1) {
        auto d4 = [&](double s) {
            return (mode_shape(x + 2 * s) - 4 * mode_shape(x + s) + 6 * mode_shape(x) - 4 * mode_shape(x - s) +
                    mode_shape(x - 2 * s)) /
                   std::pow(s, 4);
        };
        const double d4x = (4 * d4(0.01) - d4(0.02)) / 3;
        CHECK(d4x == doctest::Approx(std::pow(b, 4) * mode_shape(x)).epsilon(1e-5));
    }
}

TEST_CASE("mode integrals") {
    const ModeIntegrals full = mode_integrals(1.5e-3, 1.5e-3);
    CHECK(full.xi_prime == doctest::Approx(0.392).epsilon(0.003 / 0.392));
    CHECK(full.xi_dprime == doctest::Approx(0.250).epsilon(0.002 / 0.25));
    CHECK(full.xi_c_dprime == doctest::Approx(0.250).epsilon(0.002 / 0.25));
    CHECK(full.xi_prime == doctest::Approx(simpson([](double x) { return mode_shape(x); }, 0.0, 1.0)).epsilon(1e-9));
    CHECK(full.xi_c_dprime ==
          doctest::Approx(simpson([](double x) { return mode_shape(x) * mode_shape(x); }, 0.0, 1.0)).epsilon(1e-9));

    const ModeIntegrals part = mode_integrals(1.5e-3, 0.5e-3);
    const double a = 1.0 - 0.5 / 1.5;
    CHECK(part.xi_prime == doctest::Approx(simpson([](double x) { return mode_shape(x); }, a, 1.0) / (1 - a))
                               .epsilon(1e-9));
    CHECK(part.xi_dprime <= part.xi_prime);
    CHECK(part.xi_c_dprime == doctest::Approx(full.xi_c_dprime).epsilon(1e-12));

    const ModeIntegrals tip = mode_integrals(1.5e-3, 1e-9);
    CHECK(tip.xi_prime == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(tip.xi_dprime == doctest::Approx(1.0).epsilon(1e-5));
    CHECK_THROWS_AS(mode_integrals(1.5e-3, 2e-3), ValidationError);
}

TEST_CASE("coupling capacitance, lorentzian and force") {
    CHECK(coupling_capacitance(200e-6, 1.5e-3, 16e-6) == doctest::Approx(0.166e-12).epsilon(0.03));
    CHECK(coupling_capacitance(200e-6, 1.5e-3, 16e-6) == doctest::Approx(0.17e-12).epsilon(0.03));
    const double w0 = units::mhz_to_rad_s(100.0);
    CHECK(lorentzian(0.0, w0, 234.0) == 1.0);
    CHECK(lorentzian(w0 / 468.0, w0, 234.0) == doctest::Approx(0.5));
    CHECK(lorentzian(-1e5, w0, 234.0) == lorentzian(1e5, w0, 234.0));
    CHECK(rf_force(1e-13, 0.0, 1e-5) == 0.0);
    CHECK(rf_force(1e-13, 20.0, 1e-5) == doctest::Approx(4 * rf_force(1e-13, 10.0, 1e-5)));
}

TEST_CASE("device and circuit") {
    const CantileverDevice d = reference_device();
    CHECK(d.effective_mass == doctest::Approx(2330.0 * d.xi_c_dprime * 200e-6 * 1.5e-3 * 14e-6).epsilon(1e-12));
    const RfCircuit c = reference_circuit(d);
    CHECK(1.0 / std::sqrt(c.l0 * (c.c0 + c.c_c)) == doctest::Approx(c.omega0).epsilon(1e-12));
    CHECK(c.r_res() == doctest::Approx(234.0 * c.omega0 * 330e-9));
    CHECK(v_max_squared(c, 0.01) == doctest::Approx(2 * 0.01 * c.r_res()));
}

TEST_CASE("damping per watt of rf power") {
    const CantileverDevice d = reference_device();
    const RfCircuit c = reference_circuit(d);
    const double p = 1e-4, dw = units::hz_to_rad_s(90e3);
    const DampingShift ds = damping_and_shift(d, c, v_max_squared(c, p), dw);
    CHECK(ds.gamma_prime / p == doctest::Approx(3970.0).epsilon(0.15));
    CHECK(ds.kappa / p == doctest::Approx(3.45).epsilon(0.25));
    CHECK(ds.omega_shifted == doctest::Approx(d.omega_c * std::sqrt(1 - ds.kappa)).epsilon(1e-14));
    const DampingShift d2 = damping_and_shift(d, c, v_max_squared(c, 3 * p), dw);
    CHECK(d2.gamma_prime == doctest::Approx(3 * ds.gamma_prime).epsilon(1e-12));
    CHECK(d2.kappa == doctest::Approx(3 * ds.kappa).epsilon(1e-12));
    CHECK(damping_and_shift(d, c, v_max_squared(c, p), 0.0).gamma_prime == 0.0);
    for (double khz : {-300.0, -90.0, -10.0, 10.0, 90.0, 300.0}) {
        const double g = damping_and_shift(d, c, v_max_squared(c, p), units::hz_to_rad_s(khz * 1e3)).gamma_prime;
        CHECK((g > 0) == (khz > 0));
    }
    CHECK_THROWS_AS(damping_and_shift(d, c, v_max_squared(c, 10.0), dw), DomainError);
}

TEST_CASE("equivalent circuit") {
    const CantileverDevice d = reference_device();
    const double q = charge_from_l_eq(d, 27000.0);
    CHECK(q > 0.0);
    const EquivalentCircuit ec = equivalent_circuit(d, q, 5.0);
    CHECK(ec.l_eq == doctest::Approx(27000.0).epsilon(1e-12));
    CHECK(ec.l_eq == doctest::Approx(d.effective_mass * d.d0 * d.d0 / std::pow(q * d.xi_prime, 2)).epsilon(1e-12));
    CHECK(ec.c_eq == doctest::Approx(1.0 / (d.omega_c * d.omega_c * ec.l_eq)).epsilon(1e-12));
    CHECK(ec.r_eq == doctest::Approx(ec.l_eq * d.gamma()).epsilon(1e-12));
    CHECK(ec.r_rf == doctest::Approx(ec.l_eq * 5.0).epsilon(1e-12));
    const CantileverDevice frictionless =
        make_device(1.5e-3, 14e-6, 200e-6, 2330.0, 16e-6, 1.5e-3, d.omega_c, std::numeric_limits<double>::infinity());
    CHECK(equivalent_circuit(frictionless, q).r_eq == 0.0);
}

TEST_CASE("effective temperature") {
    const double kb = constants::k_boltzmann;
    const double req = 1e6;
    CHECK(effective_temperature({4 * kb * 300 * req, 0, 0}, {req, 0, 0}) == doctest::Approx(300.0).epsilon(1e-12));
    CHECK(effective_temperature({4 * kb * 300 * req, 0, 0}, {req, 5.9 * req, 0}) ==
          doctest::Approx(300.0 / 6.9).epsilon(1e-12));
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double gamma = 0.1 + u(rng), gp = 10 * u(rng), l = 1e4, t = 300 * u(rng);
        const double t_eff = effective_temperature({4 * kb * t * l * gamma, 0, 0}, {l * gamma, l * gp, 0});
        CHECK(t_eff == doctest::Approx(t * gamma / (gamma + gp)).epsilon(1e-12));
    }
}

TEST_CASE("ground state ratio") {
    CHECK(ground_state_ratio(0.1, units::mhz_to_rad_s(20e3), 5000, 20000) == doctest::Approx(0.052).epsilon(0.05));
    CHECK(ground_state_ratio(0.0, units::mhz_to_rad_s(20e3), 5000, 20000) == 0.0);
}
