// Independent reference computations shared by the test suites. Nothing here calls the
// closed-form code under test.
#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "paultrap/fields.hpp"
#include "paultrap/io.hpp"

namespace oracle {

inline std::string data_path(const std::string& name) { return std::string(PAULTRAP_DATA_DIR) + "/" + name; }

inline paultrap::fields::PlanarTrapModel five_wire() {
    return paultrap::io::parse_geometry(paultrap::io::load_json_file(data_path("five_wire.json")));
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// Potential of a unit-volt plate as the flux integral (1/2pi) int z / r^3 dA.
inline double rect_potential_quadrature(const paultrap::Vec3& p, const paultrap::fields::Rect& r) {
    using boost::math::quadrature::gauss_kronrod;
    const double z = p.z();
    // Inner integral over y' in closed form: int z/(a^2+u^2)^{3/2} du = z u / (a^2 sqrt(a^2+u^2)).
    auto inner = [&](double xs) {
        const double dx = p.x() - xs, a2 = dx * dx + z * z;
        auto prim = [&](double u) { return z * u / (a2 * std::sqrt(a2 + u * u)); };
        return prim(r.y2 - p.y()) - prim(r.y1 - p.y());
    };
    return gauss_kronrod<double, 61>::integrate(inner, r.x1, r.x2, 15, 1e-13) / (2.0 * M_PI);
}

// Bessel function of integer order from the integral (1/pi) int_0^pi cos(n t - x sin t) dt.
inline double bessel_j_integral(int n, double x) {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double t) { return std::cos(n * t - x * std::sin(t)); };
    return gauss_kronrod<double, 61>::integrate(f, 0.0, M_PI, 15, 1e-14) / M_PI;
}

// Richardson-extrapolated second central difference of f along unit vector e.
template <class F>
double second_derivative(F&& f, const paultrap::Vec3& p, const paultrap::Vec3& e, double h) {
    auto d2 = [&](double s) { return (f(p + s * e) - 2.0 * f(p) + f(p - s * e)) / (s * s); };
    return (4.0 * d2(h / 2.0) - d2(h)) / 3.0;
}

}  // namespace oracle
