#include "paultrap/crystal.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace paultrap::crystal {

double characteristic_length(const IonSpecies& sp, double omega_z) {
    if (!(omega_z > 0.0)) throw ValidationError("axial frequency must be positive");
    const double q2 = sp.charge() * sp.charge();
    return std::cbrt(q2 / (4.0 * constants::pi * constants::epsilon0 * sp.mass() * omega_z * omega_z));
}

double dimensionless_energy(const std::vector<double>& u) {
    double e = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        e += 0.5 * u[i] * u[i];
        for (std::size_t j = i + 1; j < u.size(); ++j) e += 1.0 / std::abs(u[i] - u[j]);
    }
    return e;
}

std::vector<double> dimensionless_gradient(const std::vector<double>& u) {
    std::vector<double> g(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double gi = u[i];
        for (std::size_t j = 0; j < u.size(); ++j) {
            if (j == i) continue;
            const double d = u[i] - u[j];
            gi -= (d > 0 ? 1.0 : -1.0) / (d * d);
        }
        g[i] = gi;
    }
    return g;
}

namespace {

Eigen::MatrixXd dimensionless_hessian(const Eigen::VectorXd& u) {
    const auto n = u.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double k = 2.0 / std::pow(std::abs(u[i] - u[j]), 3);
            h(i, i) += k;
            h(i, j) -= k;
        }
    return h;
}

Eigen::VectorXd gradient(const Eigen::VectorXd& u) {
    const auto g = dimensionless_gradient(std::vector<double>(u.data(), u.data() + u.size()));
    return Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
}

bool ordered(const Eigen::VectorXd& u) {
    for (Eigen::Index i = 1; i < u.size(); ++i)
        if (!(u[i] > u[i - 1])) return false;
    return true;
}

}  // namespace

CrystalResult equilibrium_positions(const IonSpecies& sp, double omega_z, int n) {
    if (n < 1 || n > 50) throw ValidationError("ion count must be between 1 and 50");
    const double s = characteristic_length(sp, omega_z);

    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = 1.08 * (i - 0.5 * (n - 1));
    Eigen::VectorXd g = gradient(u);

    bool converged = g.norm() < 1e-13;
    for (int it = 0; it < 200 && !converged; ++it) {
        Eigen::VectorXd step = dimensionless_hessian(u).ldlt().solve(-g);
        double lambda = 1.0;
        Eigen::VectorXd trial = u + step;
        while ((!ordered(trial) || gradient(trial).norm() > g.norm()) && lambda > 1e-8) {
            lambda *= 0.5;
            trial = u + lambda * step;
        }
        u = trial;
        // the exact solution is symmetric; remove rounding drift of the center
        u.array() -= u.mean();
        g = gradient(u);
        converged = g.norm() < 1e-13 || (lambda * step).norm() < 1e-15 * (1.0 + u.norm());
    }
    if (g.norm() >= 1e-10)
        throw ConvergenceError("crystal equilibrium did not converge", std::vector<double>(u.data(), u.data() + n),
                               g.norm());

    CrystalResult res;
    res.length_scale = s;
    res.converged = true;
    res.gradient_norm = g.norm();
    res.positions.resize(n);
    for (int i = 0; i < n; ++i) res.positions[i] = s * u[i];
    return res;
}

}  // namespace paultrap::crystal
