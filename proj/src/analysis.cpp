#include "paultrap/analysis.hpp"

#include <fmt/format.h>

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <functional>
#include <limits>

namespace paultrap::analysis {

using fields::FieldSample;
using fields::TrapField;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> to_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 rf_objective_gradient(const FieldSample& s) { return 2.0 * s.gradient.transpose() * s.e_field; }

// Symmetrized central-difference Jacobian of a gradient field, Richardson-extrapolated.
Mat3 fd_hessian(const std::function<Vec3(const Vec3&)>& grad, const Vec3& p, double h) {
    auto central = [&](double step) {
        Mat3 m;
        for (int j = 0; j < 3; ++j) {
            Vec3 e = Vec3::Zero();
            e[j] = step;
            m.col(j) = (grad(p + e) - grad(p - e)) / (2.0 * step);
        }
        return m;
    };
    Mat3 m = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    return 0.5 * (m + m.transpose());
}

std::pair<int, int> transverse_axes(int axial) {
    switch (axial) {
        case 0: return {1, 2};
        case 1: return {0, 2};
        default: return {0, 1};
    }
}

bool coordinate_descent(const TrapField& trap, Vec3& p, const NullOptions& opt, double scale) {
    auto f = [&](const Vec3& x) {
        if (!trap.in_domain(x)) return std::numeric_limits<double>::infinity();
        return trap.rf_basis(x).e_field.squaredNorm();
    };
    double span = 0.5 * scale;
    for (int sweep = 0; sweep < opt.max_iterations; ++sweep) {
        Vec3 before = p;
        for (int axis = 0; axis < 3; ++axis) {
            if (opt.fix_axial && axis == trap.axial_axis()) continue;
            auto line = [&](double t) {
                Vec3 x = p;
                x[axis] += t;
                return f(x);
            };
            auto [t, val] = boost::math::tools::brent_find_minima(line, -span, span, 52);
            (void)val;
            p[axis] += t;
        }
        const double moved = (p - before).norm();
        if (moved < opt.step_tolerance * trap.length_scale(p)) return true;
        span = std::max(4.0 * moved, 1e-9 * scale);
    }
    return false;
}

}  // namespace

namespace {

// Rejects points where the field only looks small because everything has decayed, e.g. far above a planar trap.
NullResult checked_null(const TrapField& trap, const Vec3& p, int iterations, const NullOptions& opt) {
    const FieldSample s = trap.rf_basis(p);
    Vec3 e = s.e_field;
    if (opt.fix_axial) e[trap.axial_axis()] = 0.0;
    const double g = s.gradient.norm(), scale = trap.length_scale(p);
    if (!p.allFinite() || !(g > 0.0) || !std::isfinite(g) || e.norm() > 1e-6 * g * scale)
        throw ConvergenceError("RF null search did not converge", to_vector(p), s.e_field.norm());
    return {p, s.e_field.norm(), iterations};
}

}  // namespace

NullResult find_rf_null(const TrapField& trap, const Vec3& guess, const NullOptions& opt) {
    if (!trap.in_domain(guess)) throw DomainError("RF null search started outside the model domain");
    Vec3 p = guess;
    FieldSample s = trap.rf_basis(p);
    double f = s.e_field.squaredNorm();
    double mu = -1.0;
    const int axial = trap.axial_axis();

    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double scale = trap.length_scale(p);
        Mat3 jtj = s.gradient.transpose() * s.gradient;
        Vec3 g = s.gradient.transpose() * s.e_field;
        if (opt.fix_axial) {
            jtj.row(axial).setZero();
            jtj.col(axial).setZero();
            jtj(axial, axial) = 1.0;
            g[axial] = 0.0;
        }
        const double tr = std::max(jtj.trace(), std::numeric_limits<double>::min());
        if (mu < 0.0) mu = 1e-9 * tr;

        if (f <= 1e-28 * tr * scale * scale) return checked_null(trap, p, it, opt);

        bool accepted = false;
        Vec3 step = Vec3::Zero();
        while (!accepted && mu < 1e12 * tr) {
            step = (jtj + mu * Mat3::Identity()).ldlt().solve(-g);
            Vec3 trial = p + step;
            if (!trap.in_domain(trial)) {
                mu *= 4.0;
                continue;
            }
            FieldSample ts = trap.rf_basis(trial);
            const double ft = ts.e_field.squaredNorm();
            if (ft <= f) {
                p = trial;
                s = ts;
                f = ft;
                mu = std::max(mu / 3.0, 1e-12 * tr);
                accepted = true;
            } else {
                mu *= 4.0;
            }
        }
        if (!accepted || step.norm() < opt.step_tolerance * scale) return checked_null(trap, p, it, opt);
    }

    Vec3 q = p;
    if (coordinate_descent(trap, q, opt, trap.length_scale(p))) {
        return checked_null(trap, q, opt.max_iterations, opt);
    }
    throw ConvergenceError("RF null search did not converge", to_vector(q), trap.rf_basis(q).e_field.norm());
}

double total_energy(const TrapField& trap, const IonSpecies& sp, const Vec3& p) {
    const double c = fields::pseudopotential_coefficient(trap.drive(), sp);
    return sp.charge() * trap.static_field(p).potential + c * trap.rf_basis(p).e_field.squaredNorm();
}

Vec3 total_energy_gradient(const TrapField& trap, const IonSpecies& sp, const Vec3& p) {
    const double c = fields::pseudopotential_coefficient(trap.drive(), sp);
    return -sp.charge() * trap.static_field(p).e_field + c * rf_objective_gradient(trap.rf_basis(p));
}

Mat3 total_energy_hessian(const TrapField& trap, const IonSpecies& sp, const Vec3& p) {
    const double h = 1e-6 * trap.length_scale(p);
    return fd_hessian([&](const Vec3& x) { return total_energy_gradient(trap, sp, x); }, p, h);
}

Vec3 find_equilibrium(const TrapField& trap, const IonSpecies& sp, const Vec3& start, int max_iterations) {
    Vec3 p = start;
    Vec3 g = total_energy_gradient(trap, sp, p);
    for (int it = 0; it < max_iterations; ++it) {
        const double scale = trap.length_scale(p);
        const Mat3 h = total_energy_hessian(trap, sp, p);
        Vec3 step = h.ldlt().solve(-g);
        if (!step.allFinite()) step = -g / std::max(h.norm(), 1e-300);
        // keep steps within a fraction of the local scale and inside the domain
        const double cap = 0.25 * scale;
        if (step.norm() > cap) step *= cap / step.norm();
        double lambda = 1.0;
        Vec3 trial = p + step;
        Vec3 gt = trap.in_domain(trial) ? total_energy_gradient(trap, sp, trial) : Vec3::Constant(kNaN);
        while ((!gt.allFinite() || gt.norm() > g.norm()) && lambda > 1e-6) {
            lambda *= 0.5;
            trial = p + lambda * step;
            gt = trap.in_domain(trial) ? total_energy_gradient(trap, sp, trial) : Vec3::Constant(kNaN);
        }
        if (!gt.allFinite()) break;
        p = trial;
        g = gt;
        if ((lambda * step).norm() < 1e-12 * scale || g.norm() == 0.0) return p;
    }
    throw ConvergenceError("equilibrium search did not converge", to_vector(p), g.norm());
}

Vec3 default_null_guess(const TrapField& trap) {
    if (trap.in_domain(Vec3::Zero())) return Vec3::Zero();
    // planar: scan the vertical line above the centroid of the RF electrodes
    const auto* planar = dynamic_cast<const fields::PlanarTrapModel*>(&trap);
    if (!planar) throw ValidationError("no default RF-null guess for this trap; pass one explicitly");
    double x1 = 1e300, x2 = -1e300, y1 = 1e300, y2 = -1e300;
    for (const auto& e : planar->electrodes()) {
        if (e.role != fields::ElectrodeRole::RF) continue;
        for (const auto& r : e.rects) {
            x1 = std::min(x1, r.x1);
            x2 = std::max(x2, r.x2);
            y1 = std::min(y1, r.y1);
            y2 = std::max(y2, r.y2);
        }
    }
    // interior local minima of |E|^2 on a (y, z) grid across the RF extent; the deepest one wins
    const double xc = 0.5 * (x1 + x2), w = y2 - y1;
    const int ny = 120, nz = 120;
    std::vector<double> f(static_cast<std::size_t>(ny + 1) * (nz + 1));
    auto at = [&](int i, int j) -> double& { return f[static_cast<std::size_t>(i) * (nz + 1) + j]; };
    auto point = [&](int i, int j) { return Vec3(xc, y1 + w * i / ny, 2.0 * w * (j + 1) / (nz + 1)); };
    for (int i = 0; i <= ny; ++i)
        for (int j = 0; j <= nz; ++j) at(i, j) = trap.rf_basis(point(i, j)).e_field.squaredNorm();
    Vec3 best(xc, 0.5 * (y1 + y2), 0.5 * w);
    double best_f = std::numeric_limits<double>::infinity();
    for (int i = 1; i < ny; ++i)
        for (int j = 1; j < nz; ++j) {
            const double v = at(i, j);
            bool local = true;
            for (int di = -1; di <= 1 && local; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    if ((di || dj) && at(i + di, j + dj) < v) {
                        local = false;
                        break;
                    }
            if (local && v < best_f) {
                best_f = v;
                best = point(i, j);
            }
        }
    return best;
}

SecularResult secular_frequencies(const TrapField& trap, const IonSpecies& sp, const SecularOptions& opt) {
    const Vec3 guess = opt.guess ? *opt.guess : default_null_guess(trap);
    const NullResult null = find_rf_null(trap, guess);
    const Vec3 eq = find_equilibrium(trap, sp, null.point);
    const Mat3 h = total_energy_hessian(trap, sp, eq);

    Eigen::SelfAdjointEigenSolver<Mat3> es(h);
    const Vec3 lambda = es.eigenvalues();
    const double lmax = lambda.cwiseAbs().maxCoeff();

    SecularResult res;
    res.null_point = null.point;
    res.equilibrium = eq;
    res.residual_field = null.residual_field;
    for (int i = 0; i < 3; ++i) {
        double l = lambda[i];
        if (!(l > 1e-9 * lmax)) {
            if (opt.allow_free_axis && std::abs(l) <= 1e-9 * lmax) {
                l = 0.0;
            } else {
                throw NotConfiningError(
                    fmt::format("total potential is not confining; Hessian eigenvalues {:.6g}, {:.6g}, {:.6g} J/m^2",
                                lambda[0], lambda[1], lambda[2]),
                    to_vector(lambda));
            }
        }
        res.omegas[i] = std::sqrt(l / sp.mass());
        res.axes[i] = es.eigenvectors().col(i).normalized();
    }

    const int axial = trap.axial_axis();
    res.axial_index = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(res.axes[i][axial]) > std::abs(res.axes[res.axial_index][axial])) res.axial_index = i;

    int radial[2], n = 0;
    for (int i = 0; i < 3; ++i)
        if (i != res.axial_index) radial[n++] = i;
    const double w0 = res.omegas[radial[0]], w1 = res.omegas[radial[1]];
    if (std::abs(w1 - w0) > 1e-6 * std::max(w0, w1)) {
        const auto [a, b] = transverse_axes(axial);
        const Vec3& v = res.axes[radial[0]];  // lower radial frequency
        double deg = units::rad_to_deg(std::atan2(v[b], v[a]));
        while (deg <= -90.0) deg += 180.0;
        while (deg > 90.0) deg -= 180.0;
        res.tilt_deg = deg;
    }
    return res;
}

namespace {

struct PathPeak {
    double energy;
    Vec3 point;
};

}  // namespace

DepthResult trap_depth(const TrapField& trap, const IonSpecies& sp, const DepthOptions& opt) {
    const NullResult null = find_rf_null(trap, default_null_guess(trap));
    const double c = fields::pseudopotential_coefficient(trap.drive(), sp);
    const Vec3 p0 = opt.include_static ? find_equilibrium(trap, sp, null.point) : null.point;
    const double scale = trap.length_scale(p0);
    const double floor_z = 1e-3 * scale;

    auto in_domain = [&](const Vec3& x) {
        if (!trap.in_domain(x)) return false;
        return !trap.in_domain(Vec3(0, 0, -1)) ? x.z() > floor_z : true;
    };
    auto energy = [&](const Vec3& x) {
        if (!in_domain(x)) return std::numeric_limits<double>::infinity();
        double u = c * trap.rf_basis(x).e_field.squaredNorm();
        if (opt.include_static) u += sp.charge() * trap.static_field(x).potential;
        return u;
    };
    auto gradient = [&](const Vec3& x) -> Vec3 {
        Vec3 g = c * rf_objective_gradient(trap.rf_basis(x));
        if (opt.include_static) g -= sp.charge() * trap.static_field(x).e_field;
        return g;
    };

    const double e0 = energy(p0);
    const auto [ia, ib] = transverse_axes(trap.axial_axis());
    Vec3 ea = Vec3::Zero(), eb = Vec3::Zero();
    ea[ia] = 1.0;
    eb[ib] = 1.0;

    // weakest in-plane curvature direction
    const Mat3 h3 = fd_hessian(gradient, p0, 1e-6 * scale);
    Eigen::Matrix2d h2;
    h2 << h3(ia, ia), h3(ia, ib), h3(ib, ia), h3(ib, ib);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es2(h2);
    const double theta0 = std::atan2(es2.eigenvectors()(1, 0), es2.eigenvectors()(0, 0));

    const double box = opt.box_factor * scale;
    const double ds = box / opt.path_steps;
    auto in_box = [&](const Vec3& x) {
        const Vec3 d = x - p0;
        return std::abs(d[ia]) <= box && std::abs(d[ib]) <= box;
    };

    std::optional<PathPeak> best;
    for (int k = 0; k < opt.directions; ++k) {
        const double th = theta0 + constants::two_pi * k / opt.directions;
        const Vec3 dir = std::cos(th) * ea + std::sin(th) * eb;
        const Vec3 perp = -std::sin(th) * ea + std::cos(th) * eb;

        double t = 0.0;
        PathPeak peak{e0, p0};
        bool crossed = false;
        for (int i = 1; i <= opt.path_steps; ++i) {
            const Vec3 base = p0 + (i * ds) * dir;
            auto along = [&](double tt) { return energy(base + tt * perp); };
            auto [tmin, emin] = boost::math::tools::brent_find_minima(along, t - 4.0 * ds, t + 4.0 * ds, 40);
            t = tmin;
            const Vec3 x = base + t * perp;
            if (!std::isfinite(emin) || !in_box(x)) break;
            if (emin > peak.energy) {
                peak = {emin, x};
            } else if (emin < peak.energy - 1e-3 * (peak.energy - e0)) {
                crossed = true;
                break;
            }
        }
        if (!crossed) continue;

        // polish on the in-plane gradient; accept only if it stays close to the path peak
        Vec3 s = peak.point;
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            const Mat3 hs = fd_hessian(gradient, s, 1e-6 * trap.length_scale(s));
            const Vec3 g = gradient(s);
            Eigen::Matrix2d m;
            m << hs(ia, ia), hs(ia, ib), hs(ib, ia), hs(ib, ib);
            const Eigen::Vector2d rhs(-g[ia], -g[ib]);
            const Eigen::Vector2d d = m.fullPivLu().solve(rhs);
            if (!d.allFinite()) break;
            s[ia] += d[0];
            s[ib] += d[1];
            if (!in_domain(s)) break;
            if (d.norm() < 1e-10 * scale) {
                ok = true;
                break;
            }
        }
        PathPeak cand = peak;
        if (ok && (s - peak.point).norm() < 10.0 * ds && in_box(s)) cand = {energy(s), s};
        if (!best || cand.energy < best->energy) best = cand;
    }

    if (!best) {
        throw ConvergenceError(
            fmt::format("no escape saddle found within a +/-{:.4g} m box around the minimum ({} directions)", box,
                        opt.directions),
            to_vector(p0), 0.0);
    }
    const double depth = std::max(0.0, best->energy - e0);
    return {depth, depth / constants::elementary_charge, p0, best->point};
}

MathieuParams mathieu_params(double r, double v0, double vdc, double omega_rf, const IonSpecies& sp) {
    if (!(r > 0.0)) throw ValidationError("R must be positive");
    if (!(omega_rf > 0.0)) throw ValidationError("RF frequency must be positive");
    const double denom = sp.mass() * omega_rf * omega_rf * r * r;
    return {4.0 * sp.charge() * vdc / denom, 2.0 * sp.charge() * v0 / denom};
}

Stability mathieu_stability(const MathieuParams& mp, int steps_per_period) {
    using State = std::array<double, 2>;
    namespace odeint = boost::numeric::odeint;
    const double a = mp.a, q = mp.q;
    auto rhs = [a, q](const State& x, State& dxdt, double t) {
        dxdt[0] = x[1];
        dxdt[1] = -(a - 2.0 * q * std::cos(2.0 * t)) * x[0];
    };
    const double period = constants::pi;
    const double dt = period / steps_per_period;
    odeint::runge_kutta4<State> stepper;
    State c{1.0, 0.0}, s{0.0, 1.0};
    odeint::integrate_n_steps(stepper, rhs, c, 0.0, dt, steps_per_period);
    odeint::integrate_n_steps(stepper, rhs, s, 0.0, dt, steps_per_period);

    Stability out;
    out.trace = c[0] + s[1];
    out.stable = std::abs(out.trace) <= 2.0 + 1e-9;
    out.beta = out.stable ? std::acos(std::clamp(0.5 * out.trace, -1.0, 1.0)) / constants::pi : kNaN;
    const double rad = a + 0.5 * q * q;
    out.beta_approx = rad >= 0.0 ? std::sqrt(rad) : kNaN;
    return out;
}

double secular_from_spacing(double spacing_3ion, const IonSpecies& sp) {
    if (!(spacing_3ion > 0.0)) throw ValidationError("ion spacing must be positive");
    const double s = spacing_3ion / std::cbrt(1.25);
    return 0.5 * std::abs(sp.charge()) / std::sqrt(constants::pi * constants::epsilon0 * sp.mass() * s * s * s);
}

}  // namespace paultrap::analysis
