#include <doctest.h>

#include <boost/numeric/odeint.hpp>
#include <queue>
#include <random>

#include "oracles.hpp"
#include "paultrap/analysis.hpp"
#include "paultrap/crystal.hpp"

using namespace paultrap;
using namespace paultrap::analysis;
using fields::ElectrodeRole;
using fields::IdealQuadrupole;
using fields::PlanarTrapModel;
using fields::Rect;

namespace {

const IonSpecies kMg = species_by_label("24Mg+");

IdealQuadrupole reference_quadrupole(Mat3 k = Mat3::Zero()) {
    return IdealQuadrupole(50e-6, RfDrive(units::mhz_to_rad_s(100.0), 50.0), k);
}

double closed_form_omega_r() {
    const double omega = units::mhz_to_rad_s(100.0), r = 50e-6;
    return kMg.charge() * 50.0 / (std::sqrt(2.0) * kMg.mass() * omega * r * r);
}

// Four strips of unequal width; the null sits off the centre line and the radial axes are tilted.
PlanarTrapModel asymmetric_four_wire() {
    const double L = 1500e-6;
    std::vector<fields::PlanarElectrode> es = {
        {"outer", ElectrodeRole::DC, {Rect(-L, L, -250e-6, -90e-6)}},
        {"rf", ElectrodeRole::RF, {Rect(-L, L, -90e-6, -30e-6), Rect(-L, L, 30e-6, 150e-6)}},
        {"centre", ElectrodeRole::DC, {Rect(-L, L, -30e-6, 30e-6)}},
    };
    return PlanarTrapModel(es, RfDrive(units::mhz_to_rad_s(50.0), 100.0));
}

// Lowest barrier over all grid paths from the minimum to the edge of the box (priority flood).
double grid_escape_energy(const fields::TrapField& trap, const Vec3& p0, double box, double floor_z, int n) {
    const double c = fields::pseudopotential_coefficient(trap.drive(), kMg);
    const double h = 2.0 * box / n;
    const int m = n + 1;
    std::vector<double> e(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Vec3 p(p0.x(), p0.y() - box + i * h, p0.z() - box + j * h);
            e[i * m + j] = p.z() > floor_z ? c * trap.rf_basis(p).e_field.squaredNorm()
                                           : std::numeric_limits<double>::infinity();
        }
    std::vector<double> level(e.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    const int start = (n / 2) * m + n / 2;
    level[start] = e[start];
    pq.push({e[start], start});
    while (!pq.empty()) {
        const auto [lv, idx] = pq.top();
        pq.pop();
        if (lv > level[idx]) continue;
        const int i = idx / m, j = idx % m;
        if (i == 0 || j == 0 || i == n || j == n) return lv;
        const int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int nb = (i + di[k]) * m + (j + dj[k]);
            const double cand = std::max(lv, e[nb]);
            if (cand < level[nb]) {
                level[nb] = cand;
                pq.push({cand, nb});
            }
        }
    }
    return std::numeric_limits<double>::infinity();
}

// Monodromy trace from an adaptive Dormand-Prince integration.
double floquet_trace_dopri(double a, double q) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2>;
    auto rhs = [a, q](const State& x, State& dx, double t) {
        dx[0] = x[1];
        dx[1] = -(a - 2.0 * q * std::cos(2.0 * t)) * x[0];
    };
    State c{1.0, 0.0}, s{0.0, 1.0};
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-13, 1e-13);
    odeint::integrate_adaptive(stepper, rhs, c, 0.0, M_PI, 1e-3);
    odeint::integrate_adaptive(stepper, rhs, s, 0.0, M_PI, 1e-3);
    return c[0] + s[1];
}

}  // namespace

TEST_CASE("rf null of the ideal quadrupole is the axis") {
    const auto res = find_rf_null(reference_quadrupole(), Vec3(3e-6, -2e-6, 5e-6));
    CHECK(res.point.head<2>().norm() < 1e-12);
    CHECK(res.residual_field < 1e-6);
}

TEST_CASE("rf null of the symmetric five-wire trap is on the symmetry line") {
    const PlanarTrapModel m = oracle::five_wire();
    const auto res = find_rf_null(m, default_null_guess(m));
    CHECK(std::abs(res.point.y()) < 1e-12);
    CHECK(res.point.z() > 50e-6);
    CHECK(res.point.z() < 150e-6);
    CHECK(res.residual_field * res.point.z() < 1e-6);
    const Vec3 d(25e-6, 40e-6, 0.0);
    const auto moved = find_rf_null(m.translated(d), res.point + d + Vec3(0, 3e-6, 2e-6));
    CHECK((moved.point - res.point - d).norm() < 1e-9);
    CHECK_THROWS_AS(find_rf_null(m, Vec3(0, 0, -1e-6)), DomainError);
}

TEST_CASE("secular frequency of the ideal quadrupole") {
    const SecularResult s = secular_frequencies(reference_quadrupole(), kMg, {.allow_free_axis = true});
    const double want = closed_form_omega_r();
    CHECK(s.omegas[s.axial_index] == 0.0);
    for (int i = 0; i < 3; ++i)
        if (i != s.axial_index) CHECK(oracle::rel_err(s.omegas[i], want) < 1e-6);
    CHECK(units::rad_s_to_mhz(want) == doctest::Approx(14.4).epsilon(0.005));
    CHECK_FALSE(s.tilt_deg.has_value());
    CHECK_THROWS_AS(secular_frequencies(reference_quadrupole(), kMg), NotConfiningError);
}

TEST_CASE("axial well splits radial frequencies by Laplace") {
    const double wz = units::mhz_to_rad_s(2.0);
    const IdealQuadrupole q = reference_quadrupole().with_axial_well(kMg, wz);
    const SecularResult s = secular_frequencies(q, kMg);
    const double wr = closed_form_omega_r();
    CHECK(oracle::rel_err(s.omegas[s.axial_index], wz) < 1e-6);
    CHECK(std::abs(s.axes[s.axial_index].z()) == doctest::Approx(1.0));
    const double want = std::sqrt(wr * wr - 0.5 * wz * wz);
    for (int i = 0; i < 3; ++i)
        if (i != s.axial_index) CHECK(oracle::rel_err(s.omegas[i], want) < 1e-6);
}

TEST_CASE("static field alone does not confine") {
    const IdealQuadrupole q =
        IdealQuadrupole(50e-6, RfDrive(units::mhz_to_rad_s(100.0), 0.0)).with_axial_well(kMg, 1e7);
    try {
        secular_frequencies(q, kMg);
        FAIL("expected NotConfiningError");
    } catch (const NotConfiningError& e) {
        CHECK(e.eigenvalues().size() == 3);
        CHECK(e.eigenvalues()[0] < 0.0);
    }
}

TEST_CASE("tilt is antisymmetric under mirror reflection of the bias") {
    const double k0 = kMg.mass() * std::pow(units::mhz_to_rad_s(2.0), 2) / kMg.charge();
    Mat3 k;
    k << -0.5 * k0 + 0.2 * k0, 0.15 * k0, 0.0, 0.15 * k0, -0.5 * k0 - 0.2 * k0, 0.0, 0.0, 0.0, k0;
    Mat3 s = Mat3::Identity();
    s(1, 1) = -1.0;
    const SecularResult a = secular_frequencies(reference_quadrupole(k), kMg);
    const SecularResult b = secular_frequencies(reference_quadrupole(s * k * s), kMg);
    REQUIRE(a.tilt_deg.has_value());
    REQUIRE(b.tilt_deg.has_value());
    CHECK(std::abs(*a.tilt_deg) > 1.0);
    CHECK(*b.tilt_deg == doctest::Approx(-*a.tilt_deg).epsilon(1e-6));

    PlanarTrapModel m = oracle::five_wire();
    auto dc = m.dc_voltages();
    dc["n4"] = dc["n6"] = 2.3;
    dc["s4"] = dc["s6"] = 1.7;
    dc["n5"] = -0.8;
    dc["center"] = 0.3;
    const PlanarTrapModel biased = m.with_dc_voltages(dc);
    std::swap(dc["n4"], dc["s4"]);
    std::swap(dc["n6"], dc["s6"]);
    std::swap(dc["n5"], dc["s5"]);
    const PlanarTrapModel mirrored = m.with_dc_voltages(dc);
    const SecularResult pa = secular_frequencies(biased, kMg);
    const SecularResult pb = secular_frequencies(mirrored, kMg);
    REQUIRE(pa.tilt_deg.has_value());
    REQUIRE(pb.tilt_deg.has_value());
    CHECK(std::abs(*pa.tilt_deg) > 0.1);
    CHECK(*pb.tilt_deg == doctest::Approx(-*pa.tilt_deg).epsilon(1e-4));
    CHECK(pb.equilibrium.y() == doctest::Approx(-pa.equilibrium.y()).scale(1e-6).epsilon(1e-6));
}

TEST_CASE("static Hessian is traceless") {
    PlanarTrapModel m = oracle::five_wire();
    m = m.with_drive(RfDrive(m.drive().omega_rf, 0.0));
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> lat(-200e-6, 200e-6), height(20e-6, 200e-6);
    for (int i = 0; i < 30; ++i) {
        const Vec3 p(lat(rng), lat(rng), height(rng));
        const Mat3 h = total_energy_hessian(m, kMg, p);
        Eigen::SelfAdjointEigenSolver<Mat3> es(h);
        CHECK(std::abs(es.eigenvalues().sum()) <= 1e-6 * es.eigenvalues().cwiseAbs().maxCoeff());
    }
}

TEST_CASE("energy gradient matches finite differences of the energy") {
    const PlanarTrapModel m = oracle::five_wire();
    const Vec3 p(12e-6, -8e-6, 90e-6);
    const Vec3 g = total_energy_gradient(m, kMg, p);
    const double h = 1e-4 * p.z();
    for (int k = 0; k < 3; ++k) {
        const Vec3 e = Vec3::Unit(k);
        const double fd = (total_energy(m, kMg, p + h * e) - total_energy(m, kMg, p - h * e)) / (2 * h);
        CHECK(std::abs(fd - g[k]) <= 1e-6 * g.norm());
    }
}

TEST_CASE("pure rf depth scales with the square of the drive") {
    const PlanarTrapModel m = asymmetric_four_wire();
    const DepthOptions opt{.include_static = false};
    const DepthResult d1 = trap_depth(m, kMg, opt);
    const DepthResult d2 = trap_depth(m.with_drive(RfDrive(m.drive().omega_rf, 300.0)), kMg, opt);
    CHECK(d1.depth_j > 0.0);
    CHECK(d2.depth_j / d1.depth_j == doctest::Approx(9.0).epsilon(1e-6));
    CHECK(d1.depth_ev == doctest::Approx(d1.depth_j / constants::elementary_charge));
}

TEST_CASE("depth agrees with a grid minimum-energy-path search") {
    const PlanarTrapModel m = asymmetric_four_wire();
    const DepthOptions opt{.include_static = false};
    const DepthResult d = trap_depth(m, kMg, opt);
    const double box = opt.box_factor * d.minimum.z();
    const double c = fields::pseudopotential_coefficient(m.drive(), kMg);
    const double e0 = c * m.rf_basis(d.minimum).e_field.squaredNorm();
    const double escape = grid_escape_energy(m, d.minimum, box, 1e-3 * d.minimum.z(), 1200);
    MESSAGE("drag depth " << d.depth_ev << " eV, grid depth " << (escape - e0) / constants::elementary_charge);
    CHECK(oracle::rel_err(d.depth_j, escape - e0) < 0.05);
    CHECK(std::abs(d.minimum.y()) > 1e-6);
}

TEST_CASE("depth of the five-wire trap with static voltages") {
    const DepthResult d = trap_depth(oracle::five_wire(), kMg);
    CHECK(d.depth_ev > 0.0);
    CHECK(d.escape_point.z() > d.minimum.z());
}

TEST_CASE("mathieu parameters") {
    const auto mp = mathieu_params(50e-6, 50.0, 0.0, units::mhz_to_rad_s(100.0), kMg);
    CHECK(mp.a == 0.0);
    CHECK(mp.q == doctest::Approx(0.407).epsilon(0.002));
    const auto with_dc = mathieu_params(50e-6, 50.0, 5.0, units::mhz_to_rad_s(100.0), kMg);
    CHECK(with_dc.a == doctest::Approx(0.2 * mp.q));
    CHECK_THROWS_AS(mathieu_params(0.0, 50.0, 0.0, 1e8, kMg), ValidationError);
}

TEST_CASE("floquet analysis") {
    const Stability s02 = mathieu_stability({0.0, 0.2});
    CHECK(s02.stable);
    CHECK(s02.beta == doctest::Approx(std::sqrt(0.02)).epsilon(0.01));
    CHECK_FALSE(mathieu_stability({0.0, 1.0}).stable);
    const Stability zero = mathieu_stability({0.0, 0.0});
    CHECK(zero.stable);
    CHECK(zero.beta == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));

    // RK4 trace against an adaptive integrator
    for (double q : {0.1, 0.4, 0.7, 0.9, 1.2})
        for (double a : {-0.05, 0.0, 0.08})
            CHECK(mathieu_stability({a, q}).trace == doctest::Approx(floquet_trace_dopri(a, q)).epsilon(1e-8));

    // adiabatic approximation inside the lowest stability region
    for (double a : {-0.01, -0.005, 0.0, 0.005, 0.01})
        for (int i = 1; i <= 30; ++i) {
            const double q = 0.01 * i;
            if (a + 0.5 * q * q < 0.01) continue;
            const Stability st = mathieu_stability({a, q});
            REQUIRE(st.stable);
            CHECK(oracle::rel_err(st.beta, st.beta_approx) < 0.01);
        }

    const Stability edge = mathieu_stability({0.0, 0.88});
    CHECK(edge.stable);
    CHECK(oracle::rel_err(edge.beta, edge.beta_approx) > 0.1);
}

TEST_CASE("secular frequency from ion spacing") {
    const double w = units::mhz_to_rad_s(1.0);
    const double s3 = std::cbrt(1.25) * crystal::characteristic_length(kMg, w);
    CHECK(s3 == doctest::Approx(5.68e-6).epsilon(0.002));
    CHECK(oracle::rel_err(secular_from_spacing(s3, kMg), w) < 1e-12);
    CHECK(secular_from_spacing(6e-6, kMg) < secular_from_spacing(5e-6, kMg));
    CHECK_THROWS_AS(secular_from_spacing(0.0, kMg), ValidationError);
}
