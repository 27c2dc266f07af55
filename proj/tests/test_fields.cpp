#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "paultrap/fields.hpp"

using namespace paultrap;
using namespace paultrap::fields;

namespace {

PlanarTrapModel two_plates(double va, double vb) {
    std::vector<PlanarElectrode> es = {
        {"rf", ElectrodeRole::RF, {Rect(-1e-3, 1e-3, 40e-6, 120e-6)}},
        {"a", ElectrodeRole::DC, {Rect(-200e-6, -20e-6, -100e-6, 20e-6)}},
        {"b", ElectrodeRole::DC, {Rect(10e-6, 150e-6, -60e-6, 30e-6), Rect(150e-6, 300e-6, -60e-6, 0.0)}},
    };
    return PlanarTrapModel(es, RfDrive(2e8 * M_PI, 100.0), {{"a", va}, {"b", vb}});
}

void check_sample_close(const FieldSample& got, const FieldSample& want, double tol) {
    const double scale_p = std::max(std::abs(want.potential), 1e-30);
    CHECK(std::abs(got.potential - want.potential) <= tol * scale_p);
    CHECK((got.e_field - want.e_field).norm() <= tol * std::max(want.e_field.norm(), 1e-30));
    CHECK((got.gradient - want.gradient).norm() <= tol * std::max(want.gradient.norm(), 1e-30));
}

}  // namespace

TEST_CASE("plate potential matches flux quadrature") {
    const Rect r(-30e-6, 50e-6, -20e-6, 70e-6);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lat(-120e-6, 120e-6), height(5e-6, 150e-6);
    for (int i = 0; i < 40; ++i) {
        const Vec3 p(lat(rng), lat(rng), height(rng));
        const double want = oracle::rect_potential_quadrature(p, r);
        CHECK(oracle::rel_err(rect_basis_potential(p, r), want) < 1e-9);
    }
}

TEST_CASE("square plate at height equal to its side") {
    const double want = oracle::rect_potential_quadrature(Vec3(0, 0, 1.0), Rect(-0.5, 0.5, -0.5, 0.5));
    CHECK(rect_basis_potential(Vec3(0, 0, 1.0), Rect(-0.5, 0.5, -0.5, 0.5)) == doctest::Approx(want).epsilon(1e-10));
    CHECK(want == doctest::Approx(0.128188).epsilon(1e-5));
}

TEST_CASE("plate field and gradient are derivatives of the potential") {
    const Rect r(-30e-6, 50e-6, -20e-6, 70e-6);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lat(-100e-6, 100e-6), height(10e-6, 120e-6);
    for (int i = 0; i < 50; ++i) {
        const Vec3 p(lat(rng), lat(rng), height(rng));
        const FieldSample s = rect_basis_sample(p, r);
        const double h = 1e-3 * p.z();
        for (int k = 0; k < 3; ++k) {
            const Vec3 e = Vec3::Unit(k);
            auto d1 = [&](double step) {
                return (rect_basis_potential(p + step * e, r) - rect_basis_potential(p - step * e, r)) / (2 * step);
            };
            const double grad = (4 * d1(h / 2) - d1(h)) / 3;
            CHECK(std::abs(-grad - s.e_field[k]) <= 1e-6 * s.e_field.norm());
            auto fk = [&](double step) -> Vec3 {
                return (rect_basis_sample(p + step * e, r).e_field - rect_basis_sample(p - step * e, r).e_field) /
                       (2 * step);
            };
            const Vec3 col = (4 * fk(h / 2) - fk(h)) / 3;
            CHECK((col - s.gradient.col(k)).norm() <= 1e-6 * s.gradient.norm());
        }
    }
}

TEST_CASE("harmonicity on random points") {
    const PlanarTrapModel m = oracle::five_wire();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> lat(-400e-6, 400e-6), height(5e-6, 300e-6);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p(lat(rng), lat(rng), height(rng));
        const FieldSample s = m.static_field(p);
        CHECK(std::abs(s.gradient.trace()) <= 1e-6 * s.gradient.norm());
        const FieldSample rf = m.rf_basis(p);
        CHECK(std::abs(rf.gradient.trace()) <= 1e-6 * rf.gradient.norm());
        if (i % 10 == 0) {
            const double h = 0.01 * p.z();
            auto phi = [&](const Vec3& q) { return m.static_field(q).potential; };
            double lap = 0.0;
            for (int k = 0; k < 3; ++k) lap += oracle::second_derivative(phi, p, Vec3::Unit(k), h);
            CHECK(std::abs(lap) <= 1e-6 * std::abs(s.potential) / (h * h));
        }
    }
}

TEST_CASE("superposition of electrodes") {
    const PlanarTrapModel both = two_plates(1.7, -0.6);
    const PlanarTrapModel only_a = two_plates(1.7, 0.0);
    const PlanarTrapModel only_b = two_plates(0.0, -0.6);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> lat(-200e-6, 200e-6), height(5e-6, 200e-6);
    for (int i = 0; i < 100; ++i) {
        const Vec3 p(lat(rng), lat(rng), height(rng));
        FieldSample sum = only_a.static_field(p);
        sum += only_b.static_field(p);
        check_sample_close(both.static_field(p), sum, 1e-12);
        FieldSample lin = both.electrode_basis("a", p) * 1.7;
        lin.add_scaled(both.electrode_basis("b", p), -0.6);
        check_sample_close(both.static_field(p), lin, 1e-12);
    }
}

TEST_CASE("boundary recovery above an electrode interior") {
    const Rect r(0.0, 80e-6, 0.0, 50e-6);
    const double z = 1e-6 * r.height();
    CHECK(std::abs(rect_basis_potential(Vec3(40e-6, 25e-6, z), r) - 1.0) < 1e-3);
    CHECK(std::abs(rect_basis_potential(Vec3(10e-6, 5e-6, z), r) - 1.0) < 1e-3);
    CHECK(rect_basis_potential(Vec3(200e-6, 25e-6, z), r) < 1e-3);
    CHECK(rect_basis_potential(Vec3(0, 0, 1.0), r) < 1e-6);
}

TEST_CASE("domain and validation errors") {
    const Rect r(0.0, 1.0, 0.0, 1.0);
    CHECK_THROWS_AS(rect_basis_potential(Vec3(0.5, 0.5, 0.0), r), DomainError);
    CHECK_THROWS_AS(rect_basis_sample(Vec3(0.5, 0.5, -1.0), r), DomainError);
    CHECK_THROWS_AS(Rect(1.0, 1.0, 0.0, 1.0), ValidationError);
    const PlanarTrapModel m = oracle::five_wire();
    CHECK_THROWS_AS(m.static_field(Vec3(0, 0, 0)), DomainError);
    CHECK_THROWS_AS(m.electrode("nope"), ValidationError);
    CHECK_THROWS_AS(PlanarTrapModel({{"d", ElectrodeRole::DC, {r}}}, RfDrive(1e8, 1.0)), ValidationError);
    CHECK_THROWS_AS(PlanarTrapModel({{"rf", ElectrodeRole::RF, {r}}, {"d", ElectrodeRole::DC, {Rect(0.5, 2, 0, 1)}}},
                                    RfDrive(1e8, 1.0)),
                    ValidationError);
    CHECK_THROWS_AS(m.translated(Vec3(0, 0, 1e-6)), ValidationError);
}

TEST_CASE("zero voltages give zero fields") {
    PlanarTrapModel m = oracle::five_wire();
    std::map<std::string, double> zero;
    for (const auto& l : m.dc_labels()) zero[l] = 0.0;
    m = m.with_dc_voltages(zero).with_drive(RfDrive(m.drive().omega_rf, 0.0));
    const Vec3 p(13e-6, -7e-6, 60e-6);
    const FieldSample s = sample_static(m, p);
    CHECK(s.potential == 0.0);
    CHECK(s.e_field.norm() == 0.0);
    CHECK(pseudopotential(m, species_by_label("24Mg+"), p) == 0.0);
    const GridSpec g{Vec3(-10e-6, -10e-6, 50e-6), Vec3(10e-6, 10e-6, 10e-6), {3, 3, 3}};
    for (const auto& row : field_map(m, species_by_label("24Mg+"), g, 2)) {
        CHECK(row.dc.potential == 0.0);
        CHECK(row.phi_pp_ev == 0.0);
    }
}

TEST_CASE("translation and mirror covariance") {
    const PlanarTrapModel m = oracle::five_wire();
    const Vec3 d(37e-6, -11e-6, 0.0);
    const PlanarTrapModel t = m.translated(d);
    const PlanarTrapModel mx = m.mirrored_x();
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> lat(-300e-6, 300e-6), height(10e-6, 200e-6);
    for (int i = 0; i < 50; ++i) {
        const Vec3 p(lat(rng), lat(rng), height(rng));
        CHECK(t.static_field(p + d).potential == doctest::Approx(m.static_field(p).potential).epsilon(1e-10));
        const Vec3 q(-p.x(), p.y(), p.z());
        const FieldSample a = m.static_field(p), b = mx.static_field(q);
        CHECK(b.potential == doctest::Approx(a.potential).epsilon(1e-10));
        CHECK(b.e_field.x() == doctest::Approx(-a.e_field.x()).epsilon(1e-9).scale(a.e_field.norm()));
        CHECK(b.e_field.z() == doctest::Approx(a.e_field.z()).epsilon(1e-9).scale(a.e_field.norm()));
    }
}

TEST_CASE("ideal quadrupole potential and pseudopotential") {
    const double r0 = 50e-6;
    CHECK(quadrupole_potential(r0, 10.0, 2.0, Vec3::Zero()) == doctest::Approx(6.0));
    CHECK(quadrupole_potential(r0, 10.0, 0.0, Vec3(r0, 0, 0)) == doctest::Approx(10.0));
    CHECK(quadrupole_potential(r0, 10.0, 0.0, Vec3(0, r0, 0)) == doctest::Approx(0.0).scale(1.0));

    const IonSpecies mg = species_by_label("24Mg+");
    const RfDrive drive(units::mhz_to_rad_s(100.0), 50.0);
    const IdealQuadrupole q(r0, drive);
    const double omega_r =
        mg.charge() * drive.v_rf / (std::sqrt(2.0) * mg.mass() * drive.omega_rf * r0 * r0);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-0.05 * r0, 0.05 * r0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 p(u(rng), u(rng), u(rng) * 20);
        const double want = 0.5 * mg.mass() * omega_r * omega_r * (p.x() * p.x() + p.y() * p.y());
        CHECK(oracle::rel_err(pseudopotential(q, mg, p), want) < 1e-9);
    }
    CHECK(pseudopotential(q, mg, Vec3(0, 0, 1e-3)) == 0.0);
    CHECK(pseudopotential_ev(q, mg, Vec3(1e-6, 0, 0)) ==
          doctest::Approx(pseudopotential(q, mg, Vec3(1e-6, 0, 0)) / constants::elementary_charge));
}

TEST_CASE("field map rows match point samples") {
    const PlanarTrapModel m = oracle::five_wire();
    const IonSpecies mg = species_by_label("24Mg+");
    const Vec3 p(3e-6, 4e-6, 80e-6);
    const auto one = field_map(m, mg, {p, Vec3(1e-6, 1e-6, 1e-6), {1, 1, 1}});
    REQUIRE(one.size() == 1);
    CHECK(one[0].dc.potential == doctest::Approx(sample_static(m, p).potential).epsilon(1e-14));
    CHECK(one[0].phi_pp_ev == doctest::Approx(pseudopotential_ev(m, mg, p)).epsilon(1e-14));

    const double h = 2e-6;
    const GridSpec g{Vec3(-5e-6, -5e-6, 70e-6), Vec3(h, h, h), {6, 6, 6}};
    const auto rows = field_map(m, mg, g, 3);
    REQUIRE(rows.size() == 216);
    CHECK((rows[1].point - rows[0].point - Vec3(h, 0, 0)).norm() < 1e-15);
    auto at = [&](std::size_t i, std::size_t j, std::size_t k) { return rows[i + 6 * (j + 6 * k)].dc.potential; };
    for (std::size_t i = 1; i < 5; ++i)
        for (std::size_t j = 1; j < 5; ++j)
            for (std::size_t k = 1; k < 5; ++k) {
                const double lap = at(i + 1, j, k) + at(i - 1, j, k) + at(i, j + 1, k) + at(i, j - 1, k) +
                                   at(i, j, k + 1) + at(i, j, k - 1) - 6 * at(i, j, k);
                CHECK(std::abs(lap / (h * h)) <= 1e-6 * std::abs(at(i, j, k)) / (h * h));
            }

    const auto serial = field_map(m, mg, g, 1);
    CHECK(field_map_csv(serial) == field_map_csv(rows));
    CHECK(field_map_csv(one).rfind("x,y,z,phi_dc,ex,ey,ez,phi_pp_ev\n", 0) == 0);
    CHECK_THROWS_AS(field_map(m, mg, {p, Vec3(1e-6, 1e-6, 1e-6), {0, 1, 1}}), ValidationError);
    CHECK_THROWS_AS(field_map(m, mg, {Vec3(0, 0, -1e-6), Vec3(1e-6, 1e-6, 1e-6), {1, 1, 2}}), DomainError);
}
