#include "paultrap/fields.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

namespace paultrap::fields {

using constants::two_pi;

Rect::Rect(double x1_, double x2_, double y1_, double y2_) : x1(x1_), x2(x2_), y1(y1_), y2(y2_) {
    if (!(x1 < x2) || !(y1 < y2))
        throw ValidationError(fmt::format("degenerate rectangle [{}, {}] x [{}, {}]", x1, x2, y1, y2));
}

bool Rect::interiors_overlap(const Rect& o) const noexcept {
    return x1 < o.x2 && o.x1 < x2 && y1 < o.y2 && o.y1 < y2;
}

FieldSample& FieldSample::operator+=(const FieldSample& o) { return add_scaled(o, 1.0); }

FieldSample& FieldSample::add_scaled(const FieldSample& o, double k) {
    potential += k * o.potential;
    e_field += k * o.e_field;
    gradient += k * o.gradient;
    return *this;
}

FieldSample FieldSample::operator*(double k) const {
    FieldSample s;
    s.add_scaled(*this, k);
    return s;
}

namespace {

void require_above_plane(const Vec3& p) {
    if (!(p.z() > 0.0))
        throw DomainError(fmt::format("planar-electrode fields need z > 0, got z = {}", p.z()));
}

// Corner term F(u, v, z) = atan(u v / (z r)) with u, v the corner offsets from the
// field point. The plate potential is a signed sum of four corner terms over 2*pi.
struct CornerTerm {
    double f;
    double fu, fv, fz;
    double fuu, fuv, fuz, fvv, fvz, fzz;
};

CornerTerm corner_term(double u, double v, double z) {
    const double u2 = u * u, v2 = v * v, z2 = z * z;
    const double r2 = u2 + v2 + z2;
    const double r = std::sqrt(r2);
    const double r3 = r2 * r;
    const double uz = u2 + z2, vz = v2 + z2;

    CornerTerm t{};
    t.f = std::atan2(u * v, z * r);
    t.fu = v * z / (uz * r);
    t.fv = u * z / (vz * r);
    t.fz = -u * v * (r2 + z2) / (uz * vz * r);

    t.fuu = -u * v * z * (3 * u2 + 2 * v2 + 3 * z2) / (uz * uz * r3);
    t.fvv = -u * v * z * (2 * u2 + 3 * v2 + 3 * z2) / (vz * vz * r3);
    t.fuv = z / r3;
    t.fuz = v * (u2 * u2 + u2 * v2 - u2 * z2 - v2 * z2 - 2 * z2 * z2) / (uz * uz * r3);
    t.fvz = u * (v2 * v2 + u2 * v2 - v2 * z2 - u2 * z2 - 2 * z2 * z2) / (vz * vz * r3);
    const double u4 = u2 * u2, v4 = v2 * v2, z4 = z2 * z2;
    const double poly = 2 * u4 * u2 + 3 * u4 * v2 + 7 * u4 * z2 + 3 * u2 * v4 + 12 * u2 * v2 * z2 +
                        11 * u2 * z4 + 2 * v4 * v2 + 7 * v4 * z2 + 11 * v2 * z4 + 6 * z4 * z2;
    t.fzz = u * v * z * poly / (uz * uz * vz * vz * r3);
    return t;
}

}  // namespace

double rect_basis_potential(const Vec3& p, const Rect& rc) {
    require_above_plane(p);
    const double z = p.z();
    const double u1 = rc.x1 - p.x(), u2 = rc.x2 - p.x();
    const double v1 = rc.y1 - p.y(), v2 = rc.y2 - p.y();
    auto f = [z](double u, double v) { return std::atan2(u * v, z * std::sqrt(u * u + v * v + z * z)); };
    return (f(u2, v2) - f(u1, v2) - f(u2, v1) + f(u1, v1)) / two_pi;
}

FieldSample rect_basis_sample(const Vec3& p, const Rect& rc) {
    require_above_plane(p);
    const double z = p.z();
    const double us[2] = {rc.x1 - p.x(), rc.x2 - p.x()};
    const double vs[2] = {rc.y1 - p.y(), rc.y2 - p.y()};

    // Derivatives w.r.t. (u, v, z); d/dx = -d/du and d/dy = -d/dv.
    double f = 0, fu = 0, fv = 0, fz = 0;
    double fuu = 0, fuv = 0, fuz = 0, fvv = 0, fvz = 0, fzz = 0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double sign = (i == j) ? 1.0 : -1.0;
            const CornerTerm t = corner_term(us[i], vs[j], z);
            f += sign * t.f;
            fu += sign * t.fu;
            fv += sign * t.fv;
            fz += sign * t.fz;
            fuu += sign * t.fuu;
            fuv += sign * t.fuv;
            fuz += sign * t.fuz;
            fvv += sign * t.fvv;
            fvz += sign * t.fvz;
            fzz += sign * t.fzz;
        }
    }

    const double k = 1.0 / two_pi;
    FieldSample s;
    s.potential = k * f;
    // grad(phi) = (-fu, -fv, fz)/2pi ; E = -grad(phi)
    s.e_field = Vec3(fu, fv, -fz) * k;
    // Hessian of phi in (x, y, z)
    Mat3 h;
    h << fuu, fuv, -fuz,
         fuv, fvv, -fvz,
        -fuz, -fvz, fzz;
    s.gradient = -k * h;
    return s;
}

PlanarTrapModel::PlanarTrapModel(std::vector<PlanarElectrode> electrodes, RfDrive drive,
                                 std::map<std::string, double> dc_voltages)
    : electrodes_(std::move(electrodes)), drive_(drive), dc_voltages_(std::move(dc_voltages)) {
    std::set<std::string> labels;
    bool has_rf = false;
    for (const auto& e : electrodes_) {
        if (e.label.empty()) throw ValidationError("electrode label must be nonempty");
        if (!labels.insert(e.label).second) throw ValidationError("duplicate electrode label '" + e.label + "'");
        if (e.rects.empty()) throw ValidationError("electrode '" + e.label + "' has no rectangles");
        has_rf = has_rf || e.role == ElectrodeRole::RF;
    }
    if (!has_rf) throw ValidationError("trap model needs at least one RF electrode");

    for (std::size_t a = 0; a < electrodes_.size(); ++a)
        for (std::size_t b = a + 1; b < electrodes_.size(); ++b)
            for (const auto& ra : electrodes_[a].rects)
                for (const auto& rb : electrodes_[b].rects)
                    if (ra.interiors_overlap(rb))
                        throw ValidationError("electrodes '" + electrodes_[a].label + "' and '" +
                                              electrodes_[b].label + "' overlap");

    for (const auto& [label, volts] : dc_voltages_) {
        const auto& e = electrode(label);
        if (e.role != ElectrodeRole::DC)
            throw ValidationError("dc_voltages names RF electrode '" + label + "'");
        if (!std::isfinite(volts)) throw ValidationError("non-finite voltage on '" + label + "'");
    }
}

const PlanarElectrode& PlanarTrapModel::electrode(const std::string& label) const {
    auto it = std::find_if(electrodes_.begin(), electrodes_.end(),
                           [&](const PlanarElectrode& e) { return e.label == label; });
    if (it == electrodes_.end()) throw ValidationError("no electrode named '" + label + "'");
    return *it;
}

std::vector<std::string> PlanarTrapModel::dc_labels() const {
    std::vector<std::string> out;
    for (const auto& e : electrodes_)
        if (e.role == ElectrodeRole::DC) out.push_back(e.label);
    return out;
}

namespace {
FieldSample electrode_sample(const PlanarElectrode& e, const Vec3& p) {
    FieldSample s;
    for (const auto& r : e.rects) s += rect_basis_sample(p, r);
    return s;
}
}  // namespace

FieldSample PlanarTrapModel::electrode_basis(const std::string& label, const Vec3& p) const {
    require_above_plane(p);
    return electrode_sample(electrode(label), p);
}

FieldSample PlanarTrapModel::rf_basis(const Vec3& p) const {
    require_above_plane(p);
    FieldSample s;
    for (const auto& e : electrodes_)
        if (e.role == ElectrodeRole::RF) s += electrode_sample(e, p);
    return s;
}

FieldSample PlanarTrapModel::static_field(const Vec3& p) const {
    require_above_plane(p);
    FieldSample s;
    for (const auto& e : electrodes_) {
        if (e.role != ElectrodeRole::DC) continue;
        auto it = dc_voltages_.find(e.label);
        if (it == dc_voltages_.end() || it->second == 0.0) continue;
        s.add_scaled(electrode_sample(e, p), it->second);
    }
    return s;
}

PlanarTrapModel PlanarTrapModel::with_dc_voltages(std::map<std::string, double> dc) const {
    return PlanarTrapModel(electrodes_, drive_, std::move(dc));
}

PlanarTrapModel PlanarTrapModel::with_drive(RfDrive drive) const {
    return PlanarTrapModel(electrodes_, drive, dc_voltages_);
}

PlanarTrapModel PlanarTrapModel::translated(const Vec3& d) const {
    if (d.z() != 0.0) throw ValidationError("electrodes must stay in the z = 0 plane");
    auto moved = electrodes_;
    for (auto& e : moved)
        for (auto& r : e.rects) r = Rect(r.x1 + d.x(), r.x2 + d.x(), r.y1 + d.y(), r.y2 + d.y());
    return PlanarTrapModel(std::move(moved), drive_, dc_voltages_);
}

PlanarTrapModel PlanarTrapModel::mirrored_x() const {
    auto moved = electrodes_;
    for (auto& e : moved)
        for (auto& r : e.rects) r = Rect(-r.x2, -r.x1, r.y1, r.y2);
    return PlanarTrapModel(std::move(moved), drive_, dc_voltages_);
}

IdealQuadrupole::IdealQuadrupole(double r, RfDrive drive, Mat3 k, Vec3 e0)
    : r_(r), drive_(drive), k_(k), e0_(e0) {
    if (!(r > 0.0)) throw ValidationError("quadrupole R must be positive");
    if (!k_.isApprox(k_.transpose(), 1e-12)) throw ValidationError("static curvature must be symmetric");
    const double scale = k_.cwiseAbs().maxCoeff();
    if (std::abs(k_.trace()) > 1e-9 * std::max(scale, 1e-300))
        throw ValidationError("static curvature must be traceless (Laplace)");
}

IdealQuadrupole IdealQuadrupole::with_axial_well(const IonSpecies& sp, double omega_z) const {
    const double kappa = sp.mass() * omega_z * omega_z / sp.charge();
    Mat3 well = Vec3(-0.5 * kappa, -0.5 * kappa, kappa).asDiagonal();
    return IdealQuadrupole(r_, drive_, k_ + well, e0_);
}

FieldSample IdealQuadrupole::rf_basis(const Vec3& p) const {
    const double r2 = r_ * r_;
    FieldSample s;
    s.potential = quadrupole_potential(r_, 1.0, 0.0, p);
    s.e_field = Vec3(-p.x() / r2, p.y() / r2, 0.0);
    s.gradient = Vec3(-1.0 / r2, 1.0 / r2, 0.0).asDiagonal();
    return s;
}

FieldSample IdealQuadrupole::static_field(const Vec3& p) const {
    FieldSample s;
    s.potential = 0.5 * p.dot(k_ * p) - e0_.dot(p);
    s.e_field = e0_ - k_ * p;
    s.gradient = -k_;
    return s;
}

double quadrupole_potential(double r, double v0, double vdc, const Vec3& p) {
    if (!(r > 0.0)) throw ValidationError("quadrupole R must be positive");
    return 0.5 * (v0 + vdc) * (1.0 + (p.x() * p.x() - p.y() * p.y()) / (r * r));
}

FieldSample sample_static(const TrapField& trap, const Vec3& p) { return trap.static_field(p); }
FieldSample sample_rf_basis(const TrapField& trap, const Vec3& p) { return trap.rf_basis(p); }

double pseudopotential_coefficient(const RfDrive& drive, const IonSpecies& sp) {
    const double q = sp.charge();
    return q * q * drive.v_rf * drive.v_rf / (4.0 * sp.mass() * drive.omega_rf * drive.omega_rf);
}

double pseudopotential(const TrapField& trap, const IonSpecies& sp, const Vec3& p) {
    return pseudopotential_coefficient(trap.drive(), sp) * trap.rf_basis(p).e_field.squaredNorm();
}

double pseudopotential_ev(const TrapField& trap, const IonSpecies& sp, const Vec3& p) {
    return pseudopotential(trap, sp, p) / constants::elementary_charge;
}

unsigned default_thread_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PAULTRAP_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

std::vector<FieldMapRow> field_map(const TrapField& trap, const IonSpecies& sp, const GridSpec& grid,
                                   unsigned threads) {
    const auto [nx, ny, nz] = grid.count;
    const std::size_t total = nx * ny * nz;
    if (total == 0) throw ValidationError("field map grid is empty");
    for (std::size_t k = 0; k < nz; ++k) {
        const Vec3 corner = grid.origin + Vec3(0, 0, grid.step.z() * static_cast<double>(k));
        if (!trap.in_domain(corner)) throw DomainError("field map grid extends outside the model domain (z <= 0)");
    }

    std::vector<FieldMapRow> rows(total);
    const double c = pseudopotential_coefficient(trap.drive(), sp) / constants::elementary_charge;
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            const std::size_t i = idx % nx, j = (idx / nx) % ny, k = idx / (nx * ny);
            const Vec3 p = grid.origin + Vec3(grid.step.x() * static_cast<double>(i),
                                              grid.step.y() * static_cast<double>(j),
                                              grid.step.z() * static_cast<double>(k));
            rows[idx] = FieldMapRow{p, trap.static_field(p), c * trap.rf_basis(p).e_field.squaredNorm()};
        }
    };

    const unsigned n = std::max(1u, std::min<unsigned>(threads ? threads : default_thread_count(),
                                                        static_cast<unsigned>(total)));
    if (n == 1) {
        work(0, total);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (total + n - 1) / n;
        for (unsigned t = 0; t < n; ++t) {
            const std::size_t b = t * chunk, e = std::min(total, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
    }
    return rows;
}

std::string field_map_csv(const std::vector<FieldMapRow>& rows) {
    std::string out = "x,y,z,phi_dc,ex,ey,ez,phi_pp_ev\n";
    for (const auto& r : rows) {
        out += fmt::format("{:.9g},{:.9g},{:.9g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g}\n",
                           units::m_to_um(r.point.x()), units::m_to_um(r.point.y()),
                           units::m_to_um(r.point.z()), r.dc.potential, r.dc.e_field.x(),
                           r.dc.e_field.y(), r.dc.e_field.z(), r.phi_pp_ev);
    }
    return out;
}

}  // namespace paultrap::fields
