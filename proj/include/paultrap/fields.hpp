#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "paultrap/core.hpp"

namespace paultrap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace fields {

/// Axis-aligned rectangle [x1,x2] x [y1,y2] in the z = 0 electrode plane (m).
struct Rect {
    double x1, x2, y1, y2;

    Rect(double x1, double x2, double y1, double y2);

    double width() const noexcept { return x2 - x1; }
    double height() const noexcept { return y2 - y1; }
    bool interiors_overlap(const Rect& other) const noexcept;
};

enum class ElectrodeRole { RF, DC };

struct PlanarElectrode {
    std::string label;
    ElectrodeRole role;
    std::vector<Rect> rects;
};

/// Potential (V), field E = -grad(phi) (V/m), and field gradient dE_i/dx_j (V/m^2).
struct FieldSample {
    double potential = 0.0;
    Vec3 e_field = Vec3::Zero();
    Mat3 gradient = Mat3::Zero();

    FieldSample& operator+=(const FieldSample& o);
    FieldSample& add_scaled(const FieldSample& o, double k);
    FieldSample operator*(double k) const;
};

/// Potential of a unit-volt rectangular plate in an infinite grounded plane, i.e.
/// the solid angle subtended by the plate divided by 2*pi. Requires z > 0.
double rect_basis_potential(const Vec3& point, const Rect& rect);

/// Potential, field and field gradient of a unit-volt plate, all in closed form.
FieldSample rect_basis_sample(const Vec3& point, const Rect& rect);

/// Anything that can report an RF basis field (per volt of RF amplitude) and a
/// static field. Secular analysis, null search and transport work against this.
class TrapField {
public:
    virtual ~TrapField() = default;

    virtual FieldSample rf_basis(const Vec3& point) const = 0;
    virtual FieldSample static_field(const Vec3& point) const = 0;
    virtual const RfDrive& drive() const = 0;
    /// Index of the trap axis (0 = x, 2 = z).
    virtual int axial_axis() const = 0;
    /// Natural length near a point, used to size finite-difference steps and searches.
    virtual double length_scale(const Vec3& point) const = 0;
    /// True if the point lies where the model is defined.
    virtual bool in_domain(const Vec3& point) const = 0;
};

/// Coplanar rectangular electrodes in a grounded plane (gapless-plate model).
/// The trap axis is x, the electrode plane is z = 0 and ions sit at z > 0.
class PlanarTrapModel final : public TrapField {
public:
    PlanarTrapModel(std::vector<PlanarElectrode> electrodes, RfDrive drive,
                    std::map<std::string, double> dc_voltages = {});

    const std::vector<PlanarElectrode>& electrodes() const noexcept { return electrodes_; }
    const std::map<std::string, double>& dc_voltages() const noexcept { return dc_voltages_; }
    const RfDrive& drive() const override { return drive_; }
    int axial_axis() const override { return 0; }
    double length_scale(const Vec3& point) const override { return point.z(); }
    bool in_domain(const Vec3& point) const override { return point.z() > 0.0; }

    FieldSample rf_basis(const Vec3& point) const override;
    FieldSample static_field(const Vec3& point) const override;

    /// Field of a single electrode held at 1 V with everything else grounded.
    FieldSample electrode_basis(const std::string& label, const Vec3& point) const;
    const PlanarElectrode& electrode(const std::string& label) const;
    std::vector<std::string> dc_labels() const;

    PlanarTrapModel with_dc_voltages(std::map<std::string, double> dc) const;
    PlanarTrapModel with_drive(RfDrive drive) const;
    PlanarTrapModel translated(const Vec3& delta) const;  // delta.z() must be 0
    PlanarTrapModel mirrored_x() const;                   // x -> -x

private:
    std::vector<PlanarElectrode> electrodes_;
    RfDrive drive_;
    std::map<std::string, double> dc_voltages_;
};

/// Ideal linear quadrupole: RF potential 1/2 V (1 + (x^2 - y^2)/R^2), trap axis z,
/// plus an optional static potential 1/2 x^T K x - e0 . x (K traceless).
class IdealQuadrupole final : public TrapField {
public:
    IdealQuadrupole(double r, RfDrive drive, Mat3 static_curvature = Mat3::Zero(),
                    Vec3 static_field = Vec3::Zero());

    /// Adds a cylindrically symmetric static axial well q*phi'' = m omega_z^2.
    IdealQuadrupole with_axial_well(const IonSpecies& species, double omega_z) const;

    double r() const noexcept { return r_; }
    const Mat3& static_curvature() const noexcept { return k_; }

    FieldSample rf_basis(const Vec3& point) const override;
    FieldSample static_field(const Vec3& point) const override;
    const RfDrive& drive() const override { return drive_; }
    int axial_axis() const override { return 2; }
    double length_scale(const Vec3&) const override { return r_; }
    bool in_domain(const Vec3&) const override { return true; }

private:
    double r_;
    RfDrive drive_;
    Mat3 k_;
    Vec3 e0_;
};

/// Instantaneous potential 1/2 (v0 + vdc)(1 + (x^2 - y^2)/R^2) of the ideal quadrupole.
double quadrupole_potential(double r, double v0, double vdc, const Vec3& point);

FieldSample sample_static(const TrapField& trap, const Vec3& point);
FieldSample sample_rf_basis(const TrapField& trap, const Vec3& point);

/// Pseudopotential energy q^2 |E_rf|^2 / (4 m Omega^2) in joules, |E_rf| at full drive amplitude.
double pseudopotential(const TrapField& trap, const IonSpecies& species, const Vec3& point);
/// Same, expressed in eV.
double pseudopotential_ev(const TrapField& trap, const IonSpecies& species, const Vec3& point);

/// Coefficient c such that U_pp = c |E_rf,1V|^2.
double pseudopotential_coefficient(const RfDrive& drive, const IonSpecies& species);

struct GridSpec {
    Vec3 origin;                       // m
    Vec3 step;                         // m
    std::array<std::size_t, 3> count;  // nodes along x, y, z
};

struct FieldMapRow {
    Vec3 point;
    FieldSample dc;
    double phi_pp_ev;
};

/// Row-major lattice (x fastest) of static samples plus pseudopotential.
/// `threads` = 0 uses the PAULTRAP_THREADS cap (or hardware concurrency).
std::vector<FieldMapRow> field_map(const TrapField& trap, const IonSpecies& species,
                                   const GridSpec& grid, unsigned threads = 0);

/// CSV with header x,y,z,phi_dc,ex,ey,ez,phi_pp_ev. Coordinates in um, phi_dc in V,
/// fields in V/m, pseudopotential in eV.
std::string field_map_csv(const std::vector<FieldMapRow>& rows);

/// Worker count honoring PAULTRAP_THREADS.
unsigned default_thread_count();

}  // namespace fields
}  // namespace paultrap
