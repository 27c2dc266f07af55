#pragma once

#include <optional>

#include "paultrap/fields.hpp"

namespace paultrap::analysis {

struct NullOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-12;  // relative to the local length scale
    bool fix_axial = false;         // search only the plane transverse to the trap axis
};

struct NullResult {
    Vec3 point;
    double residual_field;  // |E_rf| at the null, V/m per volt of RF amplitude
    int iterations;
};

/// Locates the point of minimal RF field magnitude near `guess` (damped Gauss-Newton on
/// |E_rf|^2 with a coordinate-descent fallback). Nonzero residual flags intrinsic micromotion.
NullResult find_rf_null(const fields::TrapField& trap, const Vec3& guess, const NullOptions& opt = {});

/// Starting point for the null search: the origin when it lies in the domain, otherwise the
/// point of smallest |E_rf| on a vertical scan above the centre of the RF electrodes.
Vec3 default_null_guess(const fields::TrapField& trap);

/// Total potential energy q*phi_dc + U_pp (J) and its derivatives.
double total_energy(const fields::TrapField& trap, const IonSpecies& sp, const Vec3& p);
Vec3 total_energy_gradient(const fields::TrapField& trap, const IonSpecies& sp, const Vec3& p);
/// Central differences of the analytic gradient, Richardson-extrapolated, h = 1e-6 x length scale.
Mat3 total_energy_hessian(const fields::TrapField& trap, const IonSpecies& sp, const Vec3& p);

/// Newton iteration for grad(U) = 0 starting at `start`.
Vec3 find_equilibrium(const fields::TrapField& trap, const IonSpecies& sp, const Vec3& start,
                      int max_iterations = 200);

struct SecularOptions {
    std::optional<Vec3> guess;     // defaults to the origin for the ideal quadrupole
    bool allow_free_axis = false;  // report a zero-curvature direction as omega = 0
};

struct SecularResult {
    Vec3 null_point;       // RF null
    Vec3 equilibrium;      // minimum of the total potential
    double residual_field; // |E_rf| at the null per RF volt
    std::array<double, 3> omegas;  // rad/s, ascending
    std::array<Vec3, 3> axes;      // unit eigenvectors matching omegas
    std::optional<double> tilt_deg;  // empty when radial modes are degenerate
    int axial_index;                 // which of omegas is the axial mode
};

SecularResult secular_frequencies(const fields::TrapField& trap, const IonSpecies& sp,
                                  const SecularOptions& opt = {});

struct DepthOptions {
    double box_factor = 10.0;  // search box half-width in units of ion height (or R)
    int path_steps = 400;
    int directions = 8;
    bool include_static = true;
};

struct DepthResult {
    double depth_j;
    double depth_ev;
    Vec3 minimum;
    Vec3 escape_point;
};

/// Energy barrier from the trap minimum to the lowest saddle in the radial plane.
/// The escape route is followed by dragging along a set of directions (starting with the
/// weakest-confinement axis) while relaxing perpendicular to it; the highest point on the
/// lowest route is polished by Newton iteration on the in-plane gradient.
DepthResult trap_depth(const fields::TrapField& trap, const IonSpecies& sp, const DepthOptions& opt = {});

struct MathieuParams {
    double a;
    double q;
};

MathieuParams mathieu_params(double r, double v0, double vdc, double omega_rf, const IonSpecies& sp);

struct Stability {
    bool stable;
    double beta;         // Floquet characteristic exponent, NaN when unstable
    double beta_approx;  // sqrt(a + q^2/2), NaN when the radicand is negative
    double trace;        // trace of the one-period monodromy matrix
};

/// One-period Floquet analysis of x'' + (a - 2q cos 2t) x = 0 with fixed-step RK4.
Stability mathieu_stability(const MathieuParams& params, int steps_per_period = 2000);

/// Axial frequency that gives adjacent spacing `spacing_3ion` in a three-ion crystal.
double secular_from_spacing(double spacing_3ion, const IonSpecies& sp);

}  // namespace paultrap::analysis
