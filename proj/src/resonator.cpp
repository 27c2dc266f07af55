#include "paultrap/resonator.hpp"

#include <cmath>

namespace paultrap::resonator {

RlcModel rlc_from_measurement(double omega0, double q, double l) {
    if (!(omega0 > 0.0)) throw ValidationError("resonance frequency must be positive");
    if (!(q > 0.0)) throw ValidationError("Q must be positive");
    if (!(l > 0.0)) throw ValidationError("inductance must be positive");
    const double c = 1.0 / (omega0 * omega0 * l);
    return {l, c, q / (c * omega0), omega0, q};
}

ChipLoss chip_loss(const RlcModel& m, double q_after, double v_rf) {
    if (!(q_after > 0.0)) throw ValidationError("loaded Q must be positive");
    if (!(q_after < m.q)) throw ValidationError("Q after attaching the chip must be below the bare Q");
    if (!(v_rf >= 0.0)) throw ValidationError("RF amplitude must be non-negative");
    const double rp = q_after / (m.c * m.omega0);
    const double rt = m.r_parallel * rp / (m.r_parallel - rp);
    return {rp, rt, 0.5 * v_rf * v_rf / rt};
}

double loaded_q(double q0, double kappa) {
    if (!(q0 > 0.0)) throw ValidationError("Q must be positive");
    if (!(kappa >= 0.0)) throw ValidationError("coupling must be non-negative");
    if (std::isinf(kappa)) return 0.0;
    return q0 / (1.0 + kappa);
}

double coupling_from_q(double q0, double q_loaded) {
    if (!(q0 > 0.0) || !(q_loaded > 0.0)) throw ValidationError("Q must be positive");
    if (q_loaded > q0) throw ValidationError("loaded Q cannot exceed unloaded Q");
    return q0 / q_loaded - 1.0;
}

double q_from_linewidth(double omega0, double delta_omega_fwhm) {
    if (!(omega0 > 0.0)) throw ValidationError("resonance frequency must be positive");
    if (!(delta_omega_fwhm > 0.0)) throw ValidationError("linewidth must be positive");
    return omega0 / delta_omega_fwhm;
}

double lead_inductance(double length, double radius, double separation) {
    if (!(length > 0.0) || !(radius > 0.0) || !(separation > 0.0))
        throw ValidationError("lead dimensions must be positive");
    return constants::mu0 * length * (std::log(2.0 * separation / radius) + 0.25);
}

}  // namespace paultrap::resonator
