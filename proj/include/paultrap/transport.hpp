#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paultrap/fields.hpp"

namespace paultrap::transport {

/// Channel name -> electrodes driven together. Empty map: one channel per DC electrode.
using ChannelMap = std::map<std::string, std::vector<std::string>>;

struct WaveformSpec {
    std::vector<double> path;  // axial target positions, m
    double target_omega_z;     // rad/s
    double v_min = -std::numeric_limits<double>::infinity();
    double v_max = std::numeric_limits<double>::infinity();
    double regularization = 1e-6;  // Tikhonov shift relative to the largest singular value
    ChannelMap channels;
    std::optional<Vec3> null_guess;  // transverse starting point for the RF-null search
};

/// Evenly spaced path from `start` to `stop` (inclusive) with the given step.
std::vector<double> make_path(double start, double stop, double step = 10e-6);

/// Desired static quantities at a point: field (V/m) and axial curvature q d2phi/dx2 (J/m^2).
struct StepTargets {
    Vec3 field = Vec3::Zero();
    double curvature = 0.0;
};

struct StepSolution {
    std::map<std::string, double> channel_volts;
    Vec3 field;              // achieved static field at the point, V/m
    double curvature;        // achieved q d2phi/dx2, J/m^2
    double scaled_residual;  // weighted constraint residual norm
};

struct StepOptions {
    double v_min = -std::numeric_limits<double>::infinity();
    double v_max = std::numeric_limits<double>::infinity();
    double regularization = 1e-6;
    double length_scale = 0.0;  // weights field rows by q/(m omega^2 L); 0 uses the point height
    double omega_ref = 0.0;     // curvature reference m omega_ref^2; required
};

/// Bound-constrained Tikhonov least squares for one point. Rows: three field components and the
/// axial curvature, each scaled to a dimensionless displacement or relative curvature.
StepSolution solve_step(const fields::PlanarTrapModel& model, const IonSpecies& species, const Vec3& point,
                        const StepTargets& targets, const ChannelMap& channels, const StepOptions& opt);

struct WaveformStep {
    double position;  // m
    Vec3 target;      // RF null at this axial position
    std::map<std::string, double> channel_volts;
    double field_residual;  // |E_static| at the target, V/m
    double axial_field;     // E_x at the target, V/m
    double omega_z;         // predicted from the local curvature, rad/s
};

struct Waveform {
    std::vector<std::string> channels;
    std::vector<WaveformStep> steps;
};

/// Per-step solve: zero static field at the transverse RF null and the target axial curvature.
Waveform solve_waveform(const fields::PlanarTrapModel& model, const IonSpecies& species, const WaveformSpec& spec);

/// Electrode voltage map for a step, expanding channels.
std::map<std::string, double> electrode_voltages(const ChannelMap& channels, const std::map<std::string, double>& v);

ChannelMap resolve_channels(const fields::PlanarTrapModel& model, const ChannelMap& channels);

struct ContinuityReport {
    bool pass;
    std::vector<std::size_t> offending_steps;  // index k where step k-1 -> k jumps too far
};

ContinuityReport waveform_continuity_check(const Waveform& w, double max_step_v);

/// Axial secular frequency at each step recomputed from the full trap model.
std::vector<double> closed_loop_omegas(const fields::PlanarTrapModel& model, const IonSpecies& species,
                                       const Waveform& w, const WaveformSpec& spec);

}  // namespace paultrap::transport
