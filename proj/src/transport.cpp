#include "paultrap/transport.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <cmath>
#include <set>

#include "paultrap/analysis.hpp"

namespace paultrap::transport {

using fields::PlanarTrapModel;

std::vector<double> make_path(double start, double stop, double step) {
    if (!(step > 0.0)) throw ValidationError("path step must be positive");
    const double span = stop - start;
    const auto n = static_cast<long>(std::floor(std::abs(span) / step + 1e-9));
    std::vector<double> path;
    const double dir = span >= 0.0 ? 1.0 : -1.0;
    for (long i = 0; i <= n; ++i) path.push_back(start + dir * step * static_cast<double>(i));
    if (std::abs(path.back() - stop) > 1e-9 * step) path.push_back(stop);
    return path;
}

ChannelMap resolve_channels(const PlanarTrapModel& model, const ChannelMap& channels) {
    if (channels.empty()) {
        ChannelMap out;
        for (const auto& label : model.dc_labels()) out[label] = {label};
        if (out.empty()) throw ValidationError("model has no DC electrodes to drive");
        return out;
    }
    std::set<std::string> used;
    for (const auto& [name, labels] : channels) {
        if (labels.empty()) throw ValidationError(fmt::format("channel '{}' drives no electrodes", name));
        for (const auto& label : labels) {
            const auto& e = model.electrode(label);
            if (e.role != fields::ElectrodeRole::DC)
                throw ValidationError(fmt::format("channel '{}' references RF electrode '{}'", name, label));
            if (!used.insert(label).second)
                throw ValidationError(fmt::format("electrode '{}' is assigned to more than one channel", label));
        }
    }
    return channels;
}

std::map<std::string, double> electrode_voltages(const ChannelMap& channels, const std::map<std::string, double>& v) {
    std::map<std::string, double> out;
    for (const auto& [name, labels] : channels) {
        const auto it = v.find(name);
        if (it == v.end()) throw ValidationError(fmt::format("no voltage for channel '{}'", name));
        for (const auto& label : labels) out[label] = it->second;
    }
    return out;
}

namespace {

// min ||M v - r|| subject to lo <= v <= hi, by an active-set method.
Eigen::VectorXd bounded_least_squares(const Eigen::MatrixXd& m, const Eigen::VectorXd& r, double lo, double hi) {
    const auto n = m.cols();
    auto solve_free = [&](const std::vector<Eigen::Index>& free, const Eigen::VectorXd& v) {
        Eigen::VectorXd rhs = r - m * v;
        Eigen::MatrixXd mf(m.rows(), static_cast<Eigen::Index>(free.size()));
        for (std::size_t k = 0; k < free.size(); ++k) {
            mf.col(static_cast<Eigen::Index>(k)) = m.col(free[k]);
            rhs += m.col(free[k]) * v[free[k]];
        }
        return Eigen::VectorXd(mf.completeOrthogonalDecomposition().solve(rhs));
    };

    enum State { Free, Lower, Upper };
    std::vector<State> state(n, Free);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n).cwiseMax(lo).cwiseMin(hi);
    if (std::isinf(lo) && std::isinf(hi)) {
        std::vector<Eigen::Index> all(n);
        for (Eigen::Index i = 0; i < n; ++i) all[i] = i;
        return solve_free(all, v);
    }

    const double gtol = 1e-13 * std::max(1.0, (m.transpose() * r).norm());
    for (int iter = 0; iter < 20 * n + 20; ++iter) {
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i)
            if (state[i] == Free) free.push_back(i);

        bool feasible = true;
        if (!free.empty()) {
            const Eigen::VectorXd z = solve_free(free, v);
            double alpha = 1.0;
            Eigen::Index blocking = -1;
            State blocking_state = Free;
            for (std::size_t k = 0; k < free.size(); ++k) {
                const Eigen::Index i = free[k];
                const double target = z[static_cast<Eigen::Index>(k)];
                State hit = Free;
                double a = 1.0;
                if (target > hi) {
                    a = (hi - v[i]) / (target - v[i]);
                    hit = Upper;
                } else if (target < lo) {
                    a = (lo - v[i]) / (target - v[i]);
                    hit = Lower;
                }
                if (hit != Free && a < alpha) {
                    alpha = a;
                    blocking = i;
                    blocking_state = hit;
                }
            }
            for (std::size_t k = 0; k < free.size(); ++k) {
                const Eigen::Index i = free[k];
                v[i] += alpha * (z[static_cast<Eigen::Index>(k)] - v[i]);
            }
            if (blocking >= 0) {
                feasible = false;
                for (Eigen::Index i : free) {
                    const bool at_hi = i == blocking ? blocking_state == Upper : v[i] >= hi;
                    const bool at_lo = i == blocking ? blocking_state == Lower : v[i] <= lo;
                    if (at_hi) {
                        v[i] = hi;
                        state[i] = Upper;
                    } else if (at_lo) {
                        v[i] = lo;
                        state[i] = Lower;
                    }
                }
            }
        }
        if (!feasible) continue;

        // all free variables interior: release the bound variable with the worst KKT violation
        const Eigen::VectorXd g = m.transpose() * (m * v - r);
        Eigen::Index worst = -1;
        double worst_g = gtol;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double viol = state[i] == Lower ? -g[i] : state[i] == Upper ? g[i] : 0.0;
            if (viol > worst_g) {
                worst_g = viol;
                worst = i;
            }
        }
        if (worst < 0) return v;
        state[worst] = Free;
    }
    return v;
}

struct ChannelBasis {
    std::vector<std::string> names;
    std::vector<fields::FieldSample> samples;
};

ChannelBasis channel_basis(const PlanarTrapModel& model, const ChannelMap& channels, const Vec3& p) {
    ChannelBasis b;
    for (const auto& [name, labels] : channels) {
        fields::FieldSample s;
        for (const auto& label : labels) s += model.electrode_basis(label, p);
        b.names.push_back(name);
        b.samples.push_back(s);
    }
    return b;
}

}  // namespace

StepSolution solve_step(const PlanarTrapModel& model, const IonSpecies& sp, const Vec3& p, const StepTargets& t,
                        const ChannelMap& channels_in, const StepOptions& opt) {
    if (!(opt.omega_ref > 0.0)) throw ValidationError("reference frequency must be positive");
    if (!(opt.v_min < opt.v_max)) throw ValidationError("voltage bounds must satisfy v_min < v_max");
    if (!(opt.regularization >= 0.0)) throw ValidationError("regularization must be non-negative");
    const ChannelMap channels = resolve_channels(model, channels_in);
    const ChannelBasis basis = channel_basis(model, channels, p);
    const auto n = static_cast<Eigen::Index>(basis.names.size());

    const double k = sp.mass() * opt.omega_ref * opt.omega_ref;
    const double length = opt.length_scale > 0.0 ? opt.length_scale : p.z();
    const double wf = sp.charge() / (k * length);
    const double wc = 1.0 / k;

    Eigen::MatrixXd a(4, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto& s = basis.samples[static_cast<std::size_t>(c)];
        a.block<3, 1>(0, c) = wf * s.e_field;
        a(3, c) = -wc * sp.charge() * s.gradient(0, 0);
    }
    Eigen::Vector4d b;
    b << wf * t.field, wc * t.curvature;

    const double smax = a.jacobiSvd().singularValues()(0);
    const double lambda = opt.regularization * smax;
    Eigen::MatrixXd m(4 + n, n);
    m << a, lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(4 + n);
    r.head<4>() = b;

    const Eigen::VectorXd v = bounded_least_squares(m, r, opt.v_min, opt.v_max);

    StepSolution out;
    out.field = Vec3::Zero();
    out.curvature = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto& s = basis.samples[static_cast<std::size_t>(c)];
        out.channel_volts[basis.names[static_cast<std::size_t>(c)]] = v[c];
        out.field += v[c] * s.e_field;
        out.curvature -= v[c] * sp.charge() * s.gradient(0, 0);
    }
    out.scaled_residual = (a * v - b).norm();
    return out;
}

Waveform solve_waveform(const PlanarTrapModel& model, const IonSpecies& sp, const WaveformSpec& spec) {
    if (spec.path.empty()) throw ValidationError("transport path is empty");
    if (!(spec.v_min < spec.v_max)) throw ValidationError("voltage bounds must satisfy v_min < v_max");
    if (!(spec.target_omega_z > 0.0)) throw ValidationError("target axial frequency must be positive");
    const ChannelMap channels = resolve_channels(model, spec.channels);

    double x1 = 1e300, x2 = -1e300;
    for (const auto& e : model.electrodes())
        for (const auto& r : e.rects) {
            x1 = std::min(x1, r.x1);
            x2 = std::max(x2, r.x2);
        }
    for (std::size_t k = 0; k < spec.path.size(); ++k)
        if (!(spec.path[k] > x1 && spec.path[k] < x2))
            throw ValidationError(fmt::format("step {}: path position {} m lies outside the electrode extent", k,
                                              spec.path[k]));

    const PlanarTrapModel rf_only = model.with_dc_voltages({});
    const double k_target = sp.mass() * spec.target_omega_z * spec.target_omega_z;

    Waveform w;
    for (const auto& [name, labels] : channels) w.channels.push_back(name);

    Vec3 guess = spec.null_guess ? *spec.null_guess : analysis::default_null_guess(model);
    for (std::size_t k = 0; k < spec.path.size(); ++k) {
        guess.x() = spec.path[k];
        const auto null = analysis::find_rf_null(model, guess, {.fix_axial = true});
        const Vec3 p = null.point;
        guess = p;
        const double pp_xx = analysis::total_energy_hessian(rf_only, sp, p)(0, 0);

        StepOptions opt;
        opt.v_min = spec.v_min;
        opt.v_max = spec.v_max;
        opt.regularization = spec.regularization;
        opt.omega_ref = spec.target_omega_z;
        const StepSolution sol = solve_step(model, sp, p, {Vec3::Zero(), k_target - pp_xx}, channels, opt);

        WaveformStep step;
        step.position = spec.path[k];
        step.target = p;
        step.channel_volts = sol.channel_volts;
        step.field_residual = sol.field.norm();
        step.axial_field = sol.field.x();
        const double curv = sol.curvature + pp_xx;
        step.omega_z = curv > 0.0 ? std::sqrt(curv / sp.mass()) : std::numeric_limits<double>::quiet_NaN();

        double vmax = 1.0;
        for (const auto& [name, v] : sol.channel_volts) vmax = std::max(vmax, std::abs(v));
        if (step.field_residual > 1e-3 * vmax)
            throw ValidationError(fmt::format(
                "step {}: zero-field constraint cannot be met within the voltage bounds (|E| = {:.4g} V/m)", k,
                step.field_residual));
        if (!(std::abs(step.omega_z / spec.target_omega_z - 1.0) <= 1e-3))
            throw ValidationError(fmt::format(
                "step {}: axial curvature constraint cannot be met within the voltage bounds (omega_z/2pi = {:.6g} MHz)",
                k, units::rad_s_to_mhz(step.omega_z)));
        w.steps.push_back(std::move(step));
    }
    return w;
}

ContinuityReport waveform_continuity_check(const Waveform& w, double max_step_v) {
    ContinuityReport rep{true, {}};
    for (std::size_t k = 1; k < w.steps.size(); ++k) {
        double jump = 0.0;
        for (const auto& [name, v] : w.steps[k].channel_volts) {
            const auto it = w.steps[k - 1].channel_volts.find(name);
            const double prev = it == w.steps[k - 1].channel_volts.end() ? 0.0 : it->second;
            jump = std::max(jump, std::abs(v - prev));
        }
        if (jump > max_step_v) {
            rep.pass = false;
            rep.offending_steps.push_back(k);
        }
    }
    return rep;
}

std::vector<double> closed_loop_omegas(const PlanarTrapModel& model, const IonSpecies& sp, const Waveform& w,
                                       const WaveformSpec& spec) {
    const ChannelMap channels = resolve_channels(model, spec.channels);
    std::vector<double> out;
    out.reserve(w.steps.size());
    for (const auto& step : w.steps) {
        const PlanarTrapModel solved = model.with_dc_voltages(electrode_voltages(channels, step.channel_volts));
        const auto sec = analysis::secular_frequencies(solved, sp, {.guess = step.target, .allow_free_axis = false});
        out.push_back(sec.omegas[static_cast<std::size_t>(sec.axial_index)]);
    }
    return out;
}

}  // namespace paultrap::transport
