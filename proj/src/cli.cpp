#include "paultrap/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "paultrap/analysis.hpp"
#include "paultrap/cantilever.hpp"
#include "paultrap/crystal.hpp"
#include "paultrap/io.hpp"
#include "paultrap/micromotion.hpp"
#include "paultrap/noise.hpp"
#include "paultrap/qft.hpp"
#include "paultrap/resonator.hpp"
#include "paultrap/transport.hpp"

namespace paultrap::cli {

namespace {

using io::Json;

const std::set<std::string> kCommands = {"analyze",   "fieldmap",  "crystal",    "spectrum", "heating-budget",
                                         "resonator", "transport", "cantilever", "qft",      "stability"};

struct Globals {
    std::string format = "json";
    std::uint64_t seed = 0;
    std::string output;
};

std::string num(double v) { return fmt::format("{:.10g}", v); }

Json um(const Vec3& p) { return Json::array({units::m_to_um(p.x()), units::m_to_um(p.y()), units::m_to_um(p.z())}); }

Json with_schema(Json body) {
    Json doc = {{"schema", io::kSchema}};
    doc.update(body);
    return doc;
}

void require_format(const Globals& g, std::initializer_list<const char*> allowed) {
    for (const char* f : allowed)
        if (g.format == f) return;
    throw ValidationError(fmt::format("format '{}' is not available for this command", g.format));
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string geometry;
    std::string species = "24Mg+";
    std::string guess;
    bool no_depth = false;
    double box_factor = 10.0;
};

std::string do_analyze(const AnalyzeArgs& a, const Globals& g) {
    require_format(g, {"json"});
    const auto model = io::parse_geometry(io::load_json_file(a.geometry));
    const IonSpecies sp = species_by_label(a.species);

    analysis::SecularOptions opt;
    if (!a.guess.empty()) {
        const auto t = io::parse_triple(a.guess);
        opt.guess = Vec3(units::um_to_m(t[0]), units::um_to_m(t[1]), units::um_to_m(t[2]));
    }
    const auto sec = analysis::secular_frequencies(model, sp, opt);

    Json report;
    report["species"] = sp.label();
    report["null_point_um"] = um(sec.null_point);
    report["rf_residual_field_v_per_m"] = sec.residual_field * model.drive().v_rf;
    report["equilibrium_um"] = um(sec.equilibrium);
    report["ion_height_um"] = units::m_to_um(sec.equilibrium.z());
    Json freqs = Json::array(), axes = Json::array();
    for (int i = 0; i < 3; ++i) {
        freqs.push_back(units::rad_s_to_mhz(sec.omegas[i]));
        axes.push_back(Json::array({sec.axes[i].x(), sec.axes[i].y(), sec.axes[i].z()}));
    }
    report["secular_mhz"] = freqs;
    report["principal_axes"] = axes;
    report["axial_index"] = sec.axial_index;
    report["tilt_deg"] = sec.tilt_deg ? Json(*sec.tilt_deg) : Json(nullptr);

    // Mathieu parameters along each principal axis from the RF and static curvatures
    const auto rf_only = model.with_dc_voltages({});
    const Mat3 h_pp = analysis::total_energy_hessian(rf_only, sp, sec.equilibrium);
    const Mat3 h_dc = -sp.charge() * model.static_field(sec.equilibrium).gradient;
    const double omega = model.drive().omega_rf;
    Json mathieu = Json::array();
    for (int i = 0; i < 3; ++i) {
        const Vec3& e = sec.axes[i];
        const double k_pp = std::max(0.0, e.dot(h_pp * e));
        const double q = 2.0 * std::sqrt(2.0) * std::sqrt(k_pp / sp.mass()) / omega;
        const double av = 4.0 * e.dot(h_dc * e) / (sp.mass() * omega * omega);
        mathieu.push_back({{"axis", i}, {"a", av}, {"q", q}});
    }
    report["mathieu"] = mathieu;

    if (!a.no_depth) {
        analysis::DepthOptions dopt;
        dopt.box_factor = a.box_factor;
        const auto d = analysis::trap_depth(model, sp, dopt);
        report["depth_mev"] = d.depth_ev * 1e3;
        report["escape_point_um"] = um(d.escape_point);
    }
    return with_schema(report).dump(2) + "\n";
}

// ---------------------------------------------------------------- fieldmap

struct FieldMapArgs {
    std::string geometry;
    std::string species = "24Mg+";
    std::string origin;
    std::string step;
    std::string count;
};

std::string do_fieldmap(const FieldMapArgs& a, const Globals& g) {
    require_format(g, {"csv", "json"});
    const auto model = io::parse_geometry(io::load_json_file(a.geometry));
    const IonSpecies sp = species_by_label(a.species);
    const auto o = io::parse_triple(a.origin), s = io::parse_triple(a.step), c = io::parse_triple(a.count);
    fields::GridSpec grid;
    grid.origin = Vec3(o[0], o[1], o[2]) * 1e-6;
    grid.step = Vec3(s[0], s[1], s[2]) * 1e-6;
    for (int i = 0; i < 3; ++i) {
        if (c[i] < 0 || c[i] != std::floor(c[i])) throw ValidationError("grid counts must be non-negative integers");
        grid.count[i] = static_cast<std::size_t>(c[i]);
    }
    const auto rows = fields::field_map(model, sp, grid);
    if (g.format == "csv") return fields::field_map_csv(rows);
    Json arr = Json::array();
    for (const auto& r : rows)
        arr.push_back({{"point_um", um(r.point)},
                       {"phi_dc_v", r.dc.potential},
                       {"e_v_per_m", Json::array({r.dc.e_field.x(), r.dc.e_field.y(), r.dc.e_field.z()})},
                       {"phi_pp_ev", r.phi_pp_ev}});
    return with_schema({{"rows", arr}}).dump(2) + "\n";
}

// ---------------------------------------------------------------- crystal

struct CrystalArgs {
    std::string species = "24Mg+";
    double freq_mhz = 1.0;
    int ions = 3;
};

std::string do_crystal(const CrystalArgs& a, const Globals& g) {
    require_format(g, {"csv", "json"});
    const IonSpecies sp = species_by_label(a.species);
    const auto res = crystal::equilibrium_positions(sp, units::mhz_to_rad_s(a.freq_mhz), a.ions);
    if (g.format == "csv") {
        std::string s = "index,position_um\n";
        for (std::size_t i = 0; i < res.positions.size(); ++i)
            s += fmt::format("{},{}\n", i, num(units::m_to_um(res.positions[i])));
        return s;
    }
    Json pos = Json::array();
    for (double p : res.positions) pos.push_back(units::m_to_um(p));
    return with_schema({{"species", sp.label()},
                        {"axial_mhz", a.freq_mhz},
                        {"length_scale_um", units::m_to_um(res.length_scale)},
                        {"positions_um", pos},
                        {"gradient_norm", res.gradient_norm}})
               .dump(2) +
           "\n";
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
    double beta = 0.0;
    double linewidth_mhz = 41.0;
    double rf_mhz = 100.0;
    double wavelength_nm = 280.0;
    double span_mhz = 0.0;
    int points = 601;
    int n_max = 0;
};

std::string do_spectrum(const SpectrumArgs& a, const Globals& g) {
    require_format(g, {"csv", "json"});
    if (a.points < 2) throw ValidationError("at least two points are required");
    const micromotion::LineParams line{units::mhz_to_rad_s(a.linewidth_mhz), units::mhz_to_rad_s(a.rf_mhz),
                                       a.wavelength_nm * 1e-9};
    const micromotion::FluorescenceSpectrum spec(line, a.beta,
                                                 a.n_max > 0 ? std::optional<int>(a.n_max) : std::nullopt);
    const double span = a.span_mhz > 0.0 ? a.span_mhz : 1.5 * a.rf_mhz;
    std::string csv = "detuning_mhz,relative_rate\n";
    Json arr = Json::array();
    for (int i = 0; i < a.points; ++i) {
        const double d = -span + 2.0 * span * i / (a.points - 1);
        const double r = spec(units::mhz_to_rad_s(d));
        csv += fmt::format("{},{}\n", num(d), num(r));
        arr.push_back({{"detuning_mhz", d}, {"relative_rate", r}});
    }
    if (g.format == "csv") return csv;
    return with_schema({{"beta", a.beta}, {"n_max", spec.n_max()}, {"points", arr}}).dump(2) + "\n";
}

// ---------------------------------------------------------------- heating-budget

double relative_psd_of(const Json& s) {
    if (s.contains("relative_psd")) return io::get_number(s, "relative_psd");
    if (s.contains("dbc"))
        return noise::relative_psd_from_dbc(io::get_number(s, "dbc") + io::get_number_or(s, "attenuation_db", 0.0));
    throw ValidationError("RF noise source needs 'relative_psd' or 'dbc'");
}

noise::NoiseSource parse_source(const Json& s) {
    const std::string type = s.value("type", std::string());
    const std::string label = s.value("label", type);
    std::optional<double> omega;
    if (s.contains("freq_mhz")) omega = units::mhz_to_rad_s(io::get_number(s, "freq_mhz"));
    if (type == "field") return noise::FieldNoiseSource{label, io::get_number(s, "s_e"), omega};
    if (type == "electrode") {
        double s_v = 0.0;
        if (s.contains("s_v")) s_v = io::get_number(s, "s_v");
        else if (s.contains("sqrt_s_v")) s_v = std::pow(io::get_number(s, "sqrt_s_v"), 2);
        else if (s.contains("johnson"))
            s_v = noise::johnson_voltage_psd(io::get_number(s["johnson"], "r_ohm"), io::get_number(s["johnson"], "t_k"));
        else throw ValidationError(fmt::format("source '{}' needs s_v, sqrt_s_v or johnson", label));
        std::optional<noise::RcFilter> filter;
        if (s.contains("filter"))
            filter = noise::RcFilter{io::get_number(s["filter"], "r_ohm"), io::get_number(s["filter"], "c_pf") * 1e-12};
        const double n = io::get_number_or(s, "n_electrodes", 1.0);
        return noise::ElectrodeNoiseSource{label, s_v, filter, io::get_number(s, "coupling_v_per_m"),
                                           static_cast<int>(n), omega};
    }
    if (type == "rfam_axial") {
        const double v = io::get_number(s, "v_rf");
        return noise::RfAmAxialSource{label,
                                      units::mhz_to_rad_s(io::get_number(s, "rf_freq_mhz")),
                                      io::get_number(s, "e0_per_v") * v,
                                      io::get_number(s, "de0_dz_per_v") * v,
                                      relative_psd_of(s),
                                      s.value("two_sideband", false),
                                      omega};
    }
    if (type == "rfam_radial")
        return noise::RfAmRadialSource{label, units::um_to_m(io::get_number(s, "displacement_um")),
                                       relative_psd_of(s), s.value("two_sideband", false), omega};
    throw ValidationError(fmt::format("unknown noise source type '{}'", type));
}

std::string do_heating_budget(const std::string& path, const Globals& g) {
    require_format(g, {"json", "csv", "table"});
    const Json doc = io::load_json_file(path);
    io::check_schema(doc, path);
    const IonSpecies sp = io::parse_species(doc.value("species", Json("24Mg+")));
    const double omega = units::mhz_to_rad_s(io::get_number(doc, "freq_mhz"));
    std::vector<noise::NoiseSource> sources;
    if (doc.contains("sources")) {
        if (!doc["sources"].is_array()) throw ValidationError("'sources' must be an array");
        for (const auto& s : doc["sources"]) sources.push_back(parse_source(s));
    }
    const auto rep = noise::heating_budget(sp, omega, sources);

    if (g.format == "csv") {
        std::string s = "label,mechanism,rate_quanta_per_s,rate_quanta_per_ms,s_e_equiv_v2_per_m2_hz\n";
        for (const auto& l : rep.lines)
            s += fmt::format("\"{}\",\"{}\",{},{},{}\n", l.label, l.mechanism, num(l.rate), num(l.rate * 1e-3),
                             num(l.s_e_equivalent));
        s += fmt::format("\"total\",\"\",{},{},{}\n", num(rep.total_rate), num(rep.total_rate * 1e-3),
                         num(rep.total_s_e));
        return s;
    }
    if (g.format == "table") {
        std::string s = fmt::format("{:<28} {:>16} {:>16} {:>18}\n", "source", "quanta/s", "quanta/ms",
                                    "S_E (V/m)^2/Hz");
        for (const auto& l : rep.lines)
            s += fmt::format("{:<28} {:>16.4g} {:>16.4g} {:>18.4g}\n", l.label, l.rate, l.rate * 1e-3,
                             l.s_e_equivalent);
        s += fmt::format("{:<28} {:>16.4g} {:>16.4g} {:>18.4g}\n", "total", rep.total_rate, rep.total_rate * 1e-3,
                         rep.total_s_e);
        return s;
    }
    Json lines = Json::array();
    for (const auto& l : rep.lines)
        lines.push_back({{"label", l.label},
                         {"mechanism", l.mechanism},
                         {"formula", l.formula},
                         {"rate_quanta_per_s", l.rate},
                         {"rate_quanta_per_ms", l.rate * 1e-3},
                         {"s_e_equiv_v2_per_m2_hz", l.s_e_equivalent}});
    return with_schema({{"species", sp.label()},
                        {"freq_mhz", units::rad_s_to_mhz(omega)},
                        {"lines", lines},
                        {"total_quanta_per_s", rep.total_rate},
                        {"total_quanta_per_ms", rep.total_rate * 1e-3},
                        {"total_s_e_v2_per_m2_hz", rep.total_s_e}})
               .dump(2) +
           "\n";
}

// ---------------------------------------------------------------- resonator

struct ResonatorArgs {
    std::optional<double> freq_mhz, q, l_uh, q_after, v_rf, kappa, fwhm_mhz, johnson_kohm;
    double t_k = 300.0;
    std::vector<double> offsets_mhz;
    std::optional<double> lead_length_cm, lead_radius_mm, lead_separation_cm;
};

std::string do_resonator(const ResonatorArgs& a, const Globals& g) {
    require_format(g, {"json"});
    Json rep;
    if (a.freq_mhz && a.q && a.l_uh) {
        const auto m = resonator::rlc_from_measurement(units::mhz_to_rad_s(*a.freq_mhz), *a.q, *a.l_uh * 1e-6);
        rep["rlc"] = {{"freq_mhz", *a.freq_mhz},
                      {"q", m.q},
                      {"l_uh", m.l * 1e6},
                      {"c_pf", m.c * 1e12},
                      {"r_parallel_kohm", m.r_parallel * 1e-3}};
        if (a.q_after) {
            const auto cl = resonator::chip_loss(m, *a.q_after, a.v_rf.value_or(0.0));
            rep["chip_loss"] = {{"q_after", *a.q_after},
                                {"r_combined_kohm", cl.r_combined * 1e-3},
                                {"r_chip_kohm", cl.r_chip * 1e-3},
                                {"v_rf", a.v_rf.value_or(0.0)},
                                {"dissipated_mw", cl.dissipated * 1e3}};
        }
    }
    if (a.q && a.kappa) rep["loaded_q"] = {{"q0", *a.q}, {"kappa", *a.kappa}, {"q_loaded", resonator::loaded_q(*a.q, *a.kappa)}};
    if (a.freq_mhz && a.fwhm_mhz)
        rep["linewidth"] = {{"freq_mhz", *a.freq_mhz},
                            {"fwhm_mhz", *a.fwhm_mhz},
                            {"q_loaded", resonator::q_from_linewidth(*a.freq_mhz, *a.fwhm_mhz)}};
    if (a.freq_mhz && a.q && !a.offsets_mhz.empty()) {
        Json rows = Json::array();
        for (double off : a.offsets_mhz) {
            const double w0 = units::mhz_to_rad_s(*a.freq_mhz);
            const double w = units::mhz_to_rad_s(*a.freq_mhz - off);
            Json row = {{"offset_mhz", off}, {"attenuation_db", noise::resonator_filter_attenuation(w, w0, *a.q)}};
            if (a.johnson_kohm) {
                const double sv = noise::resonator_johnson_psd(w, w0, *a.q, *a.johnson_kohm * 1e3, a.t_k);
                row["johnson_v2_per_hz"] = sv;
                row["johnson_dbm_per_hz_50ohm"] = voltage_psd_to_dbm_per_hz(sv);
            }
            rows.push_back(row);
        }
        rep["attenuation"] = rows;
    }
    if (a.lead_length_cm && a.lead_radius_mm && a.lead_separation_cm)
        rep["lead_inductance_nh"] =
            resonator::lead_inductance(*a.lead_length_cm * 1e-2, *a.lead_radius_mm * 1e-3, *a.lead_separation_cm * 1e-2) *
            1e9;
    if (rep.empty()) throw ValidationError("no resonator analysis requested; see --help for the required options");
    return with_schema(rep).dump(2) + "\n";
}

// ---------------------------------------------------------------- transport

std::string do_transport(const std::string& geometry, const std::string& spec_path, double max_step_v,
                         bool closed_loop, const Globals& g) {
    require_format(g, {"csv", "json"});
    const auto model = io::parse_geometry(io::load_json_file(geometry));
    const Json doc = io::load_json_file(spec_path);
    io::check_schema(doc, spec_path);
    const IonSpecies sp = io::parse_species(doc.value("species", Json("24Mg+")));

    transport::WaveformSpec spec;
    if (!doc.contains("path_um")) throw ValidationError("waveform spec needs 'path_um'");
    const Json& path = doc["path_um"];
    if (path.is_array()) {
        for (const auto& p : path) {
            if (!p.is_number()) throw ValidationError("'path_um' entries must be numbers");
            spec.path.push_back(units::um_to_m(p.get<double>()));
        }
    } else {
        spec.path = transport::make_path(units::um_to_m(io::get_number(path, "start")),
                                         units::um_to_m(io::get_number(path, "stop")),
                                         units::um_to_m(io::get_number_or(path, "step", 10.0)));
    }
    spec.target_omega_z = units::mhz_to_rad_s(io::get_number(doc, "omega_z_mhz"));
    spec.v_min = io::get_number_or(doc, "v_min", spec.v_min);
    spec.v_max = io::get_number_or(doc, "v_max", spec.v_max);
    spec.regularization = io::get_number_or(doc, "regularization", spec.regularization);
    if (doc.contains("channels")) {
        for (const auto& [name, labels] : doc["channels"].items()) {
            if (!labels.is_array()) throw ValidationError(fmt::format("channel '{}' must list electrodes", name));
            for (const auto& l : labels) spec.channels[name].push_back(l.get<std::string>());
        }
    }
    if (doc.contains("null_guess_um")) {
        const auto& v = doc["null_guess_um"];
        if (!v.is_array() || v.size() != 3) throw ValidationError("'null_guess_um' must be [x, y, z]");
        spec.null_guess = Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>()) * 1e-6;
    }

    const auto w = transport::solve_waveform(model, sp, spec);
    std::vector<double> closed;
    if (closed_loop) closed = transport::closed_loop_omegas(model, sp, w, spec);
    const auto cont = transport::waveform_continuity_check(w, max_step_v);

    if (g.format == "csv") {
        std::string s = "step,x_um,y_um,z_um";
        for (const auto& c : w.channels) s += fmt::format(",{}_v", c);
        s += ",field_residual_v_per_m,omega_z_mhz";
        if (closed_loop) s += ",closed_loop_omega_z_mhz";
        s += "\n";
        for (std::size_t k = 0; k < w.steps.size(); ++k) {
            const auto& st = w.steps[k];
            s += fmt::format("{},{},{},{}", k, num(units::m_to_um(st.position)), num(units::m_to_um(st.target.y())),
                             num(units::m_to_um(st.target.z())));
            for (const auto& c : w.channels) s += "," + num(st.channel_volts.at(c));
            s += fmt::format(",{},{}", num(st.field_residual), num(units::rad_s_to_mhz(st.omega_z)));
            if (closed_loop) s += "," + num(units::rad_s_to_mhz(closed[k]));
            s += "\n";
        }
        return s;
    }
    Json steps = Json::array();
    for (std::size_t k = 0; k < w.steps.size(); ++k) {
        const auto& st = w.steps[k];
        Json j = {{"step", k},
                  {"target_um", um(st.target)},
                  {"channel_volts", st.channel_volts},
                  {"field_residual_v_per_m", st.field_residual},
                  {"omega_z_mhz", units::rad_s_to_mhz(st.omega_z)}};
        if (closed_loop) j["closed_loop_omega_z_mhz"] = units::rad_s_to_mhz(closed[k]);
        steps.push_back(j);
    }
    return with_schema({{"species", sp.label()},
                        {"channels", w.channels},
                        {"steps", steps},
                        {"continuity", {{"max_step_v", max_step_v},
                                        {"pass", cont.pass},
                                        {"offending_steps", cont.offending_steps}}}})
               .dump(2) +
           "\n";
}

// ---------------------------------------------------------------- cantilever

struct CantileverArgs {
    std::string device;
    std::string sweep = "power";
    double from = 0.0;
    double to = 0.0;
    int points = 21;
};

std::string do_cantilever(const CantileverArgs& a, const Globals& g) {
    require_format(g, {"csv", "json"});
    const Json d = io::load_json_file(a.device);
    io::check_schema(d, a.device);
    const auto dev = cantilever::make_device(
        units::um_to_m(io::get_number(d, "h_c_um")), units::um_to_m(io::get_number(d, "s_um")),
        units::um_to_m(io::get_number(d, "w_um")), io::get_number(d, "rho_kg_per_m3"),
        units::um_to_m(io::get_number(d, "d0_um")), units::um_to_m(io::get_number(d, "h_um")),
        units::hz_to_rad_s(io::get_number(d, "f_c_khz") * 1e3), io::get_number(d, "q_c"));
    const double c_c = d.contains("c_c_pf") ? io::get_number(d, "c_c_pf") * 1e-12
                                            : cantilever::coupling_capacitance(dev.w, dev.h, dev.d0);
    const auto circ = cantilever::make_circuit(io::get_number(d, "l0_nh") * 1e-9,
                                               units::mhz_to_rad_s(io::get_number(d, "f0_mhz")),
                                               io::get_number(d, "q_rf"), c_c);
    const double t_c = io::get_number_or(d, "t_c_k", 300.0);
    const double detuning = units::hz_to_rad_s(io::get_number_or(d, "detuning_khz", 0.0) * 1e3);
    const double power = io::get_number_or(d, "power_w", 1.0);

    struct Row {
        double power, detuning;
        cantilever::DampingShift ds;
        double t_eff;
    };
    auto evaluate = [&](double p, double dw) {
        const auto ds = cantilever::damping_and_shift(dev, circ, cantilever::v_max_squared(circ, p), dw);
        const double gamma = dev.gamma();
        const double t_eff = t_c * gamma / (gamma + ds.gamma_prime);
        return Row{p, dw, ds, t_eff};
    };

    if (g.format == "json") {
        // slopes per watt; both quantities are linear in power
        const double p_ref = 1e-6;
        auto unit = evaluate(p_ref, detuning);
        unit.ds.gamma_prime /= p_ref;
        unit.ds.kappa /= p_ref;
        const auto at = evaluate(power, detuning);
        return with_schema(
                   {{"effective_mass_kg", dev.effective_mass},
                    {"xi_prime", dev.xi_prime},
                    {"xi_dprime", dev.xi_dprime},
                    {"xi_c_dprime", dev.xi_c_dprime},
                    {"c_c_pf", circ.c_c * 1e12},
                    {"c0_pf", circ.c0 * 1e12},
                    {"r_res_ohm", circ.r_res()},
                    {"detuning_khz", units::rad_s_to_hz(detuning) * 1e-3},
                    {"gamma_prime_per_w_rad_s", unit.ds.gamma_prime},
                    {"gamma_prime_per_w_hz", units::rad_s_to_hz(unit.ds.gamma_prime)},
                    {"kappa_per_w", unit.ds.kappa},
                    {"at_power", {{"power_w", power},
                                  {"gamma_prime_rad_s", at.ds.gamma_prime},
                                  {"kappa", at.ds.kappa},
                                  {"f_c_khz", units::rad_s_to_hz(at.ds.omega_shifted) * 1e-3},
                                  {"t_eff_k", at.t_eff}}}})
                   .dump(2) +
               "\n";
    }

    if (a.points < 2) throw ValidationError("at least two sweep points are required");
    if (a.sweep != "power" && a.sweep != "detuning")
        throw ValidationError(fmt::format("unknown sweep '{}' (power or detuning)", a.sweep));
    std::string s =
        "power_w,detuning_khz,gamma_prime_rad_s,gamma_prime_hz,kappa,f_c_khz,t_eff_k\n";
    for (int i = 0; i < a.points; ++i) {
        const double x = a.from + (a.to - a.from) * i / (a.points - 1);
        const Row r = a.sweep == "power" ? evaluate(x, detuning) : evaluate(power, units::hz_to_rad_s(x * 1e3));
        s += fmt::format("{},{},{},{},{},{},{}\n", num(r.power), num(units::rad_s_to_hz(r.detuning) * 1e-3),
                         num(r.ds.gamma_prime), num(units::rad_s_to_hz(r.ds.gamma_prime)), num(r.ds.kappa),
                         num(units::rad_s_to_hz(r.ds.omega_shifted) * 1e-3), num(r.t_eff));
    }
    return s;
}

// ---------------------------------------------------------------- qft

struct QftArgs {
    std::string state = "period1";
    std::string amplitudes;
    double phi_deg = 0.0;
    std::string convention = "standard";
    std::string mode = "semiclassical";
    std::size_t shots = 0;
    double depolarize = 0.0;
    int points = 37;
};

std::string outcome_label(std::size_t i, int n) {
    std::string s;
    for (int b = n - 1; b >= 0; --b) s += ((i >> b) & 1) ? '1' : '0';
    return s;
}

qft::PureState qft_input(const QftArgs& a) {
    if (a.amplitudes.empty()) return qft::prepare(qft::parse_state_kind(a.state), units::deg_to_rad(a.phi_deg));
    const Json doc = io::load_json_file(a.amplitudes);
    const Json& arr = doc.is_object() ? doc.value("amplitudes", Json()) : doc;
    if (!arr.is_array()) throw ValidationError("amplitude file must hold an array of numbers or [re, im] pairs");
    std::vector<qft::Complex> amps;
    for (const auto& v : arr) {
        if (v.is_number()) amps.emplace_back(v.get<double>(), 0.0);
        else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
            amps.emplace_back(v[0].get<double>(), v[1].get<double>());
        else throw ValidationError("amplitudes must be numbers or [re, im] pairs");
    }
    return qft::PureState(std::move(amps));
}

std::string do_qft(const QftArgs& a, const Globals& g) {
    require_format(g, {"csv", "json"});
    const auto state = qft_input(a);
    qft::RotationConvention conv;
    if (a.convention == "standard") conv = qft::RotationConvention::Standard;
    else if (a.convention == "conjugated") conv = qft::RotationConvention::Conjugated;
    else throw ValidationError(fmt::format("unknown convention '{}'", a.convention));

    qft::Distribution dist = [&] {
        if (a.mode == "semiclassical") return qft::semiclassical_qft(state, conv);
        if (a.mode == "coherent") return qft::born_probabilities(qft::coherent_qft(state));
        throw ValidationError(fmt::format("unknown mode '{}'", a.mode));
    }();
    const qft::Distribution expected = dist;
    if (a.depolarize > 0.0) dist = qft::depolarize(dist, a.depolarize);
    if (a.shots > 0) dist = qft::sample(dist, a.shots, g.seed);
    const int n = state.qubits();

    if (g.format == "csv") {
        std::string s = "outcome,probability\n";
        for (std::size_t i = 0; i < dist.size(); ++i) s += fmt::format("{},{}\n", outcome_label(i, n), num(dist[i]));
        return s;
    }
    Json probs = Json::object();
    for (std::size_t i = 0; i < dist.size(); ++i) probs[outcome_label(i, n)] = dist[i];
    Json rep = {{"state", a.amplitudes.empty() ? a.state : a.amplitudes},
                {"mode", a.mode},
                {"convention", a.convention},
                {"probabilities", probs}};
    if (a.depolarize > 0.0 || a.shots > 0) {
        rep["depolarize"] = a.depolarize;
        rep["shots"] = a.shots;
        rep["seed"] = g.seed;
        rep["sso_vs_ideal"] = qft::sso(dist, expected);
    }
    return with_schema(rep).dump(2) + "\n";
}

std::string do_qft_sweep(const QftArgs& a, const Globals& g) {
    require_format(g, {"csv", "json"});
    if (a.points < 2) throw ValidationError("at least two sweep points are required");
    std::vector<double> phis;
    for (int i = 0; i < a.points; ++i) phis.push_back(constants::two_pi * i / (a.points - 1));
    const auto dists = qft::phase_sweep(phis);
    if (g.format == "csv") {
        std::string s = "phi_r_deg";
        for (std::size_t j = 0; j < 8; ++j) s += ",p_" + outcome_label(j, 3);
        s += "\n";
        for (std::size_t i = 0; i < phis.size(); ++i) {
            s += num(units::rad_to_deg(phis[i]));
            for (std::size_t j = 0; j < 8; ++j) s += "," + num(dists[i][j]);
            s += "\n";
        }
        return s;
    }
    Json rows = Json::array();
    for (std::size_t i = 0; i < phis.size(); ++i)
        rows.push_back({{"phi_r_deg", units::rad_to_deg(phis[i])}, {"probabilities", dists[i].probabilities()}});
    return with_schema({{"state", "period3_phase"}, {"sweep", rows}}).dump(2) + "\n";
}

// ---------------------------------------------------------------- stability

struct StabilityArgs {
    std::optional<double> a, q;
    std::optional<double> r_um, v0, vdc, rf_mhz;
    std::string species = "24Mg+";
    int steps = 2000;
};

std::string do_stability(const StabilityArgs& s, const Globals& g) {
    require_format(g, {"json"});
    analysis::MathieuParams mp{};
    std::optional<double> omega_rf;
    if (s.a || s.q) {
        if (!s.q) throw ValidationError("--q is required with --a");
        mp = {s.a.value_or(0.0), *s.q};
    } else if (s.r_um && s.v0 && s.rf_mhz) {
        omega_rf = units::mhz_to_rad_s(*s.rf_mhz);
        mp = analysis::mathieu_params(units::um_to_m(*s.r_um), *s.v0, s.vdc.value_or(0.0), *omega_rf,
                                      species_by_label(s.species));
    } else {
        throw ValidationError("give --a/--q or --r-um, --v0 and --rf-mhz");
    }
    const auto st = analysis::mathieu_stability(mp, s.steps);
    auto nan_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json rep = {{"a", mp.a},
                {"q", mp.q},
                {"stable", st.stable},
                {"beta", nan_null(st.beta)},
                {"beta_approx", nan_null(st.beta_approx)},
                {"monodromy_trace", st.trace}};
    if (omega_rf && st.stable) rep["secular_mhz"] = units::rad_s_to_mhz(0.5 * st.beta * *omega_rf);
    return with_schema(rep).dump(2) + "\n";
}

// ---------------------------------------------------------------- plumbing

void write_output(const std::string& text, const Globals& g, std::ostream& out) {
    if (g.output.empty()) {
        out << text;
        return;
    }
    std::ofstream f(g.output, std::ios::binary);
    if (!f) throw ValidationError(fmt::format("cannot write output file '{}'", g.output));
    f << text;
}

Json error_json(const std::string& kind, const std::string& message) {
    return {{"schema", io::kSchema}, {"error", {{"kind", kind}, {"message", message}}}};
}

std::string usage() {
    std::string s = "usage: paultrap <command> [options]\ncommands:";
    for (const auto& c : kCommands) s += " " + c;
    return s + "\nrun 'paultrap <command> --help' for command options\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << usage();
        return kUsage;
    }
    if (!args[0].empty() && args[0][0] != '-' && !kCommands.count(args[0])) {
        err << fmt::format("unknown command '{}'\n", args[0]) << usage();
        return kUsage;
    }

    CLI::App app{"Paul trap design and analysis toolkit", "paultrap"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::string default_format = "json";
    app.add_option("--format", g.format, "Output format: json, csv (table for heating-budget)")->capture_default_str();
    app.add_option("--seed", g.seed, "Seed for sampled outputs")->capture_default_str();
    app.add_option("-o,--output", g.output, "Write results to this file instead of stdout");
    std::function<std::string()> action;

    AnalyzeArgs an;
    auto* c_an = app.add_subcommand("analyze", "RF null, secular frequencies, tilt, depth and Mathieu a/q");
    c_an->add_option("--geometry", an.geometry, "Trap geometry JSON")->required();
    c_an->add_option("--species", an.species)->capture_default_str();
    c_an->add_option("--guess", an.guess, "RF-null starting point x,y,z in um");
    c_an->add_flag("--no-depth", an.no_depth, "Skip the trap-depth search");
    c_an->add_option("--box-factor", an.box_factor, "Depth search half-width in ion heights")->capture_default_str();
    c_an->callback([&] { action = [&] { return do_analyze(an, g); }; });

    FieldMapArgs fm;
    auto* c_fm = app.add_subcommand("fieldmap", "Static field and pseudopotential on a grid (CSV)");
    c_fm->add_option("--geometry", fm.geometry)->required();
    c_fm->add_option("--species", fm.species)->capture_default_str();
    c_fm->add_option("--origin", fm.origin, "x,y,z in um")->required();
    c_fm->add_option("--step", fm.step, "dx,dy,dz in um")->required();
    c_fm->add_option("--count", fm.count, "nx,ny,nz")->required();
    c_fm->callback([&] {
        default_format = "csv";
        action = [&] { return do_fieldmap(fm, g); };
    });

    CrystalArgs cr;
    auto* c_cr = app.add_subcommand("crystal", "Linear Coulomb crystal positions");
    c_cr->add_option("--species", cr.species)->capture_default_str();
    c_cr->add_option("--freq-mhz", cr.freq_mhz, "Axial frequency in MHz")->capture_default_str();
    c_cr->add_option("--ions", cr.ions)->capture_default_str();
    c_cr->callback([&] {
        default_format = "csv";
        action = [&] { return do_crystal(cr, g); };
    });

    SpectrumArgs sp;
    auto* c_sp = app.add_subcommand("spectrum", "Fluorescence vs detuning with micromotion sidebands");
    c_sp->add_option("--beta", sp.beta)->required();
    c_sp->add_option("--linewidth-mhz", sp.linewidth_mhz)->capture_default_str();
    c_sp->add_option("--rf-mhz", sp.rf_mhz)->capture_default_str();
    c_sp->add_option("--wavelength-nm", sp.wavelength_nm)->capture_default_str();
    c_sp->add_option("--span-mhz", sp.span_mhz, "Half-width of the detuning range (default 1.5 x RF)");
    c_sp->add_option("--points", sp.points)->capture_default_str();
    c_sp->add_option("--n-max", sp.n_max, "Sideband order cutoff (default automatic)");
    c_sp->callback([&] {
        default_format = "csv";
        action = [&] { return do_spectrum(sp, g); };
    });

    std::string scenario;
    auto* c_hb = app.add_subcommand("heating-budget", "Itemized motional heating budget from a JSON scenario");
    c_hb->add_option("--scenario", scenario)->required();
    c_hb->callback([&] { action = [&] { return do_heating_budget(scenario, g); }; });

    ResonatorArgs rs;
    auto* c_rs = app.add_subcommand("resonator", "RLC parameters, chip loss, loaded Q, attenuation table");
    c_rs->add_option("--freq-mhz", rs.freq_mhz);
    c_rs->add_option("--q", rs.q, "Measured (unloaded or bare) Q");
    c_rs->add_option("--l-uh", rs.l_uh, "Inductance in uH");
    c_rs->add_option("--q-after", rs.q_after, "Q with the trap chip attached");
    c_rs->add_option("--v-rf", rs.v_rf, "RF amplitude in V");
    c_rs->add_option("--kappa", rs.kappa, "Coupling coefficient");
    c_rs->add_option("--fwhm-mhz", rs.fwhm_mhz, "Resonance FWHM in MHz");
    c_rs->add_option("--offsets-mhz", rs.offsets_mhz, "Offsets below resonance for the attenuation table")
        ->delimiter(',');
    c_rs->add_option("--johnson-kohm", rs.johnson_kohm, "Parallel resistance for resonator Johnson noise");
    c_rs->add_option("--t-k", rs.t_k)->capture_default_str();
    c_rs->add_option("--lead-length-cm", rs.lead_length_cm);
    c_rs->add_option("--lead-radius-mm", rs.lead_radius_mm);
    c_rs->add_option("--lead-separation-cm", rs.lead_separation_cm);
    c_rs->callback([&] { action = [&] { return do_resonator(rs, g); }; });

    std::string tr_geom, tr_spec;
    double tr_max_step = 1.0;
    bool tr_closed = false;
    auto* c_tr = app.add_subcommand("transport", "Transport waveform synthesis");
    c_tr->add_option("--geometry", tr_geom)->required();
    c_tr->add_option("--spec", tr_spec, "Waveform spec JSON")->required();
    c_tr->add_option("--max-step-v", tr_max_step, "Continuity threshold in V")->capture_default_str();
    c_tr->add_flag("--closed-loop", tr_closed, "Recompute omega_z from the full model at every step");
    c_tr->callback([&] {
        default_format = "csv";
        action = [&] { return do_transport(tr_geom, tr_spec, tr_max_step, tr_closed, g); };
    });

    CantileverArgs cl;
    auto* c_cl = app.add_subcommand("cantilever", "RF cooling of a micro-cantilever");
    c_cl->add_option("--device", cl.device, "Device and circuit JSON")->required();
    c_cl->add_option("--sweep", cl.sweep, "power (W) or detuning (kHz)")->capture_default_str();
    c_cl->add_option("--from", cl.from)->capture_default_str();
    c_cl->add_option("--to", cl.to)->capture_default_str();
    c_cl->add_option("--points", cl.points)->capture_default_str();
    c_cl->callback([&] {
        default_format = "csv";
        action = [&] { return do_cantilever(cl, g); };
    });

    QftArgs qa;
    auto* c_q = app.add_subcommand("qft", "Coherent and semiclassical quantum Fourier transform");
    c_q->add_option("--state", qa.state, "period1|period2|period3|period4|period8|period3_phase")
        ->capture_default_str();
    c_q->add_option("--amplitudes", qa.amplitudes, "JSON file with amplitudes");
    c_q->add_option("--phi-deg", qa.phi_deg, "Relative phase for period3_phase")->capture_default_str();
    c_q->add_option("--convention", qa.convention, "standard|conjugated")->capture_default_str();
    c_q->add_option("--mode", qa.mode, "semiclassical|coherent")->capture_default_str();
    c_q->add_option("--shots", qa.shots, "Sample this many outcomes (0 = exact)")->capture_default_str();
    c_q->add_option("--depolarize", qa.depolarize, "Mix with the uniform distribution")->capture_default_str();
    auto* c_qs = c_q->add_subcommand("sweep", "Period-3 phase sweep grid");
    c_qs->add_option("--points", qa.points)->capture_default_str();
    c_q->callback([&] {
        if (c_qs->parsed()) {
            default_format = "csv";
            action = [&] { return do_qft_sweep(qa, g); };
        } else {
            action = [&] { return do_qft(qa, g); };
        }
    });

    StabilityArgs st;
    auto* c_st = app.add_subcommand("stability", "Mathieu parameters and Floquet stability");
    c_st->add_option("--a", st.a);
    c_st->add_option("--q", st.q);
    c_st->add_option("--r-um", st.r_um);
    c_st->add_option("--v0", st.v0);
    c_st->add_option("--vdc", st.vdc);
    c_st->add_option("--rf-mhz", st.rf_mhz);
    c_st->add_option("--species", st.species)->capture_default_str();
    c_st->add_option("--steps", st.steps, "RK4 steps per RF period")->capture_default_str();
    c_st->callback([&] { action = [&] { return do_stability(st, g); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what()).dump() << "\n";
        return kValidation;
    }

    if (app.get_option("--format")->count() == 0) g.format = default_format;
    try {
        if (!action) throw ValidationError("no command selected");
        write_output(action(), g, out);
        return kOk;
    } catch (const ValidationError& e) {
        err << error_json("validation", e.what()).dump() << "\n";
        return kValidation;
    } catch (const DomainError& e) {
        err << error_json("domain", e.what()).dump() << "\n";
        return kValidation;
    } catch (const ConvergenceError& e) {
        Json j = error_json("convergence", e.what());
        j["error"]["residual"] = e.residual();
        j["error"]["last_iterate"] = e.last_iterate();
        err << j.dump() << "\n";
        return kConvergence;
    } catch (const NotConfiningError& e) {
        Json j = error_json("not_confining", e.what());
        j["error"]["eigenvalues"] = e.eigenvalues();
        err << j.dump() << "\n";
        return kConvergence;
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()).dump() << "\n";
        return kFailure;
    }
}

}  // namespace paultrap::cli
