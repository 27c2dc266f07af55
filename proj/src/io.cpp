#include "paultrap/io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace paultrap::io {

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(fmt::format("cannot open file '{}'", path));
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
    }
}

void check_schema(const Json& doc, const std::string& source) {
    if (!doc.is_object()) throw ValidationError(fmt::format("{}: expected a JSON object", source));
    if (doc.contains("schema") && doc["schema"] != kSchema)
        throw ValidationError(fmt::format("{}: unsupported schema {} (expected \"{}\")", source, doc["schema"].dump(),
                                          kSchema));
}

double get_number(const Json& obj, const std::string& key) {
    if (!obj.is_object() || !obj.contains(key)) throw ValidationError(fmt::format("missing field '{}'", key));
    const auto& v = obj[key];
    if (!v.is_number()) throw ValidationError(fmt::format("field '{}' must be a number", key));
    return v.get<double>();
}

double get_number_or(const Json& obj, const std::string& key, double fallback) {
    return obj.is_object() && obj.contains(key) ? get_number(obj, key) : fallback;
}

IonSpecies parse_species(const Json& value) {
    if (value.is_string()) return species_by_label(value.get<std::string>());
    if (value.is_object()) {
        const double mass = get_number(value, "mass_amu");
        const double charge = get_number_or(value, "charge_e", 1.0);
        if (charge != std::round(charge)) throw ValidationError("charge_e must be an integer");
        const std::string label = value.value("label", std::string("ion"));
        return make_species(mass, static_cast<int>(charge), label);
    }
    throw ValidationError("species must be a label or an object with mass_amu");
}

fields::PlanarTrapModel parse_geometry(const Json& doc) {
    check_schema(doc, "geometry");
    const std::string unit = doc.value("length_unit", std::string("um"));
    double scale = 0.0;
    if (unit == "um") scale = 1e-6;
    else if (unit == "m") scale = 1.0;
    else throw ValidationError(fmt::format("unsupported length_unit '{}'", unit));

    if (!doc.contains("electrodes") || !doc["electrodes"].is_array())
        throw ValidationError("geometry needs an 'electrodes' array");
    std::vector<fields::PlanarElectrode> electrodes;
    for (const auto& e : doc["electrodes"]) {
        fields::PlanarElectrode pe;
        if (!e.contains("label") || !e["label"].is_string()) throw ValidationError("electrode without a label");
        pe.label = e["label"].get<std::string>();
        const std::string role = e.value("role", std::string("dc"));
        if (role == "rf" || role == "RF") pe.role = fields::ElectrodeRole::RF;
        else if (role == "dc" || role == "DC") pe.role = fields::ElectrodeRole::DC;
        else throw ValidationError(fmt::format("electrode '{}': unknown role '{}'", pe.label, role));
        if (!e.contains("rects") || !e["rects"].is_array())
            throw ValidationError(fmt::format("electrode '{}' needs a 'rects' array", pe.label));
        for (const auto& r : e["rects"]) {
            if (!r.is_array() || r.size() != 4)
                throw ValidationError(fmt::format("electrode '{}': rect must be [x1, y1, x2, y2]", pe.label));
            for (const auto& c : r)
                if (!c.is_number()) throw ValidationError(fmt::format("electrode '{}': non-numeric rect", pe.label));
            pe.rects.emplace_back(scale * r[0].get<double>(), scale * r[2].get<double>(), scale * r[1].get<double>(),
                                  scale * r[3].get<double>());
        }
        electrodes.push_back(std::move(pe));
    }

    if (!doc.contains("drive")) throw ValidationError("geometry needs a 'drive' object");
    const auto& d = doc["drive"];
    const RfDrive drive(units::mhz_to_rad_s(get_number(d, "freq_mhz")), get_number(d, "v_rf"),
                        get_number_or(d, "phase_deg", 0.0));

    std::map<std::string, double> dc;
    if (doc.contains("dc_voltages")) {
        if (!doc["dc_voltages"].is_object()) throw ValidationError("'dc_voltages' must be an object");
        for (const auto& [label, v] : doc["dc_voltages"].items()) {
            if (!v.is_number()) throw ValidationError(fmt::format("dc voltage for '{}' must be a number", label));
            dc[label] = v.get<double>();
        }
    }
    return fields::PlanarTrapModel(std::move(electrodes), drive, std::move(dc));
}

std::array<double, 3> parse_triple(const std::string& text) {
    std::array<double, 3> out{};
    std::stringstream ss(text);
    std::string item;
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
        if (i >= 3) throw ValidationError(fmt::format("expected three comma-separated numbers, got '{}'", text));
        try {
            std::size_t used = 0;
            out[i] = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(fmt::format("'{}' is not a number", item));
        }
        ++i;
    }
    if (i != 3) throw ValidationError(fmt::format("expected three comma-separated numbers, got '{}'", text));
    return out;
}

}  // namespace paultrap::io
