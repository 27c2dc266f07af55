#pragma once

#include <json.hpp>
#include <string>

#include "paultrap/fields.hpp"

namespace paultrap::io {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "paultrap-kit/1";

/// Reads and parses a JSON file; failures name the path.
Json load_json_file(const std::string& path);

/// Rejects documents whose "schema" field is present and differs from kSchema.
void check_schema(const Json& doc, const std::string& source);

/// Geometry document: length_unit ("um" or "m"), electrodes [{label, role, rects:[[x1,y1,x2,y2]]}],
/// drive {freq_mhz, v_rf, phase_deg}, dc_voltages {label: V}.
fields::PlanarTrapModel parse_geometry(const Json& doc);

/// A species label ("24Mg+") or an object {mass_amu, charge_e, label}.
IonSpecies parse_species(const Json& value);

/// Comma-separated triple, e.g. "0,0,70".
std::array<double, 3> parse_triple(const std::string& text);

/// Typed field access with validation errors naming the key.
double get_number(const Json& obj, const std::string& key);
double get_number_or(const Json& obj, const std::string& key, double fallback);

}  // namespace paultrap::io
