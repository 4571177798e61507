#pragma once

// Grid description files (JSON).
//
//   {
//     "description": "free text",
//     "base":    {"power_VA": 12e6, "voltage_V": 6600},
//     "segment": [{"id": "main", "length_km": 5.0,
//                  "r_ohm_per_km": 0.227, "x_ohm_per_km": 0.401,   // or g_pu_per_km, b_pu_per_km
//                  "parent": null, "offset_km": 0.0}],
//     "device":  [{"kind": "load", "segment": "main", "xi_km": 0.5, "p_pu": -0.06, "q_pu": 0.0},
//                 {"kind": "station", "id": "St1", "segment": "main", "xi_km": 1.0,
//                  "p_min_pu": -0.0333, "p_max_pu": 0.0333}]
//   }
//
// Loads may give "p_W" instead of "p_pu". "parent" and "offset_km" are
// optional; offset_km is the distance of the segment start from the bank.

#include <filesystem>
#include <string_view>

#include "feederflow/grid_model.hpp"

namespace feederflow {

// Throws ParseError on malformed JSON, unknown keys or missing/mistyped
// fields; DomainError on values that cannot be converted (bad base, degenerate
// conductor). Topology is not validated here.
GridTree parse_grid(std::string_view json_text);
GridTree read_grid_file(const std::filesystem::path& path);

}  // namespace feederflow
