#include "feederflow/grid_io.hpp"

#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>

#include "feederflow/errors.hpp"

namespace feederflow {

namespace {

using nlohmann::json;

void allow_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) throw ParseError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = key == "comment";
    for (auto k : keys) known = known || key == k;
    if (!known) throw ParseError(std::string(where) + ": unknown key '" + key + "'");
  }
}

double number(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string(where) + ": missing '" + key + "'");
  if (!it->is_number()) throw ParseError(std::string(where) + ": '" + key + "' must be a number");
  return it->get<double>();
}

std::string text(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string(where) + ": missing '" + key + "'");
  if (!it->is_string()) throw ParseError(std::string(where) + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

FeederSegment parse_segment(const json& j, const PerUnitBase& base, std::size_t n) {
  const std::string where = "segment #" + std::to_string(n);
  allow_keys(j, where, {"id", "length_km", "r_ohm_per_km", "x_ohm_per_km", "g_pu_per_km", "b_pu_per_km",
                        "parent", "offset_km"});
  FeederSegment seg;
  seg.id = text(j, "id", where);
  seg.length = number(j, "length_km", where);

  const bool physical = j.contains("r_ohm_per_km") || j.contains("x_ohm_per_km");
  const bool per_unit = j.contains("g_pu_per_km") || j.contains("b_pu_per_km");
  if (physical == per_unit) {
    throw ParseError(where + ": give either r_ohm_per_km/x_ohm_per_km or g_pu_per_km/b_pu_per_km");
  }
  if (physical) {
    seg.line = to_per_unit(number(j, "r_ohm_per_km", where), number(j, "x_ohm_per_km", where), base);
  } else {
    seg.line = LineAdmittance{number(j, "g_pu_per_km", where), number(j, "b_pu_per_km", where)};
  }

  if (auto it = j.find("parent"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError(where + ": 'parent' must be a string or null");
    seg.parent = it->get<std::string>();
  }
  if (j.contains("offset_km")) seg.offset = number(j, "offset_km", where);
  return seg;
}

Device parse_device(const json& j, const PerUnitBase& base, std::size_t n) {
  const std::string where = "device #" + std::to_string(n);
  const std::string kind = text(j, "kind", where);
  Device d;
  if (kind == "load") {
    allow_keys(j, where, {"kind", "id", "segment", "xi_km", "p_pu", "p_W", "q_pu"});
    d.kind = DeviceKind::load;
    const bool pu = j.contains("p_pu");
    if (pu == j.contains("p_W")) throw ParseError(where + ": give exactly one of p_pu, p_W");
    d.p = pu ? number(j, "p_pu", where) : number(j, "p_W", where) / base.base_power;
    if (j.contains("q_pu")) d.q = number(j, "q_pu", where);
  } else if (kind == "station") {
    allow_keys(j, where, {"kind", "id", "segment", "xi_km", "p_min_pu", "p_max_pu"});
    d.kind = DeviceKind::station;
    d.p_min = number(j, "p_min_pu", where);
    d.p_max = number(j, "p_max_pu", where);
  } else {
    throw ParseError(where + ": kind must be 'load' or 'station'");
  }
  if (j.contains("id")) d.id = text(j, "id", where);
  d.segment = text(j, "segment", where);
  d.xi = number(j, "xi_km", where);
  return d;
}

}  // namespace

GridTree parse_grid(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed grid file: ") + e.what());
  }
  allow_keys(doc, "grid", {"description", "base", "segment", "device"});

  GridTree grid;
  if (!doc.contains("base")) throw ParseError("grid: missing 'base'");
  const auto& b = doc["base"];
  allow_keys(b, "base", {"power_VA", "voltage_V"});
  grid.base = PerUnitBase::make(number(b, "power_VA", "base"), number(b, "voltage_V", "base"));

  auto array = [&](const char* key) -> const json& {
    static const json empty = json::array();
    if (!doc.contains(key)) return empty;
    if (!doc[key].is_array()) throw ParseError(std::string("grid: '") + key + "' must be an array");
    return doc[key];
  };
  std::size_t n = 0;
  for (const auto& s : array("segment")) grid.segments.push_back(parse_segment(s, grid.base, ++n));
  n = 0;
  for (const auto& d : array("device")) grid.devices.push_back(parse_device(d, grid.base, ++n));
  return grid;
}

GridTree read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open grid file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid(buf.str());
}

}  // namespace feederflow
