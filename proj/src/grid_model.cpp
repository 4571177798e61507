#include "feederflow/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include "feederflow/errors.hpp"

namespace feederflow {

namespace {

constexpr double kOffsetTolerance = 1e-9;
constexpr double kPositionTolerance = 1e-12;

bool finite_all(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::string fmt_km(double x) {
  std::ostringstream os;
  os << x << " km";
  return os.str();
}

}  // namespace

PerUnitBase PerUnitBase::make(double power_va, double voltage_v) {
  if (!(power_va > 0.0) || !(voltage_v > 0.0) || !std::isfinite(power_va) ||
      !std::isfinite(voltage_v)) {
    throw DomainError("per-unit base requires positive power and voltage");
  }
  return PerUnitBase{power_va, voltage_v};
}

LineAdmittance to_per_unit(double r_ohm_per_km, double x_ohm_per_km, const PerUnitBase& base) {
  if (r_ohm_per_km < 0.0 || x_ohm_per_km < 0.0) {
    throw DomainError("conductor resistance and reactance must be non-negative");
  }
  const double z2 = r_ohm_per_km * r_ohm_per_km + x_ohm_per_km * x_ohm_per_km;
  if (!(z2 > 0.0)) throw DomainError("degenerate conductor");
  const double zb = base.base_impedance();
  return LineAdmittance{r_ohm_per_km / z2 * zb, x_ohm_per_km / z2 * zb};
}

Device Device::load(std::string segment, double xi, double p, double q, std::string id) {
  Device d;
  d.id = std::move(id);
  d.kind = DeviceKind::load;
  d.segment = std::move(segment);
  d.xi = xi;
  d.p = p;
  d.q = q;
  return d;
}

Device Device::station(std::string segment, double xi, double p_min, double p_max, std::string id) {
  Device d;
  d.id = std::move(id);
  d.kind = DeviceKind::station;
  d.segment = std::move(segment);
  d.xi = xi;
  d.p_min = p_min;
  d.p_max = p_max;
  return d;
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

ValidationReport validate_grid(const GridTree& grid) {
  ValidationReport report;
  auto flag = [&](std::string code, std::string detail) {
    report.violations.push_back({std::move(code), std::move(detail)});
  };

  const auto& segs = grid.segments;
  if (segs.empty()) flag("empty grid", "no feeder segments");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    if (s.id.empty()) flag("missing id", "segment #" + std::to_string(i + 1) + " has no id");
    if (!index.emplace(s.id, i).second) flag("duplicate id", "segment '" + s.id + "'");
    if (!finite_all({s.length, s.line.g, s.line.b})) {
      flag("non-finite value", "segment '" + s.id + "'");
      continue;
    }
    if (!(s.length > 0.0)) flag("non-positive length", "segment '" + s.id + "' length " + fmt_km(s.length));
    if (!(s.line.g > 0.0) || !(s.line.b > 0.0)) {
      flag("non-positive admittance", "segment '" + s.id + "' needs G > 0 and B > 0");
    }
  }

  // Parent links: every chain must reach the bank without revisiting.
  std::vector<std::ptrdiff_t> parent(segs.size(), -1);
  bool linked = true;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].parent.empty()) continue;
    auto it = index.find(segs[i].parent);
    if (it == index.end()) {
      flag("unknown parent", "segment '" + segs[i].id + "' refers to '" + segs[i].parent + "'");
      linked = false;
    } else {
      parent[i] = static_cast<std::ptrdiff_t>(it->second);
    }
  }
  bool tree = linked;
  if (linked) {
    for (std::size_t i = 0; i < segs.size(); ++i) {
      std::size_t steps = 0;
      std::ptrdiff_t cur = static_cast<std::ptrdiff_t>(i);
      while (cur >= 0 && steps <= segs.size()) {
        cur = parent[static_cast<std::size_t>(cur)];
        ++steps;
      }
      if (cur >= 0) {
        flag("not a tree", "segment '" + segs[i].id + "' lies on a cycle");
        tree = false;
        break;
      }
    }
  }
  if (!segs.empty() && tree &&
      std::none_of(parent.begin(), parent.end(), [](std::ptrdiff_t p) { return p < 0; })) {
    flag("not a tree", "no segment is attached to the bank");
    tree = false;
  }

  std::vector<double> start(segs.size(), 0.0);
  if (tree) {
    // Resolve starts by walking up; depth is bounded by the segment count.
    for (std::size_t i = 0; i < segs.size(); ++i) {
      double acc = 0.0;
      for (auto cur = parent[i]; cur >= 0; cur = parent[static_cast<std::size_t>(cur)]) {
        acc += segs[static_cast<std::size_t>(cur)].length;
      }
      start[i] = acc;
      if (segs[i].offset && std::abs(*segs[i].offset - acc) > kOffsetTolerance) {
        flag("attachment offset mismatch", "segment '" + segs[i].id + "' declares start " +
                                               fmt_km(*segs[i].offset) + ", parent ends at " +
                                               fmt_km(acc));
      }
    }
  }

  std::set<std::string> device_ids;
  std::vector<std::vector<double>> positions(segs.size());
  for (std::size_t k = 0; k < grid.devices.size(); ++k) {
    const auto& d = grid.devices[k];
    const std::string name = d.id.empty() ? "device #" + std::to_string(k + 1) : "device '" + d.id + "'";
    if (!d.id.empty() && !device_ids.insert(d.id).second) flag("duplicate id", name);
    if (!finite_all({d.xi, d.p, d.q, d.p_min, d.p_max})) {
      flag("non-finite value", name);
      continue;
    }
    if (d.kind == DeviceKind::load && d.p > 0.0) {
      flag("load active power positive", name + " has P = " + std::to_string(d.p));
    }
    if (d.kind == DeviceKind::station && (d.p_min > 0.0 || d.p_max < 0.0)) {
      flag("station bounds do not straddle zero", name);
    }
    if (d.xi <= 0.0) {
      flag("device at bank", name + " at " + fmt_km(d.xi));
      continue;
    }
    auto it = index.find(d.segment);
    if (it == index.end()) {
      flag("unknown segment", name + " refers to '" + d.segment + "'");
      continue;
    }
    if (!tree) continue;
    const std::size_t s = it->second;
    const double lo = start[s];
    const double hi = start[s] + segs[s].length;
    if (d.xi <= lo || d.xi >= hi) {
      flag("device at endpoint", name + " at " + fmt_km(d.xi) + " outside open interval (" +
                                     fmt_km(lo) + ", " + fmt_km(hi) + ")");
      continue;
    }
    for (double other : positions[s]) {
      if (std::abs(other - d.xi) <= kPositionTolerance) {
        flag("overlapping device positions", name + " at " + fmt_km(d.xi));
        break;
      }
    }
    positions[s].push_back(d.xi);
  }
  return report;
}

IndexedGrid::IndexedGrid(GridTree grid) : grid_(std::move(grid)) {
  const auto report = validate_grid(grid_);
  if (!report.ok()) {
    std::string msg = "invalid grid:";
    for (const auto& v : report.violations) msg += "\n  " + v.code + ": " + v.detail;
    throw DomainError(msg);
  }

  std::size_t n_load = 0;
  std::size_t n_station = 0;
  for (auto& d : grid_.devices) {
    const bool is_load = d.kind == DeviceKind::load;
    const std::size_t ordinal = is_load ? ++n_load : ++n_station;
    if (d.id.empty()) d.id = (is_load ? "L" : "S") + std::to_string(ordinal);
  }

  const std::size_t n = grid_.segments.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(grid_.segments[i].id, i);

  parent_.assign(n, -1);
  children_.assign(n, {});
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = grid_.segments[i].parent;
    if (p.empty()) {
      roots.push_back(i);
    } else {
      const std::size_t pi = index.at(p);
      parent_[i] = static_cast<std::ptrdiff_t>(pi);
      children_[pi].push_back(i);
    }
  }

  start_.assign(n, 0.0);
  topo_.clear();
  std::vector<std::size_t> stack(roots.rbegin(), roots.rend());
  while (!stack.empty()) {
    const std::size_t s = stack.back();
    stack.pop_back();
    topo_.push_back(s);
    for (auto it = children_[s].rbegin(); it != children_[s].rend(); ++it) {
      start_[*it] = start_[s] + grid_.segments[s].length;
      stack.push_back(*it);
    }
  }

  on_segment_.assign(n, {});
  device_segment_.resize(grid_.devices.size());
  for (std::size_t k = 0; k < grid_.devices.size(); ++k) {
    const std::size_t s = index.at(grid_.devices[k].segment);
    device_segment_[k] = s;
    on_segment_[s].push_back(k);
  }
  for (auto& list : on_segment_) {
    std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return grid_.devices[a].xi > grid_.devices[b].xi;
    });
  }
}

std::optional<std::size_t> IndexedGrid::parent(std::size_t seg) const {
  if (parent_[seg] < 0) return std::nullopt;
  return static_cast<std::size_t>(parent_[seg]);
}

std::size_t IndexedGrid::find_segment(std::string_view id) const {
  for (std::size_t i = 0; i < grid_.segments.size(); ++i) {
    if (grid_.segments[i].id == id) return i;
  }
  throw DomainError("unknown segment '" + std::string(id) + "'");
}

Mesh build_mesh(const IndexedGrid& grid, double step_km) {
  Mesh mesh;
  mesh.segments.reserve(grid.segment_count());
  for (std::size_t s = 0; s < grid.segment_count(); ++s) {
    const double length = grid.segment(s).length;
    std::size_t intervals = 2000;
    if (step_km > 0.0) {
      intervals = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / step_km - 1e-12)));
    }
    mesh.segments.push_back(SegmentMesh{grid.start(s), length, intervals});
  }
  return mesh;
}

namespace {

double gaussian(double dx, double sigma) {
  return std::exp(-dx * dx / (2.0 * sigma * sigma)) / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
}

}  // namespace

DensityField power_density(const IndexedGrid& grid, std::span<const PointSource> sources,
                           double sigma, const Mesh& mesh) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
  if (mesh.segments.size() != grid.segment_count()) throw DomainError("mesh does not match grid");

  DensityField field;
  field.mesh = mesh;
  field.sigma = sigma;
  field.p.resize(mesh.segments.size());
  field.q.resize(mesh.segments.size());
  for (std::size_t s = 0; s < mesh.segments.size(); ++s) {
    field.p[s].assign(mesh.segments[s].nodes(), 0.0);
    field.q[s].assign(mesh.segments[s].nodes(), 0.0);
  }

  const double reach = kKernelCutoff * sigma;
  std::vector<double> kernel;
  bool clipped = false;
  for (const auto& src : sources) {
    if (src.segment >= mesh.segments.size()) throw DomainError("point source on unknown segment");
    const auto& m = mesh.segments[src.segment];
    const double h = m.step();
    const double lo = src.xi - reach;
    const double hi = src.xi + reach;
    if (lo < m.start || hi > m.start + m.length) clipped = true;

    const auto k0 = static_cast<std::size_t>(std::max(0.0, std::ceil((lo - m.start) / h - 1e-9)));
    const auto k1 = std::min(m.intervals, static_cast<std::size_t>(std::max(0.0, std::floor((hi - m.start) / h + 1e-9))));
    if (k0 > k1) continue;

    kernel.assign(k1 - k0 + 1, 0.0);
    double mass = 0.0;
    for (std::size_t k = k0; k <= k1; ++k) {
      const double val = gaussian(m.x(k) - src.xi, sigma);
      kernel[k - k0] = val;
      const bool edge = (k == 0 || k == m.intervals);  // trapezoid weights of the segment mesh
      mass += (edge ? 0.5 : 1.0) * val * h;
    }
    if (!(mass > 0.0)) continue;
    const double scale = 1.0 / mass;
    for (std::size_t k = k0; k <= k1; ++k) {
      field.p[src.segment][k] += src.p * kernel[k - k0] * scale;
      field.q[src.segment][k] += src.q * kernel[k - k0] * scale;
    }
  }

  // Minimum spacing between sources sharing a segment.
  double min_gap = INFINITY;
  for (std::size_t s = 0; s < mesh.segments.size(); ++s) {
    std::vector<double> xs;
    for (const auto& src : sources) {
      if (src.segment == s) xs.push_back(src.xi);
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) min_gap = std::min(min_gap, xs[i] - xs[i - 1]);
  }
  if (sigma > 0.5 * min_gap) field.warnings.emplace_back("overlapping kernels");
  if (clipped) field.warnings.emplace_back("kernel clipped at segment boundary");
  return field;
}

double gaussian_density(std::span<const PointSource> sources, std::size_t segment, double x,
                        double sigma) {
  double acc = 0.0;
  for (const auto& src : sources) {
    if (src.segment == segment) acc += src.p * gaussian(x - src.xi, sigma);
  }
  return acc;
}

std::vector<PointSource> load_sources(const IndexedGrid& grid) {
  std::vector<PointSource> out;
  for (std::size_t k = 0; k < grid.grid().devices.size(); ++k) {
    const auto& d = grid.device(k);
    if (d.kind == DeviceKind::load) out.push_back({grid.device_segment(k), d.xi, d.p, d.q});
  }
  return out;
}

}  // namespace feederflow
