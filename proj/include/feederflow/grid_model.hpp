#pragma once

// Feeder topology, devices, per-unit conversion and coarse-grained power
// densities.
//
// Positions are tree arc-length from the bank [km]. A segment covers
// [start, start + length]; a child segment starts where its parent ends.
// All powers are per-unit on a single system-wide base.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace feederflow {

struct PerUnitBase {
  double base_power = 0.0;    // [VA]
  double base_voltage = 0.0;  // line voltage [V]

  // Throws DomainError unless both values are positive and finite.
  static PerUnitBase make(double power_va, double voltage_v);

  // [Ohm]
  double base_impedance() const { return base_voltage * base_voltage / base_power; }
};

// Per-unit-length conductance and susceptance of a conductor [pu/km].
struct LineAdmittance {
  double g = 0.0;
  double b = 0.0;

  double z2() const { return g * g + b * b; }
};

// Series impedance [Ohm/km] -> per-unit admittance [pu/km].
// Throws DomainError("degenerate conductor") when R = X = 0.
LineAdmittance to_per_unit(double r_ohm_per_km, double x_ohm_per_km, const PerUnitBase& base);

struct FeederSegment {
  std::string id;
  double length = 0.0;  // [km]
  LineAdmittance line;
  std::string parent;            // empty: attached to the bank
  std::optional<double> offset;  // declared start distance from the bank, checked if present
};

enum class DeviceKind { load, station };

struct Device {
  std::string id;
  DeviceKind kind = DeviceKind::load;
  std::string segment;
  double xi = 0.0;  // distance from the bank [km]
  double p = 0.0;   // load active power [pu], <= 0
  double q = 0.0;   // load reactive power [pu]
  double p_min = 0.0;  // station raw bounds [pu]
  double p_max = 0.0;

  static Device load(std::string segment, double xi, double p, double q = 0.0, std::string id = {});
  static Device station(std::string segment, double xi, double p_min, double p_max, std::string id = {});
};

struct GridTree {
  PerUnitBase base{12e6, 6.6e3};
  std::vector<FeederSegment> segments;
  std::vector<Device> devices;
};

struct Violation {
  std::string code;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view code) const;
};

ValidationReport validate_grid(const GridTree& grid);

// Read-only index over a validated grid. Construction throws DomainError
// listing every violation when the grid does not validate. Devices with an
// empty id get "L<n>" / "S<n>" in declaration order.
class IndexedGrid {
 public:
  explicit IndexedGrid(GridTree grid);

  const GridTree& grid() const { return grid_; }
  std::size_t segment_count() const { return grid_.segments.size(); }
  const FeederSegment& segment(std::size_t i) const { return grid_.segments[i]; }
  const Device& device(std::size_t i) const { return grid_.devices[i]; }

  double start(std::size_t seg) const { return start_[seg]; }
  double end(std::size_t seg) const { return start_[seg] + grid_.segments[seg].length; }
  std::optional<std::size_t> parent(std::size_t seg) const;
  const std::vector<std::size_t>& children(std::size_t seg) const { return children_[seg]; }
  bool is_terminal(std::size_t seg) const { return children_[seg].empty(); }
  // Parents before children; siblings in declaration order.
  const std::vector<std::size_t>& topo_order() const { return topo_; }
  // Device indices on a segment, farthest from the bank first.
  const std::vector<std::size_t>& devices_on(std::size_t seg) const { return on_segment_[seg]; }
  std::size_t device_segment(std::size_t dev) const { return device_segment_[dev]; }

  std::size_t find_segment(std::string_view id) const;
  bool is_single_feeder() const { return grid_.segments.size() == 1; }

 private:
  GridTree grid_;
  std::vector<double> start_;
  std::vector<std::ptrdiff_t> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> topo_;
  std::vector<std::vector<std::size_t>> on_segment_;
  std::vector<std::size_t> device_segment_;
};

// Uniform nodes x_k = start + length * k / intervals on one segment.
struct SegmentMesh {
  double start = 0.0;
  double length = 0.0;
  std::size_t intervals = 0;

  std::size_t nodes() const { return intervals + 1; }
  double step() const { return length / static_cast<double>(intervals); }
  double x(std::size_t k) const {
    return start + length * static_cast<double>(k) / static_cast<double>(intervals);
  }
};

struct Mesh {
  std::vector<SegmentMesh> segments;
};

// step_km <= 0 selects length/2000 per segment; otherwise each segment uses
// ceil(length/step_km) intervals.
Mesh build_mesh(const IndexedGrid& grid, double step_km = 0.0);

// A point injection (delta source) of active/reactive power [pu].
struct PointSource {
  std::size_t segment = 0;
  double xi = 0.0;
  double p = 0.0;
  double q = 0.0;
};

struct DensityField {
  Mesh mesh;
  double sigma = 0.0;
  std::vector<std::vector<double>> p;  // [pu/km] per segment, per node
  std::vector<std::vector<double>> q;
  std::vector<std::string> warnings;
};

// Kernel truncation radius in units of sigma.
inline constexpr double kKernelCutoff = 6.0;

// Gaussian coarse-graining of point sources, sampled on the mesh. Each
// kernel lives on its own segment, is truncated at +-6 sigma and rescaled so
// its trapezoidal mass equals the source power exactly.
DensityField power_density(const IndexedGrid& grid, std::span<const PointSource> sources,
                           double sigma, const Mesh& mesh);

// Untruncated Gaussian sum at x on one segment [pu/km] (active part).
double gaussian_density(std::span<const PointSource> sources, std::size_t segment, double x,
                        double sigma);

// Loads only (stations contribute nothing).
std::vector<PointSource> load_sources(const IndexedGrid& grid);

}  // namespace feederflow
