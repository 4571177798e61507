#pragma once

// Scenario execution behind the feederflow CLI: dispatch, densities, solve,
// metrics and CSV/JSON emission.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "feederflow/grid_model.hpp"
#include "feederflow/ode_solver.hpp"
#include "feederflow/synthesis.hpp"

namespace feederflow {

enum class DispatchMode { literal, principle, uniform };

DispatchMode parse_mode(std::string_view name);  // DomainError on unknown names
std::string_view mode_name(DispatchMode mode);

struct ScenarioConfig {
  std::filesystem::path grid_path;
  std::optional<double> p_ref_pu;  // unset: 0 for run/compare, idle stations for xcheck
  std::optional<double> p_ref_w;   // converted with the grid's base power
  DispatchMode mode = DispatchMode::literal;
  double sigma = 0.05;  // [km]
  SolverSettings solver;
  std::filesystem::path out_dir;
};

struct MetricsReport {
  double max_deviation = 0.0;  // max |v - 1|
  double l2_deviation = 0.0;   // integral of (v - 1)^2 over the tree
  double min_terminal_voltage = 1.0;
  double total_p = 0.0;
  double leftover_p = 0.0;
  std::vector<std::pair<std::string, double>> terminal_voltages;  // per open end
  std::vector<std::pair<std::string, double>> w_flatness;         // integral of w^2 per segment
};

// Trapezoidal quadrature on the profile samples.
MetricsReport compute_metrics(const IndexedGrid& grid, const VoltageProfile& profile,
                              double total_p, double leftover_p);

struct RunResult {
  DispatchPlan plan;
  VoltageProfile profile;
  MetricsReport metrics;
  std::vector<std::string> warnings;
};

double resolve_p_ref(const ScenarioConfig& config, const GridTree& grid);

// Dispatch for the configured mode: uniform baseline, or synthesis (single
// feeder or tree).
DispatchPlan make_plan(const IndexedGrid& grid, double p_ref, DispatchMode mode);

RunResult run_scenario(const IndexedGrid& grid, double p_ref, DispatchMode mode, double sigma,
                       const SolverSettings& solver);

struct CompareResult {
  RunResult synthesized;
  RunResult uniform;
  double max_deviation_reduction_pct = 0.0;
  double l2_deviation_reduction_pct = 0.0;
};

// synthesized_mode must be literal or principle. The two solves run concurrently.
CompareResult compare_scenario(const IndexedGrid& grid, double p_ref, DispatchMode synthesized_mode,
                               double sigma, const SolverSettings& solver);

inline constexpr double kAnalyticGapLimit = 5e-4;
inline constexpr double kNonlinearGapLimit = 1e-3;

struct XcheckReport {
  double analytic_vs_linearized = 0.0;
  double linearized_vs_nonlinear = 0.0;
  double exclusion_radius = 0.0;  // points within this distance of an injection are skipped
  std::size_t points_compared = 0;
  bool analytic_exceeds = false;
  bool nonlinear_exceeds = false;
};

// Single feeder only (DomainError "analytic path requires single feeder").
XcheckReport cross_check(const IndexedGrid& grid, std::span<const PointSource> sources, double sigma,
                         const SolverSettings& solver);

// 12 significant digits, '.' decimal separator, '\n' line ends.
std::string format_number(double value);
void write_dispatch_csv(std::ostream& out, const DispatchPlan& plan);
void write_profile_csv(std::ostream& out, const VoltageProfile& profile);
std::string metrics_json(const MetricsReport& metrics, const SolveDiagnostics& diagnostics);
std::string compare_json(const CompareResult& result);
std::string xcheck_json(const XcheckReport& report);

// Writes dispatch.csv, profile.csv and metrics.json into dir (created if needed).
void emit_run(const RunResult& result, const std::filesystem::path& dir);

// Reads a profile CSV back (for metrics recomputation).
VoltageProfile read_profile_csv(std::istream& in);

}  // namespace feederflow
