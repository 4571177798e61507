#include "feederflow/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "feederflow/analytic.hpp"
#include "feederflow/errors.hpp"

namespace feederflow {

namespace {

using ordered_json = nlohmann::ordered_json;

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) acc += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
  return acc;
}

ordered_json metrics_object(const MetricsReport& m) {
  ordered_json j;
  j["max_deviation_pu"] = m.max_deviation;
  j["l2_deviation"] = m.l2_deviation;
  j["min_terminal_voltage_pu"] = m.min_terminal_voltage;
  j["total_p_pu"] = m.total_p;
  j["leftover_p_pu"] = m.leftover_p;
  ordered_json terminals = ordered_json::object();
  for (const auto& [id, v] : m.terminal_voltages) terminals[id] = v;
  j["terminal_voltage_pu"] = terminals;
  ordered_json flat = ordered_json::object();
  for (const auto& [id, v] : m.w_flatness) flat[id] = v;
  j["w_flatness"] = flat;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace

DispatchMode parse_mode(std::string_view name) {
  if (name == "literal") return DispatchMode::literal;
  if (name == "principle") return DispatchMode::principle;
  if (name == "uniform") return DispatchMode::uniform;
  throw DomainError("unknown mode '" + std::string(name) + "'");
}

std::string_view mode_name(DispatchMode mode) {
  switch (mode) {
    case DispatchMode::literal: return "literal";
    case DispatchMode::principle: return "principle";
    case DispatchMode::uniform: return "uniform";
  }
  return "literal";
}

MetricsReport compute_metrics(const IndexedGrid& grid, const VoltageProfile& profile, double total_p,
                              double leftover_p) {
  if (profile.segments.size() != grid.segment_count()) throw DomainError("profile does not match grid");
  MetricsReport m;
  m.total_p = total_p;
  m.leftover_p = leftover_p;
  m.min_terminal_voltage = INFINITY;
  std::vector<double> dev2;
  std::vector<double> w2;
  for (std::size_t s = 0; s < grid.segment_count(); ++s) {
    const auto& seg = profile.segments[s];
    dev2.resize(seg.v.size());
    w2.resize(seg.w.size());
    for (std::size_t k = 0; k < seg.v.size(); ++k) {
      const double d = seg.v[k] - 1.0;
      m.max_deviation = std::max(m.max_deviation, std::abs(d));
      dev2[k] = d * d;
      w2[k] = seg.w[k] * seg.w[k];
    }
    m.l2_deviation += trapezoid(seg.x, dev2);
    m.w_flatness.emplace_back(seg.segment_id, trapezoid(seg.x, w2));
    if (grid.is_terminal(s)) {
      m.terminal_voltages.emplace_back(seg.segment_id, seg.v.back());
      m.min_terminal_voltage = std::min(m.min_terminal_voltage, seg.v.back());
    }
  }
  return m;
}

double resolve_p_ref(const ScenarioConfig& config, const GridTree& grid) {
  if (config.p_ref_pu && config.p_ref_w) throw DomainError("give the request in pu or in W, not both");
  double p = 0.0;
  if (config.p_ref_pu) p = *config.p_ref_pu;
  if (config.p_ref_w) p = *config.p_ref_w / grid.base.base_power;
  if (!std::isfinite(p)) throw DomainError("regulation request must be finite");
  return p;
}

DispatchPlan make_plan(const IndexedGrid& grid, double p_ref, DispatchMode mode) {
  const RegulationRequest request{p_ref};
  switch (mode) {
    case DispatchMode::uniform:
      return uniform_baseline(grid, request);
    case DispatchMode::literal:
    case DispatchMode::principle: {
      const auto smode = mode == DispatchMode::literal ? SynthesisMode::literal : SynthesisMode::principle;
      return grid.is_single_feeder() ? synthesize(grid, request, smode) : synthesize_tree(grid, request, smode);
    }
  }
  throw DomainError("unknown mode");
}

RunResult run_scenario(const IndexedGrid& grid, double p_ref, DispatchMode mode, double sigma,
                       const SolverSettings& solver) {
  RunResult r;
  r.plan = make_plan(grid, p_ref, mode);
  const Mesh mesh = build_mesh(grid, solver.step_km);
  const auto sources = plan_sources(grid, r.plan);
  const DensityField densities = power_density(grid, sources, sigma, mesh);
  r.warnings = densities.warnings;
  r.profile = solve_nonlinear(grid, densities, solver);
  r.metrics = compute_metrics(grid, r.profile, r.plan.total_p(), r.plan.leftover_p);
  return r;
}

CompareResult compare_scenario(const IndexedGrid& grid, double p_ref, DispatchMode synthesized_mode,
                               double sigma, const SolverSettings& solver) {
  if (synthesized_mode == DispatchMode::uniform) {
    throw DomainError("compare needs a synthesis mode (literal or principle)");
  }
  const auto& devices = grid.grid().devices;
  if (std::none_of(devices.begin(), devices.end(), [](const Device& d) { return d.kind == DeviceKind::station; })) {
    throw DomainError("compare needs at least one station");
  }
  auto uniform = std::async(std::launch::async, [&] {
    return run_scenario(grid, p_ref, DispatchMode::uniform, sigma, solver);
  });
  CompareResult c;
  c.synthesized = run_scenario(grid, p_ref, synthesized_mode, sigma, solver);
  c.uniform = uniform.get();
  auto reduction = [](double base, double improved) {
    return base > 0.0 ? 100.0 * (base - improved) / base : 0.0;
  };
  c.max_deviation_reduction_pct =
      reduction(c.uniform.metrics.max_deviation, c.synthesized.metrics.max_deviation);
  c.l2_deviation_reduction_pct = reduction(c.uniform.metrics.l2_deviation, c.synthesized.metrics.l2_deviation);
  return c;
}

XcheckReport cross_check(const IndexedGrid& grid, std::span<const PointSource> sources, double sigma,
                         const SolverSettings& solver) {
  if (!grid.is_single_feeder()) throw DomainError("analytic path requires single feeder");
  const Mesh mesh = build_mesh(grid, solver.step_km);
  const DensityField densities = power_density(grid, sources, sigma, mesh);
  const VoltageProfile lin = solve_linearized(grid, densities, solver);
  const VoltageProfile nonlin = solve_nonlinear(grid, densities, solver);

  std::vector<Injection> injections;
  for (const auto& s : sources) {
    if (s.p != 0.0 || s.q != 0.0) injections.push_back({s.xi, s.p, s.q});
  }
  const auto& seg = grid.segment(0);
  const ClosedFormProfile analytic(PointInjectionSet(injections, seg.line, seg.length));

  XcheckReport r;
  r.exclusion_radius = 3.0 * sigma;
  const auto& x = lin.segments[0].x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const bool near = std::any_of(injections.begin(), injections.end(), [&](const Injection& j) {
      return std::abs(x[k] - j.xi) < r.exclusion_radius;
    });
    if (near) continue;
    ++r.points_compared;
    r.analytic_vs_linearized =
        std::max(r.analytic_vs_linearized, std::abs(analytic.amplitude(x[k]) - lin.segments[0].v[k]));
    r.linearized_vs_nonlinear =
        std::max(r.linearized_vs_nonlinear, std::abs(lin.segments[0].v[k] - nonlin.segments[0].v[k]));
  }
  r.analytic_exceeds = r.analytic_vs_linearized > kAnalyticGapLimit;
  r.nonlinear_exceeds = r.linearized_vs_nonlinear > kNonlinearGapLimit;
  return r;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void write_dispatch_csv(std::ostream& out, const DispatchPlan& plan) {
  out << "station_id,xi_km,p_pu,q_pu,p_min_eff,p_max_eff,q_cap\n";
  for (const auto& s : plan.stations) {
    out << s.id << ',' << format_number(s.xi) << ',' << format_number(s.p) << ',' << format_number(s.q) << ','
        << format_number(s.p_min_eff) << ',' << format_number(s.p_max_eff) << ',' << format_number(s.q_cap)
        << '\n';
  }
  out << "total_p," << format_number(plan.total_p()) << ",leftover_p," << format_number(plan.leftover_p) << '\n';
}

void write_profile_csv(std::ostream& out, const VoltageProfile& profile) {
  out << "segment_id,x_km,theta_rad,v_pu,s,w\n";
  for (const auto& seg : profile.segments) {
    for (std::size_t k = 0; k < seg.x.size(); ++k) {
      out << seg.segment_id << ',' << format_number(seg.x[k]) << ',' << format_number(seg.theta[k]) << ','
          << format_number(seg.v[k]) << ',' << format_number(seg.s[k]) << ',' << format_number(seg.w[k])
          << '\n';
    }
  }
}

std::string metrics_json(const MetricsReport& metrics, const SolveDiagnostics& diagnostics) {
  ordered_json j = metrics_object(metrics);
  j["solver"] = {{"sweeps", diagnostics.sweeps},
                 {"last_change_pu", diagnostics.last_change},
                 {"boundary_residual", diagnostics.boundary_residual},
                 {"junction_residual", diagnostics.junction_residual}};
  return j.dump(2) + "\n";
}

std::string compare_json(const CompareResult& result) {
  ordered_json j;
  j["synthesized"] = metrics_object(result.synthesized.metrics);
  j["uniform"] = metrics_object(result.uniform.metrics);
  j["max_deviation_reduction_pct"] = result.max_deviation_reduction_pct;
  j["l2_deviation_reduction_pct"] = result.l2_deviation_reduction_pct;
  return j.dump(2) + "\n";
}

std::string xcheck_json(const XcheckReport& r) {
  ordered_json j;
  j["analytic_vs_linearized_pu"] = r.analytic_vs_linearized;
  j["analytic_limit_pu"] = kAnalyticGapLimit;
  j["analytic_exceeds"] = r.analytic_exceeds;
  j["linearized_vs_nonlinear_pu"] = r.linearized_vs_nonlinear;
  j["nonlinear_limit_pu"] = kNonlinearGapLimit;
  j["nonlinear_exceeds"] = r.nonlinear_exceeds;
  j["exclusion_radius_km"] = r.exclusion_radius;
  j["points_compared"] = r.points_compared;
  return j.dump(2) + "\n";
}

void emit_run(const RunResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::ostringstream dispatch;
  write_dispatch_csv(dispatch, result.plan);
  write_file(dir / "dispatch.csv", dispatch.str());
  std::ostringstream profile;
  write_profile_csv(profile, result.profile);
  write_file(dir / "profile.csv", profile.str());
  write_file(dir / "metrics.json", metrics_json(result.metrics, result.profile.diagnostics));
}

VoltageProfile read_profile_csv(std::istream& in) {
  VoltageProfile profile;
  std::string line;
  if (!std::getline(in, line) || line != "segment_id,x_km,theta_rad,v_pu,s,w") {
    throw ParseError("profile CSV: unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id;
    std::string cell;
    double vals[5];
    if (!std::getline(row, id, ',')) throw ParseError("profile CSV: bad row");
    for (double& v : vals) {
      if (!std::getline(row, cell, ',')) throw ParseError("profile CSV: short row");
      v = std::stod(cell);
    }
    if (profile.segments.empty() || profile.segments.back().segment_id != id) {
      profile.segments.push_back(SegmentProfile{id, {}, {}, {}, {}, {}});
    }
    auto& seg = profile.segments.back();
    seg.x.push_back(vals[0]);
    seg.theta.push_back(vals[1]);
    seg.v.push_back(vals[2]);
    seg.s.push_back(vals[3]);
    seg.w.push_back(vals[4]);
  }
  return profile;
}

}  // namespace feederflow
