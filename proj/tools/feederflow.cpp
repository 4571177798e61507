// feederflow: validate grids, run dispatch scenarios, compare against the
// uniform baseline and cross-check the solvers.
//
// Exit codes: 0 ok, 1 domain violation, 2 I/O or parse error, 3 solver failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "feederflow/errors.hpp"
#include "feederflow/grid_io.hpp"
#include "feederflow/runner.hpp"

namespace ff = feederflow;

namespace {

enum Exit { kOk = 0, kDomain = 1, kParse = 2, kSolver = 3 };

struct Options {
  std::string grid;
  std::optional<double> pref;
  std::optional<double> pref_w;
  std::string mode = "literal";
  double sigma = 0.05;
  double step = 0.0;
  std::string out;
};

std::filesystem::path default_out_dir() {
  const char* env = std::getenv("FEEDERFLOW_OUT_DIR");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("out");
}

ff::ScenarioConfig to_config(const Options& o) {
  ff::ScenarioConfig c;
  c.grid_path = o.grid;
  c.p_ref_pu = o.pref;
  c.p_ref_w = o.pref_w;
  c.mode = ff::parse_mode(o.mode);
  if (!(o.sigma > 0.0)) throw ff::DomainError("sigma must be positive");
  c.sigma = o.sigma;
  c.solver.step_km = o.step;
  c.out_dir = o.out.empty() ? default_out_dir() : std::filesystem::path(o.out);
  return c;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ff::ParseError("cannot write '" + path.string() + "'");
  out << text;
}

int cmd_validate(const Options& o) {
  const ff::GridTree grid = ff::read_grid_file(o.grid);
  const ff::ValidationReport report = ff::validate_grid(grid);
  for (const auto& v : report.violations) std::cout << "violation: " << v.code << ": " << v.detail << '\n';
  print_warnings(report.warnings);
  if (!report.ok()) return kDomain;
  std::cout << "ok: " << grid.segments.size() << " segment(s), " << grid.devices.size() << " device(s)\n";
  return kOk;
}

int cmd_run(const ff::ScenarioConfig& c) {
  const ff::IndexedGrid grid(ff::read_grid_file(c.grid_path));
  const double p_ref = ff::resolve_p_ref(c, grid.grid());
  const ff::RunResult r = ff::run_scenario(grid, p_ref, c.mode, c.sigma, c.solver);
  print_warnings(r.warnings);
  ff::emit_run(r, c.out_dir);
  std::cout << ff::metrics_json(r.metrics, r.profile.diagnostics);
  return kOk;
}

int cmd_compare(const ff::ScenarioConfig& c) {
  const ff::IndexedGrid grid(ff::read_grid_file(c.grid_path));
  const double p_ref = ff::resolve_p_ref(c, grid.grid());
  const auto mode = c.mode == ff::DispatchMode::uniform ? ff::DispatchMode::literal : c.mode;
  const ff::CompareResult r = ff::compare_scenario(grid, p_ref, mode, c.sigma, c.solver);
  print_warnings(r.synthesized.warnings);
  ff::emit_run(r.synthesized, c.out_dir / "synthesized");
  ff::emit_run(r.uniform, c.out_dir / "uniform");
  const std::string report = ff::compare_json(r);
  write_text(c.out_dir / "compare.json", report);
  std::cout << report;
  return kOk;
}

int cmd_xcheck(const ff::ScenarioConfig& c) {
  const ff::IndexedGrid grid(ff::read_grid_file(c.grid_path));
  if (!grid.is_single_feeder()) throw ff::DomainError("analytic path requires single feeder");
  // Without a request the stations stay idle and only the loads inject.
  std::vector<ff::PointSource> sources;
  if (c.p_ref_pu || c.p_ref_w) {
    sources = ff::plan_sources(grid, ff::make_plan(grid, ff::resolve_p_ref(c, grid.grid()), c.mode));
  } else {
    sources = ff::load_sources(grid);
  }
  const ff::XcheckReport r = ff::cross_check(grid, sources, c.sigma, c.solver);
  const std::string report = ff::xcheck_json(r);
  write_text(c.out_dir / "xcheck.json", report);
  std::cout << report;
  if (r.analytic_exceeds) std::cerr << "warning: analytic gap exceeds " << ff::kAnalyticGapLimit << " pu\n";
  if (r.nonlinear_exceeds) std::cerr << "warning: nonlinear gap exceeds " << ff::kNonlinearGapLimit << " pu\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feeder voltage profiles and EV station dispatch synthesis"};
  app.require_subcommand(1);

  Options o;
  auto add_common = [&](CLI::App* sub, bool scenario) {
    sub->add_option("--grid", o.grid, "grid description (JSON)")->required();
    if (!scenario) return;
    auto* pu = sub->add_option("--pref", o.pref, "regulation request [pu]");
    sub->add_option("--pref-w", o.pref_w, "regulation request [W]")->excludes(pu);
    sub->add_option("--mode", o.mode, "literal | principle | uniform")
        ->check(CLI::IsMember({"literal", "principle", "uniform"}));
    sub->add_option("--sigma", o.sigma, "kernel width [km]");
    sub->add_option("--step", o.step, "mesh step [km] (default: segment length / 2000)");
    sub->add_option("--out", o.out, "output directory (default: $FEEDERFLOW_OUT_DIR or ./out)");
  };
  auto* validate = app.add_subcommand("validate", "check a grid description");
  auto* run = app.add_subcommand("run", "dispatch, solve and write dispatch/profile/metrics");
  auto* compare = app.add_subcommand("compare", "synthesized plan against the uniform baseline");
  auto* xcheck = app.add_subcommand("xcheck", "closed form vs. numeric solvers on a single feeder");
  add_common(validate, false);
  add_common(run, true);
  add_common(compare, true);
  add_common(xcheck, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  std::filesystem::path out_dir;
  try {
    if (validate->parsed()) return cmd_validate(o);
    const ff::ScenarioConfig config = to_config(o);
    out_dir = config.out_dir;
    if (run->parsed()) return cmd_run(config);
    if (compare->parsed()) return cmd_compare(config);
    if (xcheck->parsed()) return cmd_xcheck(config);
  } catch (const ff::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << " (sweeps " << e.sweeps() << ", last change "
              << e.last_change() << ")\n";
    try {
      write_text(out_dir / "diagnostics.txt", std::string("error: ") + e.what() + "\nsweeps: " +
                                                  std::to_string(e.sweeps()) + "\nlast_change: " +
                                                  ff::format_number(e.last_change()) + "\n");
    } catch (const std::exception&) {
    }
    return kSolver;
  } catch (const ff::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const ff::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParse;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParse;
  }
  return kOk;
}
