#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = env + " '" + std::string(FEEDERFLOW_CLI) + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

fs::path write_grid(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

const std::string kReference = testing_support::config("single_feeder_paper.json").string();
const std::string kTree = testing_support::config("multi_feeder_fig4.json").string();

}  // namespace

TEST_CASE("cli validate") {
  const auto dir = testing_support::scratch("cli_validate");
  CHECK(run_cli("validate --grid '" + kReference + "'", dir).code == 0);
  CHECK(run_cli("validate --grid '" + kTree + "'", dir).code == 0);

  const auto bad = write_grid(dir, "neg.json", R"({"base": {"power_VA": 12e6, "voltage_V": 6600},
      "segment": [{"id": "main", "length_km": -1, "g_pu_per_km": 3.9, "b_pu_per_km": 6.9}]})");
  const auto r = run_cli("validate --grid '" + bad.string() + "'", dir);
  CHECK(r.code == 1);
  CHECK(r.out.find("non-positive length") != std::string::npos);

  CHECK(run_cli("validate --grid '" + (dir / "missing.json").string() + "'", dir).code == 2);
  const auto broken = write_grid(dir, "broken.json", "{\"base\": ");
  CHECK(run_cli("validate --grid '" + broken.string() + "'", dir).code == 2);
}

TEST_CASE("cli run writes the three outputs") {
  const auto dir = testing_support::scratch("cli_run");
  const auto r = run_cli("run --grid '" + kReference + "' --pref 0.1 --out '" + (dir / "out").string() + "'", dir);
  REQUIRE(r.code == 0);
  const std::string dispatch = slurp(dir / "out" / "dispatch.csv");
  CHECK(dispatch.find("St1,1,0.01,0.00484322104838,") != std::string::npos);
  CHECK(dispatch.find("St4,4,0.03,0.0145296631451,") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "profile.csv"));
  CHECK(fs::exists(dir / "out" / "metrics.json"));

  const auto u = run_cli("run --grid '" + kReference + "' --pref-w 1.2e6 --mode uniform --out '" +
                             (dir / "uniform").string() + "'",
                         dir);
  REQUIRE(u.code == 0);
  CHECK(slurp(dir / "uniform" / "dispatch.csv").find("St2,2,0.025,0.0121080526") != std::string::npos);
}

TEST_CASE("cli output directory from the environment") {
  const auto dir = testing_support::scratch("cli_env");
  const auto r = run_cli("run --grid '" + kReference + "' --pref 0.1", dir, "FEEDERFLOW_OUT_DIR='" + (dir / "env").string() + "'");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "env" / "dispatch.csv"));
}

TEST_CASE("cli compare and xcheck") {
  const auto dir = testing_support::scratch("cli_compare");
  const auto c = run_cli("compare --grid '" + kReference + "' --pref 0.1 --out '" + (dir / "cmp").string() + "'", dir);
  REQUIRE(c.code == 0);
  CHECK(fs::exists(dir / "cmp" / "compare.json"));
  CHECK(fs::exists(dir / "cmp" / "synthesized" / "profile.csv"));
  CHECK(fs::exists(dir / "cmp" / "uniform" / "profile.csv"));

  const auto x = run_cli("xcheck --grid '" + kReference + "' --out '" + (dir / "x").string() + "'", dir);
  CHECK(x.code == 0);
  CHECK(x.out.find("analytic_vs_linearized_pu") != std::string::npos);

  const auto t = run_cli("xcheck --grid '" + kTree + "' --sigma 0.02 --out '" + (dir / "t").string() + "'", dir);
  CHECK(t.code == 1);
  CHECK(t.err.find("analytic path requires single feeder") != std::string::npos);
}

TEST_CASE("cli error codes") {
  const auto dir = testing_support::scratch("cli_errors");
  // Heavy load: the bank cannot hold the far end above the collapse guard.
  const auto heavy = write_grid(dir, "heavy.json", R"({"base": {"power_VA": 12e6, "voltage_V": 6600},
      "segment": [{"id": "main", "length_km": 5, "r_ohm_per_km": 0.227, "x_ohm_per_km": 0.401}],
      "device": [{"kind": "load", "segment": "main", "xi_km": 4.5, "p_pu": -40}]})");
  const auto out = dir / "heavy_out";
  const auto r = run_cli("run --grid '" + heavy.string() + "' --out '" + out.string() + "'", dir);
  CHECK(r.code == 3);
  CHECK(fs::exists(out / "diagnostics.txt"));
  CHECK(slurp(out / "diagnostics.txt").find("sweeps:") != std::string::npos);

  CHECK(run_cli("run --grid '" + kReference + "' --sigma -1", dir).code == 1);
  CHECK(run_cli("run --grid '" + kReference + "' --mode best", dir).code == 2);
  CHECK(run_cli("run", dir).code == 2);
  CHECK(run_cli("frobnicate --grid x", dir).code == 2);
  CHECK(run_cli("run --grid '" + kReference + "' --pref 0.1 --pref-w 1e6", dir).code == 2);
}
