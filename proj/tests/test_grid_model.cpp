#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "feederflow/errors.hpp"
#include "feederflow/grid_model.hpp"
#include "support.hpp"

using namespace feederflow;
using testing_support::single_feeder;

namespace {

GridTree two_branch() {
  GridTree g;
  g.base = PerUnitBase::make(12e6, 6600.0);
  const LineAdmittance line{3.881, 6.856};
  g.segments.push_back({"trunk", 1.0, line, "", std::nullopt});
  g.segments.push_back({"left", 2.0, line, "trunk", 1.0});
  g.segments.push_back({"right", 1.5, line, "trunk", std::nullopt});
  return g;
}

}  // namespace

TEST_CASE("per-unit conversion of the reference conductor") {
  // G = R Zb / (R^2 + X^2), B = X Zb / (R^2 + X^2), Zb = 6600^2 / 12e6.
  const auto line = to_per_unit(0.227, 0.401, PerUnitBase::make(12e6, 6600.0));
  CHECK(line.g == doctest::Approx(3.88079875665238).epsilon(1e-13));
  CHECK(line.b == doctest::Approx(6.8555079357603725).epsilon(1e-13));
}

TEST_CASE("per-unit conversion: scale consistency") {
  // Doubling both R and X halves the admittance; doubling the base power
  // halves the base impedance.
  const auto base = PerUnitBase::make(12e6, 6600.0);
  const auto a = to_per_unit(0.227, 0.401, base);
  const auto b = to_per_unit(0.454, 0.802, base);
  CHECK(b.g == doctest::Approx(a.g / 2).epsilon(1e-14));
  CHECK(b.b == doctest::Approx(a.b / 2).epsilon(1e-14));
  const auto c = to_per_unit(0.227, 0.401, PerUnitBase::make(24e6, 6600.0));
  CHECK(c.g == doctest::Approx(a.g / 2).epsilon(1e-14));
}

TEST_CASE("per-unit conversion: degenerate and invalid inputs") {
  const auto base = PerUnitBase::make(12e6, 6600.0);
  CHECK_THROWS_WITH_AS(to_per_unit(0.0, 0.0, base), "degenerate conductor", DomainError);
  CHECK_THROWS_AS(to_per_unit(-0.1, 0.4, base), DomainError);
  CHECK_THROWS_AS(PerUnitBase::make(0.0, 6600.0), DomainError);
  CHECK_THROWS_AS(PerUnitBase::make(12e6, -1.0), DomainError);
  CHECK_THROWS_AS(PerUnitBase::make(std::numeric_limits<double>::quiet_NaN(), 6600.0), DomainError);
  CHECK(base.base_impedance() == doctest::Approx(3.63));
}

TEST_CASE("validation accepts the bundled grids") {
  CHECK(validate_grid(testing_support::reference_grid().grid()).ok());
  CHECK(validate_grid(testing_support::tree_grid().grid()).ok());
  CHECK(validate_grid(two_branch()).ok());
}

TEST_CASE("validation flags each violation") {
  const LineAdmittance line{3.881, 6.856};

  SUBCASE("empty grid") { CHECK(validate_grid(GridTree{}).has("empty grid")); }
  SUBCASE("non-positive length") {
    CHECK(validate_grid(single_feeder(-1.0, line)).has("non-positive length"));
    CHECK(validate_grid(single_feeder(0.0, line)).has("non-positive length"));
  }
  SUBCASE("non-positive admittance") {
    CHECK(validate_grid(single_feeder(1.0, {0.0, 1.0})).has("non-positive admittance"));
  }
  SUBCASE("non-finite value") {
    CHECK(validate_grid(single_feeder(std::numeric_limits<double>::infinity(), line)).has("non-finite value"));
  }
  SUBCASE("missing and duplicate ids") {
    auto g = two_branch();
    g.segments[2].id = "left";
    CHECK(validate_grid(g).has("duplicate id"));
    g.segments[2].id = "";
    CHECK(validate_grid(g).has("missing id"));
  }
  SUBCASE("unknown parent") {
    auto g = two_branch();
    g.segments[1].parent = "nowhere";
    CHECK(validate_grid(g).has("unknown parent"));
  }
  SUBCASE("cycle") {
    auto g = two_branch();
    g.segments[0].parent = "left";
    CHECK(validate_grid(g).has("not a tree"));
  }
  SUBCASE("attachment offset mismatch") {
    auto g = two_branch();
    g.segments[1].offset = 0.5;
    CHECK(validate_grid(g).has("attachment offset mismatch"));
  }
  SUBCASE("device checks") {
    auto g = single_feeder(5.0, line);
    g.devices.push_back(Device::load("main", 1.0, 0.01));
    g.devices.push_back(Device::station("main", 2.0, 0.01, 0.03));
    g.devices.push_back(Device::load("main", 0.0, -0.01));
    g.devices.push_back(Device::load("main", 5.0, -0.01));
    g.devices.push_back(Device::load("elsewhere", 1.0, -0.01));
    g.devices.push_back(Device::load("main", 3.0, -0.01));
    g.devices.push_back(Device::station("main", 3.0, -0.01, 0.01));
    const auto r = validate_grid(g);
    CHECK(r.has("load active power positive"));
    CHECK(r.has("station bounds do not straddle zero"));
    CHECK(r.has("device at bank"));
    CHECK(r.has("device at endpoint"));
    CHECK(r.has("unknown segment"));
    CHECK(r.has("overlapping device positions"));
  }
  SUBCASE("device outside its own branch") {
    auto g = two_branch();
    g.devices.push_back(Device::load("right", 2.75, -0.01));  // right covers (1.0, 2.5)
    CHECK(validate_grid(g).has("device at endpoint"));
  }
}

TEST_CASE("indexed grid refuses invalid input and lists the violations") {
  auto g = single_feeder(-2.0, {3.881, 6.856});
  try {
    IndexedGrid bad(g);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("non-positive length") != std::string::npos);
  }
}

TEST_CASE("indexed grid topology") {
  auto g = two_branch();
  g.devices.push_back(Device::load("left", 1.5, -0.01));
  g.devices.push_back(Device::station("left", 2.5, -0.01, 0.01));
  g.devices.push_back(Device::load("left", 2.0, -0.01, 0.0, "named"));
  const IndexedGrid grid(g);

  CHECK(grid.start(0) == 0.0);
  CHECK(grid.start(1) == 1.0);
  CHECK(grid.end(2) == 2.5);
  CHECK_FALSE(grid.parent(0).has_value());
  CHECK(*grid.parent(2) == 0);
  CHECK(grid.children(0) == std::vector<std::size_t>{1, 2});
  CHECK(grid.is_terminal(1));
  CHECK_FALSE(grid.is_terminal(0));
  CHECK(grid.topo_order() == std::vector<std::size_t>{0, 1, 2});
  CHECK(grid.find_segment("right") == 2);
  CHECK_THROWS_AS(grid.find_segment("none"), DomainError);
  CHECK_FALSE(grid.is_single_feeder());

  // Farthest first; automatic ids by kind and declaration order.
  CHECK(grid.devices_on(1) == std::vector<std::size_t>{1, 2, 0});
  CHECK(grid.device(0).id == "L1");
  CHECK(grid.device(1).id == "S1");
  CHECK(grid.device(2).id == "named");
  CHECK(grid.device_segment(1) == 1);
}

TEST_CASE("mesh construction") {
  const IndexedGrid grid(two_branch());
  const Mesh fine = build_mesh(grid);
  REQUIRE(fine.segments.size() == 3);
  CHECK(fine.segments[1].intervals == 2000);
  CHECK(fine.segments[1].x(0) == 1.0);
  CHECK(fine.segments[1].x(2000) == 3.0);

  const Mesh coarse = build_mesh(grid, 0.1);
  CHECK(coarse.segments[0].intervals == 10);
  CHECK(coarse.segments[2].intervals == 15);
  CHECK(build_mesh(grid, 0.4).segments[0].intervals == 3);
}

TEST_CASE("gaussian densities conserve the injected power") {
  auto g = single_feeder(5.0, {3.881, 6.856});
  const IndexedGrid grid(g);
  const std::vector<PointSource> sources{{0, 1.0, -0.06, 0.01}, {0, 2.5, 0.03, -0.02}, {0, 4.0, -0.05, 0.0}};
  for (double step : {0.0, 0.01, 0.003}) {
    const Mesh mesh = build_mesh(grid, step);
    const auto field = power_density(grid, sources, 0.05, mesh);
    const auto& m = mesh.segments[0];
    double p = 0.0, q = 0.0;
    for (std::size_t k = 0; k < m.nodes(); ++k) {
      const double w = (k == 0 || k == m.intervals) ? 0.5 : 1.0;
      p += w * field.p[0][k] * m.step();
      q += w * field.q[0][k] * m.step();
    }
    CHECK(p == doctest::Approx(-0.08).epsilon(1e-12));
    CHECK(q == doctest::Approx(-0.01).epsilon(1e-12));
    CHECK(field.warnings.empty());
  }
}

TEST_CASE("density samples follow the gaussian profile") {
  const IndexedGrid grid(single_feeder(5.0, {3.881, 6.856}));
  const std::vector<PointSource> sources{{0, 2.0, -0.06, 0.0}};
  const Mesh mesh = build_mesh(grid);
  const auto field = power_density(grid, sources, 0.05, mesh);
  const double peak = -0.06 / std::sqrt(2 * std::numbers::pi * 0.05 * 0.05);
  CHECK(field.p[0][800] == doctest::Approx(peak).epsilon(1e-7));  // x = 2.0
  CHECK(gaussian_density(sources, 0, 2.0, 0.05) == doctest::Approx(peak).epsilon(1e-14));
  CHECK(field.p[0][0] == 0.0);
  CHECK(field.p[0][2000] == 0.0);
}

TEST_CASE("density warnings") {
  const IndexedGrid grid(single_feeder(5.0, {3.881, 6.856}));
  const Mesh mesh = build_mesh(grid);
  SUBCASE("overlap") {
    const std::vector<PointSource> close{{0, 2.0, -0.01, 0.0}, {0, 2.05, -0.01, 0.0}};
    const auto f = power_density(grid, close, 0.05, mesh);
    CHECK(std::find(f.warnings.begin(), f.warnings.end(), "overlapping kernels") != f.warnings.end());
  }
  SUBCASE("clipped near the bank, mass still exact") {
    const std::vector<PointSource> near{{0, 0.1, -0.01, 0.0}};
    const auto f = power_density(grid, near, 0.05, mesh);
    CHECK(std::find(f.warnings.begin(), f.warnings.end(), "kernel clipped at segment boundary") !=
          f.warnings.end());
    const auto& m = mesh.segments[0];
    double p = 0.0;
    for (std::size_t k = 0; k < m.nodes(); ++k) p += ((k == 0 || k == m.intervals) ? 0.5 : 1.0) * f.p[0][k] * m.step();
    CHECK(p == doctest::Approx(-0.01).epsilon(1e-12));
  }
  SUBCASE("invalid sigma") {
    const std::vector<PointSource> one{{0, 2.0, -0.01, 0.0}};
    CHECK_THROWS_AS(power_density(grid, one, 0.0, mesh), DomainError);
    CHECK_THROWS_AS(power_density(grid, one, -1.0, mesh), DomainError);
  }
}

TEST_CASE("load sources skip stations") {
  const auto grid = testing_support::reference_grid();
  const auto sources = load_sources(grid);
  REQUIRE(sources.size() == 5);
  double total = 0.0;
  for (const auto& s : sources) total += s.p;
  CHECK(total == doctest::Approx(-0.3));
}
