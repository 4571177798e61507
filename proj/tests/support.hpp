#pragma once

#include <filesystem>
#include <string>

#include "feederflow/grid_io.hpp"
#include "feederflow/grid_model.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return FEEDERFLOW_SOURCE_DIR; }

inline std::filesystem::path config(const std::string& name) { return source_dir() / "configs" / name; }

inline feederflow::IndexedGrid reference_grid() {
  return feederflow::IndexedGrid(feederflow::read_grid_file(config("single_feeder_paper.json")));
}

inline feederflow::IndexedGrid tree_grid() {
  return feederflow::IndexedGrid(feederflow::read_grid_file(config("multi_feeder_fig4.json")));
}

inline feederflow::GridTree single_feeder(double length, feederflow::LineAdmittance line) {
  feederflow::GridTree g;
  g.base = feederflow::PerUnitBase::make(12e6, 6600.0);
  g.segments.push_back({"main", length, line, "", std::nullopt});
  return g;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::path(FEEDERFLOW_BINARY_DIR) / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
