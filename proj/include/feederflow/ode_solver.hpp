#pragma once

// Boundary-value solver for the feeder voltage ODE on radial trees.
//
// Per segment, with conductor (g, b) and Z^2 = g^2 + b^2:
//
//   theta' = -s / v^2,   v' = w,
//   s' = (b p - g q) / Z^2,
//   w' = s^2 / v^3 - (g p + b q) / (v Z^2)
//
// (the linearized model sets v = 1 on the right-hand sides). Boundary values:
// v = 1 and theta = bank_phase at the bank, s = w = 0 at every open end. At a
// junction v and theta are continuous and the upstream s, w equal the sums
// over the downstream segments.
//
// The solve is a backward-forward sweep: s and w are integrated from the open
// ends toward the bank using the previous v, then v and theta from the bank
// outward, until the sup-norm change of v drops below the tolerance. Each
// pass uses the trapezoidal rule on the density mesh, so the fixed point is
// the second-order trapezoidal discretization of the coupled system.

#include <cstddef>
#include <string>
#include <vector>

#include "feederflow/grid_model.hpp"

namespace feederflow {

struct SolverSettings {
  double step_km = 0.0;      // <= 0: length/2000 per segment
  double tolerance = 1e-9;   // on sup |v_new - v_old| [pu]
  int max_sweeps = 100;
  int order = 2;             // trapezoidal; the only scheme provided
  double bank_phase = 0.0;   // theta(0) [rad]
  double collapse_voltage = 0.5;
};

enum class OdeModel { nonlinear, linearized };

struct SegmentProfile {
  std::string segment_id;
  std::vector<double> x;  // [km] from the bank
  std::vector<double> theta;
  std::vector<double> v;
  std::vector<double> s;
  std::vector<double> w;
};

struct SolveDiagnostics {
  int sweeps = 0;
  double last_change = 0.0;
  std::vector<double> change_history;
  double boundary_residual = 0.0;  // max over bank and open ends
  double junction_residual = 0.0;  // max over junctions (s, w, v, theta)
};

struct VoltageProfile {
  std::vector<SegmentProfile> segments;  // same order as the grid segments
  SolveDiagnostics diagnostics;
};

// Throws DomainError on invalid settings or when the mesh step exceeds
// sigma/2; SolverError on non-convergence or voltage collapse.
VoltageProfile solve_nonlinear(const IndexedGrid& grid, const DensityField& densities,
                               const SolverSettings& settings = {});

// Single straight feeder only (DomainError otherwise).
VoltageProfile solve_linearized(const IndexedGrid& grid, const DensityField& densities,
                                const SolverSettings& settings = {});

namespace detail {

// Flat start: v = 1, theta = bank_phase, s = w = 0 on the density mesh.
VoltageProfile initial_profile(const IndexedGrid& grid, const DensityField& densities,
                               const SolverSettings& settings);

// One backward (s, w) and forward (v, theta) pass. Returns sup |v_new - v_old|.
double sweep_iteration(const IndexedGrid& grid, const DensityField& densities, OdeModel model,
                       const SolverSettings& settings, VoltageProfile& profile);

VoltageProfile solve(const IndexedGrid& grid, const DensityField& densities, OdeModel model,
                     const SolverSettings& settings);

}  // namespace detail

// Boundary and junction residuals of a profile, as stored in diagnostics.
double boundary_residual(const IndexedGrid& grid, const VoltageProfile& profile,
                         double bank_phase = 0.0);
double junction_residual(const IndexedGrid& grid, const VoltageProfile& profile);

}  // namespace feederflow
