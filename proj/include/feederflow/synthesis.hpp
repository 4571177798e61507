#pragma once

// Spatial charging/discharging synthesis for EV charging stations.
//
// Active power: walking from the open end toward the bank, each station
// takes on the consumption of the loads beyond it (plus the residual handed
// over by the previous station), clamped to its derated bounds; the excess is
// handed to the next station toward the bank. A refinement pass starting at
// the bank-nearest station then adjusts the dispatch until the total equals
// the regulation request, or every station saturates.
//
// Reactive power follows the same walk with power-factor caps
// |Q| <= sqrt((P/0.9)^2 - P^2). Two rules are available:
//  - literal:   per load beyond the station, Q = (G/B)(P_i - P_L), the last
//               value winning (the incoming residual is overwritten),
//  - principle: Q_i = residual_in - (G P_i + sum (G P_L + B Q_L)) / B, which
//               drives the running sum of (G P + B Q) beyond x toward zero.
//
// Sign convention: positive P is discharge into the feeder, positive Q is
// leading-phase injection (raises downstream voltage).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feederflow/grid_model.hpp"

namespace feederflow {

// Station bounds are derated to this fraction to leave headroom for Q.
inline constexpr double kDerating = 0.9;
inline constexpr double kMinPowerFactor = 0.9;

struct RegulationRequest {
  double p_ref = 0.0;  // [pu], positive = net discharge demanded
};

struct StationState {
  std::string id;
  double xi = 0.0;
  double p_min = 0.0;  // raw bounds [pu]
  double p_max = 0.0;

  double eff_min() const { return kDerating * p_min; }
  double eff_max() const { return kDerating * p_max; }
};

struct LoadPoint {
  std::string id;
  double xi = 0.0;
  double p = 0.0;  // <= 0
  double q = 0.0;
};

enum class SynthesisMode { literal, principle };

struct StationDispatch {
  std::string id;
  std::size_t device = 0;  // index into the grid's device list (0 when built from spans)
  double xi = 0.0;
  double p = 0.0;
  double q = 0.0;
  double p_min_eff = 0.0;
  double p_max_eff = 0.0;
  double q_cap = 0.0;  // symmetric: q in [-q_cap, q_cap]
};

enum class Quantity { active, reactive };

// One station visit of the end-to-bank walk.
struct StationTrace {
  Quantity quantity = Quantity::active;
  std::string station;
  double seed = 0.0;          // residual handed in
  double delta = 0.0;         // change applied by loads beyond the station
  double raw = 0.0;           // value before clamping
  double assigned = 0.0;
  double residual_out = 0.0;  // raw - assigned, handed toward the bank
};

// Residual moved between stations; an empty `to` means it reached the bank
// and was dropped.
struct ResidualHandoff {
  Quantity quantity = Quantity::active;
  std::string from;
  std::string to;
  double amount = 0.0;
};

struct DispatchPlan {
  std::vector<StationDispatch> stations;  // bank-nearest first
  double p_ref = 0.0;
  double leftover_p = 0.0;  // unserved part of p_ref
  std::vector<StationTrace> trace;
  std::vector<ResidualHandoff> handoffs;

  double total_p() const;
  const StationDispatch& station(std::string_view id) const;
};

inline double q_cap_for(double p) {
  return std::sqrt((p / kMinPowerFactor) * (p / kMinPowerFactor) - p * p);
}

// Single feeder, stations and loads listed farthest from the bank first.
// Returns P only (Q = 0, q_cap from P); stations in the plan are bank-nearest
// first. Infeasible requests are reported via leftover_p.
DispatchPlan active_dispatch(std::span<const StationState> stations, std::span<const LoadPoint> loads,
                             RegulationRequest request);

// Fills Q for a plan produced by active_dispatch over the same stations.
// Throws DomainError("reactive compensation undefined") when B = 0.
DispatchPlan reactive_dispatch(DispatchPlan plan, std::span<const StationState> stations,
                               std::span<const LoadPoint> loads, LineAdmittance line,
                               SynthesisMode mode = SynthesisMode::literal);

// Refinement pass alone: pushes plan.leftover_p into the stations starting at
// the bank-nearest one. A plan with zero leftover is returned unchanged.
DispatchPlan refine_to_request(DispatchPlan plan);

// Active then reactive dispatch on a single-segment grid.
DispatchPlan synthesize(const IndexedGrid& grid, RegulationRequest request,
                        SynthesisMode mode = SynthesisMode::literal);

// Tree version: per-segment walks from the leaves, residuals and unserved
// loads handed across junctions to the nearest bank-side station, one global
// refinement, then the reactive walk with the same hand-off rule.
DispatchPlan synthesize_tree(const IndexedGrid& grid, RegulationRequest request,
                             SynthesisMode mode = SynthesisMode::literal);

// Equal split of p_ref with a constant power factor (Q has the sign of P).
DispatchPlan uniform_baseline(const IndexedGrid& grid, RegulationRequest request,
                              double power_factor = kMinPowerFactor);

// Largest imbalance in the residual bookkeeping: seeds vs. hand-offs in,
// seed + delta vs. raw, residual_out vs. hand-offs out.
double audit_residuals(const DispatchPlan& plan);

// Stations (farthest first) and loads of one segment, as the walk consumes them.
std::vector<StationState> stations_on(const IndexedGrid& grid, std::size_t segment);
std::vector<LoadPoint> loads_on(const IndexedGrid& grid, std::size_t segment);

// Loads plus dispatched stations as point sources.
std::vector<PointSource> plan_sources(const IndexedGrid& grid, const DispatchPlan& plan);

}  // namespace feederflow
