#include "feederflow/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "feederflow/errors.hpp"

namespace feederflow {

namespace {

struct ResidualPart {
  std::string from;
  double amount = 0.0;
};

// What one feeder hands to the station nearest to it on the bank side.
struct Carry {
  std::vector<ResidualPart> residual;
  std::vector<LoadPoint> pending;  // loads no station has walked past, farthest first
};

struct Slot {
  std::size_t plan_index = 0;
  double xi = 0.0;
};

struct Clamped {
  double value = 0.0;
  double residual = 0.0;
  bool hit = false;
};

Clamped clamp_with_residual(double raw, double lo, double hi) {
  if (raw > hi) return {hi, raw - hi, true};
  if (raw < lo) return {lo, raw - lo, true};
  return {raw, 0.0, false};
}

double take_seed(const std::vector<ResidualPart>& parts, Quantity quantity, const std::string& to,
                 DispatchPlan& plan) {
  double seed = 0.0;
  for (const auto& part : parts) {
    if (part.amount == 0.0) continue;
    seed += part.amount;
    plan.handoffs.push_back({quantity, part.from, to, part.amount});
  }
  return seed;
}

void drop_at_bank(const std::vector<ResidualPart>& parts, Quantity quantity, DispatchPlan& plan) {
  for (const auto& part : parts) {
    if (part.amount != 0.0) plan.handoffs.push_back({quantity, part.from, {}, part.amount});
  }
}

std::vector<LoadPoint> merge_pending(std::vector<LoadPoint> a, const std::vector<LoadPoint>& b) {
  std::vector<LoadPoint> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out),
             [](const LoadPoint& x, const LoadPoint& y) { return x.xi > y.xi; });
  return out;
}

// End-to-bank walk for active power over one feeder's stations.
Carry walk_active(std::span<const Slot> slots, std::vector<LoadPoint> queue,
                  std::vector<ResidualPart> residual, double& p_ref, DispatchPlan& plan) {
  std::size_t j = 0;
  for (const auto& slot : slots) {
    auto& st = plan.stations[slot.plan_index];
    const double seed = take_seed(residual, Quantity::active, st.id, plan);
    residual.clear();

    double p = seed;
    double delta = 0.0;
    Clamped c;
    while (j < queue.size() && queue[j].xi > slot.xi) {
      p = p - queue[j].p;
      delta += -queue[j].p;
      c = clamp_with_residual(p, st.p_min_eff, st.p_max_eff);
      ++j;
      if (c.hit) break;
    }
    const double raw = p;
    // A seed alone (no loads walked) may also exceed the bounds.
    c = clamp_with_residual(raw, st.p_min_eff, st.p_max_eff);
    st.p = c.value;
    st.q_cap = q_cap_for(st.p);
    p_ref = p_ref - st.p;
    plan.trace.push_back({Quantity::active, st.id, seed, delta, raw, c.value, c.residual});
    if (c.residual != 0.0) residual.push_back({st.id, c.residual});
  }
  return Carry{std::move(residual), std::vector<LoadPoint>(queue.begin() + static_cast<std::ptrdiff_t>(j), queue.end())};
}

Carry walk_reactive(std::span<const Slot> slots, std::vector<LoadPoint> queue,
                    std::vector<ResidualPart> residual, LineAdmittance line, SynthesisMode mode,
                    DispatchPlan& plan) {
  const double g = line.g;
  const double b = line.b;
  std::size_t j = 0;
  for (const auto& slot : slots) {
    auto& st = plan.stations[slot.plan_index];
    const double seed = take_seed(residual, Quantity::reactive, st.id, plan);
    residual.clear();

    const double cap = q_cap_for(st.p);
    st.q_cap = cap;
    double q = seed;
    if (mode == SynthesisMode::literal) {
      while (j < queue.size() && queue[j].xi > slot.xi) {
        q = g / b * (st.p - queue[j].p);
        ++j;
        if (clamp_with_residual(q, -cap, cap).hit) break;
      }
    } else {
      double running = g * st.p;
      while (j < queue.size() && queue[j].xi > slot.xi) {
        running += g * queue[j].p + b * queue[j].q;
        ++j;
      }
      q = seed + (-running / b);
    }
    const Clamped c = clamp_with_residual(q, -cap, cap);
    st.q = c.value;
    plan.trace.push_back({Quantity::reactive, st.id, seed, q - seed, q, c.value, c.residual});
    if (c.residual != 0.0) residual.push_back({st.id, c.residual});
  }
  return Carry{std::move(residual), std::vector<LoadPoint>(queue.begin() + static_cast<std::ptrdiff_t>(j), queue.end())};
}

void require_descending(std::span<const StationState> stations, std::span<const LoadPoint> loads) {
  for (std::size_t i = 1; i < stations.size(); ++i) {
    if (!(stations[i].xi < stations[i - 1].xi)) {
      throw DomainError("stations must be listed farthest from the bank first, strictly ordered");
    }
  }
  for (std::size_t i = 1; i < loads.size(); ++i) {
    if (loads[i].xi > loads[i - 1].xi) throw DomainError("loads must be listed farthest from the bank first");
  }
}

StationDispatch dispatch_entry(const StationState& s, std::size_t device) {
  StationDispatch d;
  d.id = s.id;
  d.device = device;
  d.xi = s.xi;
  d.p_min_eff = s.eff_min();
  d.p_max_eff = s.eff_max();
  return d;
}

StationState station_state(const Device& d) { return StationState{d.id, d.xi, d.p_min, d.p_max}; }

// All stations of the grid, bank-nearest first (ties: declaration order).
std::vector<std::size_t> stations_by_distance(const IndexedGrid& grid) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < grid.grid().devices.size(); ++k) {
    if (grid.device(k).kind == DeviceKind::station) idx.push_back(k);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return grid.device(a).xi < grid.device(b).xi; });
  return idx;
}

}  // namespace

double DispatchPlan::total_p() const {
  double total = 0.0;
  for (const auto& s : stations) total += s.p;
  return total;
}

const StationDispatch& DispatchPlan::station(std::string_view id) const {
  for (const auto& s : stations) {
    if (s.id == id) return s;
  }
  throw DomainError("no station '" + std::string(id) + "' in plan");
}

DispatchPlan active_dispatch(std::span<const StationState> stations, std::span<const LoadPoint> loads,
                             RegulationRequest request) {
  require_descending(stations, loads);
  for (const auto& s : stations) {
    if (s.p_min > 0.0 || s.p_max < 0.0) throw DomainError("station bounds do not straddle zero");
  }
  DispatchPlan plan;
  plan.p_ref = request.p_ref;
  const std::size_t n = stations.size();
  std::vector<Slot> slots(n);
  for (std::size_t i = 0; i < n; ++i) {
    plan.stations.push_back(dispatch_entry(stations[n - 1 - i], 0));
    slots[i] = Slot{n - 1 - i, stations[i].xi};
  }
  double p_ref = request.p_ref;
  const Carry out = walk_active(slots, {loads.begin(), loads.end()}, {}, p_ref, plan);
  drop_at_bank(out.residual, Quantity::active, plan);
  plan.leftover_p = p_ref;
  return refine_to_request(std::move(plan));
}

DispatchPlan refine_to_request(DispatchPlan plan) {
  double p_ref = plan.leftover_p;
  for (std::size_t i = 0; p_ref != 0.0 && i < plan.stations.size(); ++i) {
    auto& st = plan.stations[i];
    if (st.p + p_ref > st.p_max_eff) {
      p_ref = p_ref - st.p_max_eff + st.p;
      st.p = st.p_max_eff;
    } else if (st.p + p_ref < st.p_min_eff) {
      p_ref = p_ref - st.p_min_eff + st.p;
      st.p = st.p_min_eff;
    } else {
      st.p = st.p + p_ref;
      p_ref = 0.0;
    }
    st.q_cap = q_cap_for(st.p);
  }
  plan.leftover_p = p_ref;
  return plan;
}

DispatchPlan reactive_dispatch(DispatchPlan plan, std::span<const StationState> stations,
                               std::span<const LoadPoint> loads, LineAdmittance line,
                               SynthesisMode mode) {
  if (line.b == 0.0) throw DomainError("reactive compensation undefined");
  require_descending(stations, loads);
  const std::size_t n = stations.size();
  if (plan.stations.size() != n) throw DomainError("plan does not match stations");
  std::vector<Slot> slots(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& entry = plan.stations[n - 1 - i];
    if (entry.id != stations[i].id || entry.xi != stations[i].xi) {
      throw DomainError("plan does not match stations");
    }
    slots[i] = Slot{n - 1 - i, stations[i].xi};
  }
  const Carry out = walk_reactive(slots, {loads.begin(), loads.end()}, {}, line, mode, plan);
  drop_at_bank(out.residual, Quantity::reactive, plan);
  return plan;
}

std::vector<StationState> stations_on(const IndexedGrid& grid, std::size_t segment) {
  std::vector<StationState> out;
  for (std::size_t k : grid.devices_on(segment)) {
    if (grid.device(k).kind == DeviceKind::station) out.push_back(station_state(grid.device(k)));
  }
  return out;
}

std::vector<LoadPoint> loads_on(const IndexedGrid& grid, std::size_t segment) {
  std::vector<LoadPoint> out;
  for (std::size_t k : grid.devices_on(segment)) {
    const auto& d = grid.device(k);
    if (d.kind == DeviceKind::load) out.push_back(LoadPoint{d.id, d.xi, d.p, d.q});
  }
  return out;
}

DispatchPlan synthesize(const IndexedGrid& grid, RegulationRequest request, SynthesisMode mode) {
  if (!grid.is_single_feeder()) {
    throw DomainError("synthesize requires a single feeder; use synthesize_tree");
  }
  const auto stations = stations_on(grid, 0);
  const auto loads = loads_on(grid, 0);
  DispatchPlan plan = active_dispatch(stations, loads, request);
  plan = reactive_dispatch(std::move(plan), stations, loads, grid.segment(0).line, mode);
  for (auto& st : plan.stations) {
    for (std::size_t k : grid.devices_on(0)) {
      if (grid.device(k).id == st.id) st.device = k;
    }
  }
  return plan;
}

DispatchPlan synthesize_tree(const IndexedGrid& grid, RegulationRequest request, SynthesisMode mode) {
  for (std::size_t s = 0; s < grid.segment_count(); ++s) {
    if (grid.segment(s).line.b == 0.0) throw DomainError("reactive compensation undefined");
  }
  DispatchPlan plan;
  plan.p_ref = request.p_ref;
  const auto order = stations_by_distance(grid);
  std::vector<std::size_t> plan_index(grid.grid().devices.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    plan.stations.push_back(dispatch_entry(station_state(grid.device(order[i])), order[i]));
    plan_index[order[i]] = i;
  }

  auto slots_on = [&](std::size_t seg) {
    std::vector<Slot> slots;
    for (std::size_t k : grid.devices_on(seg)) {
      if (grid.device(k).kind == DeviceKind::station) slots.push_back(Slot{plan_index[k], grid.device(k).xi});
    }
    return slots;
  };

  // Leaves first; each segment starts from what its children hand over.
  auto walk_tree = [&](auto&& walk_segment, Quantity quantity) {
    std::vector<Carry> carry(grid.segment_count());
    const auto& topo = grid.topo_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      const std::size_t seg = *it;
      Carry in;
      for (std::size_t child : grid.children(seg)) {
        auto& c = carry[child];
        in.residual.insert(in.residual.end(), c.residual.begin(), c.residual.end());
        in.pending = merge_pending(std::move(in.pending), c.pending);
        c = Carry{};
      }
      auto queue = merge_pending(std::move(in.pending), loads_on(grid, seg));
      carry[seg] = walk_segment(seg, slots_on(seg), std::move(queue), std::move(in.residual));
    }
    for (std::size_t seg : topo) {
      if (!grid.parent(seg)) drop_at_bank(carry[seg].residual, quantity, plan);
    }
  };

  double p_ref = request.p_ref;
  walk_tree(
      [&](std::size_t, const std::vector<Slot>& slots, std::vector<LoadPoint> queue,
          std::vector<ResidualPart> residual) {
        return walk_active(slots, std::move(queue), std::move(residual), p_ref, plan);
      },
      Quantity::active);
  plan.leftover_p = p_ref;
  plan = refine_to_request(std::move(plan));

  walk_tree(
      [&](std::size_t seg, const std::vector<Slot>& slots, std::vector<LoadPoint> queue,
          std::vector<ResidualPart> residual) {
        return walk_reactive(slots, std::move(queue), std::move(residual), grid.segment(seg).line,
                             mode, plan);
      },
      Quantity::reactive);
  return plan;
}

DispatchPlan uniform_baseline(const IndexedGrid& grid, RegulationRequest request, double power_factor) {
  if (!(power_factor > 0.0) || power_factor > 1.0) throw DomainError("power factor must lie in (0, 1]");
  const auto order = stations_by_distance(grid);
  if (order.empty()) throw DomainError("uniform baseline needs at least one station");
  DispatchPlan plan;
  plan.p_ref = request.p_ref;
  const double share = request.p_ref / static_cast<double>(order.size());
  const double ratio = std::tan(std::acos(power_factor));
  for (std::size_t k : order) {
    StationDispatch d = dispatch_entry(station_state(grid.device(k)), k);
    d.p = share;
    d.q = share * ratio;
    d.q_cap = q_cap_for(share);
    plan.stations.push_back(std::move(d));
  }
  plan.leftover_p = request.p_ref - plan.total_p();
  return plan;
}

double audit_residuals(const DispatchPlan& plan) {
  double worst = 0.0;
  for (const auto& t : plan.trace) {
    double in = 0.0;
    double out = 0.0;
    for (const auto& h : plan.handoffs) {
      if (h.quantity != t.quantity) continue;
      if (h.to == t.station) in += h.amount;
      if (h.from == t.station) out += h.amount;
    }
    worst = std::max({worst, std::abs(in - t.seed), std::abs(out - t.residual_out),
                      std::abs(t.seed + t.delta - t.raw), std::abs(t.raw - t.assigned - t.residual_out)});
  }
  return worst;
}

std::vector<PointSource> plan_sources(const IndexedGrid& grid, const DispatchPlan& plan) {
  auto sources = load_sources(grid);
  for (const auto& st : plan.stations) {
    if (st.device >= grid.grid().devices.size() || grid.device(st.device).id != st.id) {
      throw DomainError("plan station '" + st.id + "' does not belong to this grid");
    }
    sources.push_back({grid.device_segment(st.device), st.xi, st.p, st.q});
  }
  return sources;
}

}  // namespace feederflow
