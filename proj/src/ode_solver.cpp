#include "feederflow/ode_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "feederflow/errors.hpp"

namespace feederflow {

namespace {

void check_inputs(const IndexedGrid& grid, const DensityField& densities,
                  const SolverSettings& settings) {
  if (!(settings.tolerance > 0.0)) throw DomainError("solver tolerance must be positive");
  if (settings.max_sweeps < 1) throw DomainError("max sweeps must be at least 1");
  if (settings.order != 2) throw DomainError("only the second-order scheme is available");
  const auto& mesh = densities.mesh;
  if (mesh.segments.size() != grid.segment_count() || densities.p.size() != grid.segment_count() ||
      densities.q.size() != grid.segment_count()) {
    throw DomainError("densities are not sampled on this grid");
  }
  for (std::size_t s = 0; s < mesh.segments.size(); ++s) {
    const auto& m = mesh.segments[s];
    if (m.intervals == 0 || densities.p[s].size() != m.nodes() || densities.q[s].size() != m.nodes()) {
      throw DomainError("density sample count does not match mesh");
    }
    if (m.step() > 0.5 * densities.sigma + 1e-12) {
      throw DomainError("mesh step exceeds sigma/2 on segment '" + grid.segment(s).id + "'");
    }
  }
}

}  // namespace

namespace detail {

VoltageProfile initial_profile(const IndexedGrid& grid, const DensityField& densities,
                               const SolverSettings& settings) {
  VoltageProfile profile;
  profile.segments.resize(grid.segment_count());
  for (std::size_t s = 0; s < grid.segment_count(); ++s) {
    const auto& m = densities.mesh.segments[s];
    auto& seg = profile.segments[s];
    seg.segment_id = grid.segment(s).id;
    seg.x.resize(m.nodes());
    for (std::size_t k = 0; k < m.nodes(); ++k) seg.x[k] = m.x(k);
    seg.theta.assign(m.nodes(), settings.bank_phase);
    seg.v.assign(m.nodes(), 1.0);
    seg.s.assign(m.nodes(), 0.0);
    seg.w.assign(m.nodes(), 0.0);
  }
  return profile;
}

double sweep_iteration(const IndexedGrid& grid, const DensityField& densities, OdeModel model,
                       const SolverSettings& settings, VoltageProfile& profile) {
  const auto& order = grid.topo_order();
  const bool linear = model == OdeModel::linearized;

  // Backward: open ends toward the bank.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t seg = *it;
    const auto& line = grid.segment(seg).line;
    const double z2 = line.z2();
    const auto& p = densities.p[seg];
    const auto& q = densities.q[seg];
    auto& prof = profile.segments[seg];
    const std::size_t n = densities.mesh.segments[seg].intervals;
    const double h = densities.mesh.segments[seg].step();

    double s_end = 0.0;
    double w_end = 0.0;
    for (std::size_t child : grid.children(seg)) {
      s_end += profile.segments[child].s.front();
      w_end += profile.segments[child].w.front();
    }

    auto ds = [&](std::size_t k) { return (line.b * p[k] - line.g * q[k]) / z2; };
    prof.s[n] = s_end;
    for (std::size_t k = n; k-- > 0;) prof.s[k] = prof.s[k + 1] - 0.5 * h * (ds(k) + ds(k + 1));

    auto dw = [&](std::size_t k) {
      const double sk = prof.s[k];
      const double load = (line.g * p[k] + line.b * q[k]) / z2;
      if (linear) return sk * sk - load;
      const double vk = prof.v[k];
      return sk * sk / (vk * vk * vk) - load / vk;
    };
    prof.w[n] = w_end;
    for (std::size_t k = n; k-- > 0;) prof.w[k] = prof.w[k + 1] - 0.5 * h * (dw(k) + dw(k + 1));
  }

  // Forward: bank outward.
  double change = 0.0;
  double v_min = INFINITY;
  for (std::size_t seg : order) {
    auto& prof = profile.segments[seg];
    const std::size_t n = densities.mesh.segments[seg].intervals;
    const double h = densities.mesh.segments[seg].step();
    double v0 = 1.0;
    double theta0 = settings.bank_phase;
    if (const auto parent = grid.parent(seg)) {
      v0 = profile.segments[*parent].v.back();
      theta0 = profile.segments[*parent].theta.back();
    }
    double v_prev = v0;
    change = std::max(change, std::abs(v0 - prof.v[0]));
    prof.v[0] = v0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v_next = v_prev + 0.5 * h * (prof.w[k] + prof.w[k + 1]);
      change = std::max(change, std::abs(v_next - prof.v[k + 1]));
      prof.v[k + 1] = v_next;
      v_prev = v_next;
    }
    for (double v : prof.v) v_min = std::min(v_min, v);

    auto dtheta = [&](std::size_t k) {
      if (linear) return -prof.s[k];
      return -prof.s[k] / (prof.v[k] * prof.v[k]);
    };
    prof.theta[0] = theta0;
    for (std::size_t k = 0; k < n; ++k) {
      prof.theta[k + 1] = prof.theta[k] + 0.5 * h * (dtheta(k) + dtheta(k + 1));
    }
  }

  if (!(v_min >= settings.collapse_voltage)) {
    throw SolverError("voltage collapse region", 0, change);
  }
  return change;
}

VoltageProfile solve(const IndexedGrid& grid, const DensityField& densities, OdeModel model,
                     const SolverSettings& settings) {
  check_inputs(grid, densities, settings);
  VoltageProfile profile = initial_profile(grid, densities, settings);
  auto& diag = profile.diagnostics;
  for (int sweep = 1; sweep <= settings.max_sweeps; ++sweep) {
    double change = 0.0;
    try {
      change = sweep_iteration(grid, densities, model, settings, profile);
    } catch (const SolverError& e) {
      throw SolverError(e.what(), sweep, e.last_change());
    }
    diag.sweeps = sweep;
    diag.last_change = change;
    diag.change_history.push_back(change);
    if (!std::isfinite(change)) throw SolverError("non-finite voltage during sweeps", sweep, change);
    if (change <= settings.tolerance) {
      diag.boundary_residual = boundary_residual(grid, profile, settings.bank_phase);
      diag.junction_residual = junction_residual(grid, profile);
      return profile;
    }
  }
  std::ostringstream msg;
  msg << "sweep did not converge within " << settings.max_sweeps << " sweeps (last change "
      << diag.last_change << " pu)";
  throw SolverError(msg.str(), diag.sweeps, diag.last_change);
}

}  // namespace detail

VoltageProfile solve_nonlinear(const IndexedGrid& grid, const DensityField& densities,
                               const SolverSettings& settings) {
  return detail::solve(grid, densities, OdeModel::nonlinear, settings);
}

VoltageProfile solve_linearized(const IndexedGrid& grid, const DensityField& densities,
                                const SolverSettings& settings) {
  if (!grid.is_single_feeder()) throw DomainError("linearized solve requires a single straight feeder");
  return detail::solve(grid, densities, OdeModel::linearized, settings);
}

double boundary_residual(const IndexedGrid& grid, const VoltageProfile& profile, double bank_phase) {
  double r = 0.0;
  for (std::size_t seg = 0; seg < grid.segment_count(); ++seg) {
    const auto& prof = profile.segments[seg];
    if (!grid.parent(seg)) {
      r = std::max({r, std::abs(prof.v.front() - 1.0), std::abs(prof.theta.front() - bank_phase)});
    }
    if (grid.is_terminal(seg)) r = std::max({r, std::abs(prof.s.back()), std::abs(prof.w.back())});
  }
  return r;
}

double junction_residual(const IndexedGrid& grid, const VoltageProfile& profile) {
  double r = 0.0;
  for (std::size_t seg = 0; seg < grid.segment_count(); ++seg) {
    if (grid.is_terminal(seg)) continue;
    const auto& up = profile.segments[seg];
    double s_sum = 0.0;
    double w_sum = 0.0;
    for (std::size_t child : grid.children(seg)) {
      const auto& down = profile.segments[child];
      s_sum += down.s.front();
      w_sum += down.w.front();
      r = std::max({r, std::abs(up.v.back() - down.v.front()), std::abs(up.theta.back() - down.theta.front())});
    }
    r = std::max({r, std::abs(up.s.back() - s_sum), std::abs(up.w.back() - w_sum)});
  }
  return r;
}

}  // namespace feederflow
