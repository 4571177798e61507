#pragma once

// Closed-form profiles of the linearized feeder equations
//
//   theta' = -s,  v' = w,  s' = (B p - G q) / Z^2,  w' = s^2 - (G p + B q) / Z^2,
//
// for point injections on one straight feeder with constant G, B
// (Z^2 = G^2 + B^2) and boundary values theta(0) = 0, v(0) = 1, s(L) = w(L) = 0.
//
// Injections are numbered from the open end toward the bank, so
// xi_1 > xi_2 > ... > xi_N > xi_{N+1} := 0. On (xi_{m+1}, xi_m) the set of
// injections beyond x is {1..m}; with the running sums
//
//   A_m = sum_{j<=m} (B P_j - G Q_j),   C_m = sum_{j<=m} (G P_j + B Q_j),
//
// the solution reads
//
//   s(x) = -A_m / Z^2
//   w(x) = A_m^2 / Z^4 (x - xi_m) + C_m / Z^2 + f_m
//   f_m  = -(1/Z^4) sum_{k<m} A_k^2 (xi_k - xi_{k+1})
//   v(x) = v(xi_{m+1}) + A_m^2 / (2 Z^4) ((x - xi_m)^2 - (xi_{m+1} - xi_m)^2)
//          + (C_m / Z^2 + f_m)(x - xi_{m+1})
//
// and s = w = 0, v = v(xi_1) beyond the farthest injection.
//
// The quadratic coefficient is the square of the running sum A_m (s^2 on
// that interval), not a sum of per-injection squares. The two readings only
// coincide for a single injection; the squared running sum is the one that
// matches direct integration of the ODE.

#include <cstddef>
#include <span>
#include <vector>

#include "feederflow/grid_model.hpp"

namespace feederflow {

struct Injection {
  double xi = 0.0;  // [km]
  double p = 0.0;   // [pu]
  double q = 0.0;   // [pu]
};

// Injections on a straight feeder. Construction sorts by descending xi and
// throws DomainError on duplicate positions or positions outside (0, L).
class PointInjectionSet {
 public:
  PointInjectionSet(std::vector<Injection> injections, LineAdmittance line, double length);

  std::span<const Injection> injections() const { return injections_; }
  LineAdmittance line() const { return line_; }
  double length() const { return length_; }

 private:
  std::vector<Injection> injections_;
  LineAdmittance line_;
  double length_;
};

// One-sided selector at an injection point; elsewhere it has no effect.
enum class Side { below, above };

class ClosedFormProfile {
 public:
  explicit ClosedFormProfile(const PointInjectionSet& set);

  double transfer_density(double x, Side side = Side::above) const;
  double gradient(double x, Side side = Side::above) const;
  double amplitude(double x) const;

  double length() const { return length_; }
  std::span<const double> positions() const { return xi_; }

 private:
  // Number of injections strictly beyond x (or at-or-beyond for Side::below).
  std::size_t beyond(double x, Side side) const;
  void check_range(double x) const;

  double z2_;
  double length_;
  std::vector<double> xi_;      // descending, xi_[m-1] = xi_m
  std::vector<double> a_;       // a_[m] = A_m, a_[0] = 0
  std::vector<double> c_;       // c_[m] = C_m
  std::vector<double> f_;       // f_[m] = f_m
  std::vector<double> v_node_;  // v_node_[m] = v(xi_m), v_node_[N+1] = 1
};

}  // namespace feederflow
