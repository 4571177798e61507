#include "feederflow/analytic.hpp"

#include <algorithm>
#include <cmath>

#include "feederflow/errors.hpp"

namespace feederflow {

PointInjectionSet::PointInjectionSet(std::vector<Injection> injections, LineAdmittance line,
                                     double length)
    : injections_(std::move(injections)), line_(line), length_(length) {
  if (!(length_ > 0.0)) throw DomainError("feeder length must be positive");
  if (!(line_.z2() > 0.0)) throw DomainError("degenerate conductor");
  std::stable_sort(injections_.begin(), injections_.end(),
                   [](const Injection& a, const Injection& b) { return a.xi > b.xi; });
  for (std::size_t i = 0; i < injections_.size(); ++i) {
    const double xi = injections_[i].xi;
    if (!(xi > 0.0) || !(xi < length_)) throw DomainError("injection position outside (0, L)");
    if (i > 0 && !(xi < injections_[i - 1].xi)) throw DomainError("duplicate injection position");
  }
}

ClosedFormProfile::ClosedFormProfile(const PointInjectionSet& set)
    : z2_(set.line().z2()), length_(set.length()) {
  const auto inj = set.injections();
  const double g = set.line().g;
  const double b = set.line().b;
  const std::size_t n = inj.size();
  const double z4 = z2_ * z2_;

  xi_.reserve(n);
  for (const auto& j : inj) xi_.push_back(j.xi);

  a_.assign(n + 1, 0.0);
  c_.assign(n + 1, 0.0);
  for (std::size_t m = 1; m <= n; ++m) {
    a_[m] = a_[m - 1] + (b * inj[m - 1].p - g * inj[m - 1].q);
    c_[m] = c_[m - 1] + (g * inj[m - 1].p + b * inj[m - 1].q);
  }

  f_.assign(n + 1, 0.0);
  for (std::size_t m = 2; m <= n; ++m) {
    f_[m] = f_[m - 1] - a_[m - 1] * a_[m - 1] * (xi_[m - 2] - xi_[m - 1]) / z4;
  }

  // Recursion anchored at the bank: v(xi_{N+1}) = v(0) = 1.
  v_node_.assign(n + 2, 1.0);
  for (std::size_t m = n; m >= 1; --m) {
    const double lower = (m == n) ? 0.0 : xi_[m];
    const double upper = xi_[m - 1];
    const double d = lower - upper;
    v_node_[m] = v_node_[m + 1] - a_[m] * a_[m] / (2.0 * z4) * d * d +
                 (c_[m] / z2_ + f_[m]) * (upper - lower);
  }
}

void ClosedFormProfile::check_range(double x) const {
  if (!(x >= 0.0) || !(x <= length_)) throw DomainError("evaluation point outside [0, L]");
}

std::size_t ClosedFormProfile::beyond(double x, Side side) const {
  // xi_ is descending: count leading entries with xi > x (or >= x).
  const auto it = side == Side::above
                      ? std::partition_point(xi_.begin(), xi_.end(), [x](double xi) { return xi > x; })
                      : std::partition_point(xi_.begin(), xi_.end(), [x](double xi) { return xi >= x; });
  return static_cast<std::size_t>(it - xi_.begin());
}

double ClosedFormProfile::transfer_density(double x, Side side) const {
  check_range(x);
  return -a_[beyond(x, side)] / z2_;
}

double ClosedFormProfile::gradient(double x, Side side) const {
  check_range(x);
  const std::size_t m = beyond(x, side);
  if (m == 0) return 0.0;
  return a_[m] * a_[m] / (z2_ * z2_) * (x - xi_[m - 1]) + c_[m] / z2_ + f_[m];
}

double ClosedFormProfile::amplitude(double x) const {
  check_range(x);
  const std::size_t m = beyond(x, Side::above);
  if (m == 0) return v_node_[1];
  const double upper = xi_[m - 1];
  const double lower = (m == xi_.size()) ? 0.0 : xi_[m];
  const double du = x - upper;
  const double dl = lower - upper;
  return v_node_[m + 1] + a_[m] * a_[m] / (2.0 * z2_ * z2_) * (du * du - dl * dl) +
         (c_[m] / z2_ + f_[m]) * (x - lower);
}

}  // namespace feederflow
