#pragma once

#include <cmath>
#include <limits>

#include "diagest/core.hpp"

namespace diagest {

namespace detail {

// Series expansion of P(a,x), accurate for x < a+1.
inline double gamma_p_series(double a, double x) {
  const double gln = std::lgamma(a);
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int it = 0; it < 100000; ++it) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * std::numeric_limits<double>::epsilon())
      return sum * std::exp(-x + a * std::log(x) - gln);
  }
  throw numerical_error("reg_lower_gamma: series did not converge");
}

// Continued fraction for Q(a,x) = 1 - P(a,x), modified Lentz; for x >= a+1.
inline double gamma_q_contfrac(double a, double x) {
  const double gln = std::lgamma(a);
  const double eps = std::numeric_limits<double>::epsilon();
  const double fpmin = std::numeric_limits<double>::min() / eps;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 100000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= eps)
      return std::exp(-x + a * std::log(x) - gln) * h;
  }
  throw numerical_error("reg_lower_gamma: continued fraction did not converge");
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a).
/// Series for x < a+1, continued fraction otherwise.
inline double reg_lower_gamma(double a, double x) {
  detail::require(a > 0.0 && std::isfinite(a), "reg_lower_gamma: a must be > 0");
  detail::require(x >= 0.0 && std::isfinite(x), "reg_lower_gamma: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_contfrac(a, x);
}

struct AlphaSupResult {
  double alpha = 0.0;
  /// True when P(s/2, s/2) <= delta, i.e. the sup would be >= 1 and the
  /// value was clamped to 1 - 1e-12.
  bool clamped = false;
};

/// sup{alpha in (0,1): P(s/2, alpha*s/2) <= delta}, by bisection on the
/// monotone map alpha -> P(s/2, alpha*s/2).
inline AlphaSupResult alpha_sup_detail(long s, double delta) {
  detail::require(s >= 1, "alpha_sup: s must be >= 1");
  detail::require(delta > 0.0 && delta < 1.0, "alpha_sup: delta must be in (0,1)");
  const double a = 0.5 * static_cast<double>(s);
  const double hi_cap = 1.0 - 1e-12;
  if (reg_lower_gamma(a, a * hi_cap) <= delta) return {hi_cap, true};
  double lo = 1e-16;
  double hi = hi_cap;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (reg_lower_gamma(a, a * mid) <= delta)
      lo = mid;
    else
      hi = mid;
  }
  // lo is the largest tested point satisfying the defining inequality.
  return {lo, false};
}

inline double alpha_sup(long s, double delta) { return alpha_sup_detail(s, delta).alpha; }

}  // namespace diagest
