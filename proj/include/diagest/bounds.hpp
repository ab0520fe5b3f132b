#pragma once

#include <cmath>
#include <limits>

#include "diagest/core.hpp"
#include "diagest/linop.hpp"
#include "diagest/probes.hpp"
#include "diagest/specfun.hpp"

namespace diagest {

/// Probabilistic error budget: accuracy eps, failure probability delta,
/// problem dimension n. eps is the absolute threshold of the query-count
/// bound; callers working with relative targets (where eps lives in (0,1))
/// convert before building one, so the absolute value may exceed 1.
template <typename Scalar>
struct ErrorBudget {
  Scalar eps;
  Scalar delta;
  Index n;

  ErrorBudget(Scalar eps_, Scalar delta_, Index n_) : eps(eps_), delta(delta_), n(n_) {
    detail::require(eps > 0 && std::isfinite(static_cast<double>(eps)),
                    "ErrorBudget: eps must be > 0");
    detail::require(delta > 0 && delta < 1, "ErrorBudget: delta must be in (0,1)");
    detail::require(n >= 1, "ErrorBudget: n must be >= 1");
  }
};

using ErrorBudgetD = ErrorBudget<double>;

namespace detail {
constexpr long long kCountSaturation = (1LL << 62);

inline long long saturating_count(double m_real) {
  if (!(m_real > 1.0)) return 1;
  if (m_real >= static_cast<double>(kCountSaturation)) return kCountSaturation;
  return static_cast<long long>(std::ceil(m_real));
}
}  // namespace detail

/// Query-count lower bound driving the adaptive loop:
///   m >= 1 + 2 log(sqrt(2/pi) n F / (eps delta)) / log(1 + eps^2/F^2),
/// with F the Frobenius norm of the off-diagonal part of the estimated
/// matrix. F = 0 means the remainder is diagonal and one probe is exact.
template <typename Scalar>
long long g_query_count(const ErrorBudget<Scalar>& budget, Scalar b_off_fro) {
  detail::require(b_off_fro >= 0, "g_query_count: b_off_fro must be >= 0");
  const double f = static_cast<double>(b_off_fro);
  if (f == 0.0) return 1;
  const double eps = static_cast<double>(budget.eps);
  const double num =
      std::log(std::sqrt(2.0 / M_PI) * static_cast<double>(budget.n) * f /
               (eps * static_cast<double>(budget.delta)));
  const double den = std::log1p(eps * eps / (f * f));
  return detail::saturating_count(1.0 + 2.0 * num / den);
}

/// Surrogate total cost 2k + g(sqrt(max(surrogate_arg, 0))); surrogate_arg is
/// the caller-maintained squared-Frobenius proxy for the off-diagonal
/// remainder. Non-positive arguments clamp to the exactness case (g = 1).
template <typename Scalar>
Scalar surrogate_matvecs(Index k, const ErrorBudget<Scalar>& budget, Scalar surrogate_arg) {
  detail::require(k >= 0, "surrogate_matvecs: k must be >= 0");
  const Scalar f = std::sqrt(std::max<Scalar>(surrogate_arg, 0));
  return Scalar(2 * k) + static_cast<Scalar>(g_query_count(budget, f));
}

/// Per-entry Markov bound: m >= (1/(eps^2 delta)) (1 + ||B_{i,:}||^2 / B_ii^2).
template <typename Scalar>
long long lemma21_bound(const ErrorBudget<Scalar>& budget, Scalar row_norm_sq, Scalar diag_sq) {
  detail::require(row_norm_sq >= 0, "lemma21_bound: row_norm_sq must be >= 0");
  if (diag_sq <= 0) throw invalid_input("lemma21_bound: zero diagonal entry, bound undefined");
  const double v = (1.0 + static_cast<double>(row_norm_sq) / static_cast<double>(diag_sq)) /
                   (static_cast<double>(budget.eps) * static_cast<double>(budget.eps) *
                    static_cast<double>(budget.delta));
  return detail::saturating_count(v);
}

/// Union-bound version summed over rows of a dense matrix.
template <typename Scalar>
long long corollary22_bound(const ErrorBudget<Scalar>& budget, const MatrixX<Scalar>& b) {
  detail::require(b.rows() == b.cols(), "corollary22_bound: matrix must be square");
  double sum = 0.0;
  for (Index i = 0; i < b.rows(); ++i) {
    const double dii = static_cast<double>(b(i, i));
    if (dii == 0.0)
      throw invalid_input("corollary22_bound: zero diagonal entry in row " + std::to_string(i));
    sum += 1.0 + static_cast<double>(b.row(i).squaredNorm()) / (dii * dii);
  }
  const double v = sum / (static_cast<double>(budget.eps) * static_cast<double>(budget.eps) *
                          static_cast<double>(budget.delta));
  return detail::saturating_count(v);
}

/// Asymptotic diagnostic 64 (e log n)^3 ||B||_F^2 / (eps^2 delta); not used
/// by the adaptive loop.
template <typename Scalar>
Scalar lemma23_bound(const ErrorBudget<Scalar>& budget, Scalar b_fro) {
  detail::require(b_fro >= 0, "lemma23_bound: b_fro must be >= 0");
  const double eln = M_E * std::log(static_cast<double>(budget.n));
  const double v = 64.0 * eln * eln * eln * static_cast<double>(b_fro) *
                   static_cast<double>(b_fro) /
                   (static_cast<double>(budget.eps) * static_cast<double>(budget.eps) *
                    static_cast<double>(budget.delta));
  return static_cast<Scalar>(v);
}

/// Reference-only asymptotic comparator ceil(log(n/delta)/eps^2), implied
/// constant fixed at 1 (non-rigorous).
template <typename Scalar>
long long baston_reference_bound(const ErrorBudget<Scalar>& budget) {
  const double v = std::log(static_cast<double>(budget.n) / static_cast<double>(budget.delta)) /
                   (static_cast<double>(budget.eps) * static_cast<double>(budget.eps));
  return detail::saturating_count(v);
}

/// High-probability over-estimate of ||B||_F^2 from k probe applications:
/// (1/(k alpha)) sum_i ||B w_i||^2 with alpha = alpha_sup(k, delta); exceeds
/// ||B||_F^2 with probability >= 1 - delta.
template <typename Scalar>
Scalar frobenius_sq_upper(const LinearOperator<Scalar>& op, ProbeStream<Scalar>& probes,
                          Index k, Scalar delta) {
  detail::require(k >= 1, "frobenius_sq_upper: k must be >= 1");
  Scalar sum = 0;
  for (Index i = 0; i < k; ++i) sum += op.apply(probes.next()).squaredNorm();
  const double a = alpha_sup(static_cast<long>(k), static_cast<double>(delta));
  return sum / (static_cast<Scalar>(k) * static_cast<Scalar>(a));
}

}  // namespace diagest
