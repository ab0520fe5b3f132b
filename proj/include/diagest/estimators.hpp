#pragma once

#include <Eigen/QR>
#include <optional>
#include <string>
#include <vector>

#include "diagest/core.hpp"
#include "diagest/linop.hpp"
#include "diagest/probes.hpp"

namespace diagest {

/// Running numerator/denominator of the ratio estimator
/// [sum_i w_i .* (A w_i)] ./ [sum_i w_i .* w_i].
///
/// Accumulation is a serial reduction; probe applications may run
/// concurrently, but results are bitwise reproducible only under a fixed
/// reduction order, which is what every estimator here uses.
template <typename Scalar>
class DiagAccumulator {
 public:
  explicit DiagAccumulator(Index dim)
      : mole_(VectorX<Scalar>::Zero(dim)), deno_(VectorX<Scalar>::Zero(dim)), count_(0) {}

  void add(const Eigen::Ref<const VectorX<Scalar>>& probe,
           const Eigen::Ref<const VectorX<Scalar>>& applied) {
    mole_ += probe.cwiseProduct(applied);
    deno_ += probe.cwiseProduct(probe);
    ++count_;
  }

  const VectorX<Scalar>& mole() const { return mole_; }
  const VectorX<Scalar>& deno() const { return deno_; }
  Index count() const { return count_; }

  VectorX<Scalar> estimate() const {
    for (Index i = 0; i < deno_.size(); ++i)
      if (std::abs(deno_[i]) < Scalar(1e-300))
        throw numerical_error("DiagAccumulator: degenerate denominator at entry " +
                              std::to_string(i));
    return mole_.cwiseQuotient(deno_);
  }

 private:
  VectorX<Scalar> mole_;
  VectorX<Scalar> deno_;
  Index count_;
};

enum class Method {
  exact,
  bekas,
  generalized,
  projected,
  prototype,
  adaptive,
  diagpp,
  xdiag_gaussian,
  xdiag_rademacher,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::bekas: return "bekas";
    case Method::generalized: return "generalized";
    case Method::projected: return "projected";
    case Method::prototype: return "prototype";
    case Method::adaptive: return "adaptive";
    case Method::diagpp: return "diagpp";
    case Method::xdiag_gaussian: return "xdiag-g";
    case Method::xdiag_rademacher: return "xdiag-r";
  }
  return "?";
}

template <typename Scalar>
struct EstimateResult {
  VectorX<Scalar> diagonal;
  long long matvecs_used = 0;
  Method method = Method::bekas;
  /// Deflation split, when the method has one.
  std::optional<VectorX<Scalar>> d_defl;
  std::optional<VectorX<Scalar>> d_rem;
  std::vector<std::string> warnings;
};

namespace detail {

/// Columns of op applied to each column of the block.
template <typename Scalar>
MatrixX<Scalar> apply_columns(const LinearOperator<Scalar>& op, const MatrixX<Scalar>& block) {
  MatrixX<Scalar> out(op.dim(), block.cols());
  for (Index j = 0; j < block.cols(); ++j) out.col(j) = op.apply(block.col(j));
  return out;
}

template <typename Scalar>
MatrixX<Scalar> apply_transpose_columns(const LinearOperator<Scalar>& op,
                                        const MatrixX<Scalar>& block) {
  MatrixX<Scalar> out(op.dim(), block.cols());
  for (Index j = 0; j < block.cols(); ++j) {
    out.col(j) = op.is_symmetric() ? op.apply(block.col(j)) : op.apply_transpose(block.col(j));
  }
  return out;
}

/// Rank-revealing orthonormal basis of range(Y) via column-pivoted QR.
template <typename Scalar>
MatrixX<Scalar> orth_columns(const MatrixX<Scalar>& y) {
  if (y.cols() == 0) return MatrixX<Scalar>(y.rows(), 0);
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(y);
  const Index r = qr.rank();
  if (r == 0) return MatrixX<Scalar>(y.rows(), 0);
  MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(y.rows(), r);
  return q;
}

/// diag(M N^T) without forming the n x n product.
template <typename Scalar>
VectorX<Scalar> rowwise_dot(const MatrixX<Scalar>& m, const MatrixX<Scalar>& n) {
  return m.cwiseProduct(n).rowwise().sum();
}

}  // namespace detail

/// The baseline ratio estimator: diag(A) ~= [sum w.*(Aw)] ./ [sum w.*w],
/// m probes, m matvecs.
template <typename Scalar>
EstimateResult<Scalar> bekas_estimate(const LinearOperator<Scalar>& op,
                                      ProbeStream<Scalar>& probes, Index m) {
  detail::require(m >= 1, "bekas_estimate: m must be >= 1");
  DiagAccumulator<Scalar> acc(op.dim());
  for (Index i = 0; i < m; ++i) {
    VectorX<Scalar> w = probes.next();
    acc.add(w, op.apply(w));
  }
  EstimateResult<Scalar> res;
  res.diagonal = acc.estimate();
  res.matvecs_used = m;
  res.method = Method::bekas;
  return res;
}

/// Mean estimator (1/m) sum w.*(Aw); coincides with bekas_estimate for
/// Rademacher probes (deno = m*1 exactly).
template <typename Scalar>
EstimateResult<Scalar> generalized_estimate(const LinearOperator<Scalar>& op,
                                            ProbeStream<Scalar>& probes, Index m) {
  detail::require(m >= 1, "generalized_estimate: m must be >= 1");
  VectorX<Scalar> sum = VectorX<Scalar>::Zero(op.dim());
  for (Index i = 0; i < m; ++i) {
    VectorX<Scalar> w = probes.next();
    sum += w.cwiseProduct(op.apply(w));
  }
  EstimateResult<Scalar> res;
  res.diagonal = sum / static_cast<Scalar>(m);
  res.matvecs_used = m;
  res.method = Method::generalized;
  return res;
}

/// Projection-based estimator: Q = orth(A*Omega) from a k-column Gaussian
/// sketch, d_defl = diag((AQ)Q^T) exact, remainder estimated on A(I-QQ^T)
/// with m probes. 2k + m matvecs (k + rank + m if the sketch is deficient).
template <typename Scalar>
EstimateResult<Scalar> projected_estimate(const LinearOperator<Scalar>& op, Index k, Index m,
                                          ProbeStream<Scalar>& probes) {
  detail::require(k >= 0, "projected_estimate: k must be >= 0");
  detail::require(m >= 1, "projected_estimate: m must be >= 1");
  detail::require(k <= op.dim(), "projected_estimate: k exceeds dimension");
  const Index n = op.dim();
  EstimateResult<Scalar> res;
  res.method = Method::projected;

  MatrixX<Scalar> omega = probes.block(k);
  MatrixX<Scalar> y = detail::apply_columns(op, omega);
  MatrixX<Scalar> q = detail::orth_columns(y);
  if (q.cols() < k)
    res.warnings.push_back("sketch rank " + std::to_string(q.cols()) + " below requested k " +
                           std::to_string(k) + "; proceeding with the smaller basis");
  MatrixX<Scalar> aq = detail::apply_columns(op, q);
  VectorX<Scalar> d_defl = detail::rowwise_dot(aq, q);

  DiagAccumulator<Scalar> acc(n);
  for (Index i = 0; i < m; ++i) {
    VectorX<Scalar> w = probes.next();
    VectorX<Scalar> yv = w;
    if (q.cols() > 0) yv -= q * (q.transpose() * w);
    acc.add(w, op.apply(yv));
  }
  VectorX<Scalar> d_rem = acc.estimate();

  res.diagonal = d_defl + d_rem;
  res.matvecs_used = k + q.cols() + m;
  res.d_defl = std::move(d_defl);
  res.d_rem = std::move(d_rem);
  return res;
}

/// Fixed-split estimator with total budget mt: k = floor(mt/3) sketch
/// columns, the remaining mt - 2k probes on the doubly projected remainder
/// (I-QQ^T) A (I-QQ^T); the deflated part diag(QQ^T A QQ^T) is exact.
template <typename Scalar>
EstimateResult<Scalar> diagpp_estimate(const LinearOperator<Scalar>& op, Index mt,
                                       ProbeStream<Scalar>& probes) {
  detail::require(mt >= 3, "diagpp_estimate: total budget must be >= 3");
  const Index n = op.dim();
  const Index k = std::min<Index>(mt / 3, n);
  EstimateResult<Scalar> res;
  res.method = Method::diagpp;

  MatrixX<Scalar> omega = probes.block(k);
  MatrixX<Scalar> y = detail::apply_columns(op, omega);
  MatrixX<Scalar> q = detail::orth_columns(y);
  if (q.cols() < k) res.warnings.push_back("diagpp sketch rank below budget split");
  MatrixX<Scalar> aq = detail::apply_columns(op, q);
  MatrixX<Scalar> core = q.transpose() * aq;  // Q^T A Q
  VectorX<Scalar> d_defl = detail::rowwise_dot(MatrixX<Scalar>(q * core), q);

  const Index m_probe = mt - k - q.cols();  // budget remainder goes to probes
  DiagAccumulator<Scalar> acc(n);
  for (Index i = 0; i < m_probe; ++i) {
    VectorX<Scalar> w = probes.next();
    VectorX<Scalar> yv = w - q * (q.transpose() * w);
    VectorX<Scalar> z = op.apply(yv);
    acc.add(w, VectorX<Scalar>(z - q * (q.transpose() * z)));
  }
  VectorX<Scalar> d_rem = acc.estimate();

  res.diagonal = d_defl + d_rem;
  res.matvecs_used = k + q.cols() + m_probe;
  res.d_defl = std::move(d_defl);
  res.d_rem = std::move(d_rem);
  return res;
}

/// Leave-one-out estimator: s = mt/2 probe columns; each probe i is deflated
/// against Q_(i) = orth(A*Omega_{-i}) and the per-probe terms
/// diag(Q_(i)Q_(i)^T A) + [w .* (I - Q_(i)Q_(i)^T)(Aw)] ./ [w .* w]
/// are averaged. A^T actions on the bases are recovered from the single
/// sketch W = A^T Y (plain applies when the operator is symmetric, explicit
/// transpose applies otherwise; both counted), so the total cost is mt.
template <typename Scalar>
EstimateResult<Scalar> xdiag_estimate(const LinearOperator<Scalar>& op, Index mt,
                                      ProbeStream<Scalar>& probes) {
  detail::require(mt >= 2 && mt % 2 == 0, "xdiag_estimate: budget must be even and >= 2");
  const Index n = op.dim();
  const Index s = mt / 2;
  EstimateResult<Scalar> res;
  res.method = probes.distribution() == ProbeDistribution::gaussian ? Method::xdiag_gaussian
                                                                    : Method::xdiag_rademacher;

  MatrixX<Scalar> omega = probes.block(s);
  MatrixX<Scalar> y = detail::apply_columns(op, omega);
  MatrixX<Scalar> w = detail::apply_transpose_columns(op, y);  // A^T Y

  VectorX<Scalar> acc = VectorX<Scalar>::Zero(n);
  MatrixX<Scalar> yi(n, s - 1), wi(n, s - 1);
  for (Index i = 0; i < s; ++i) {
    Index c = 0;
    for (Index j = 0; j < s; ++j) {
      if (j == i) continue;
      yi.col(c) = y.col(j);
      wi.col(c) = w.col(j);
      ++c;
    }
    VectorX<Scalar> probe = omega.col(i);
    for (Index e = 0; e < n; ++e)
      if (probe[e] * probe[e] < Scalar(1e-300))
        throw numerical_error("xdiag_estimate: zero probe entry " + std::to_string(e));

    if (s == 1) {
      acc += probe.cwiseProduct(y.col(i)).cwiseQuotient(probe.cwiseProduct(probe));
      continue;
    }
    // Pivoted thin QR of Y_{-i}: Y P = Q [R1 R2], Q = Y P1 R1^{-1}, so
    // A^T Q = (W P1) R1^{-1} with no further operator applies.
    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(yi);
    const Index r = qr.rank();
    VectorX<Scalar> term = VectorX<Scalar>::Zero(n);
    VectorX<Scalar> proj = y.col(i);
    if (r > 0) {
      MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(n, r);
      MatrixX<Scalar> r1 = qr.matrixR().topLeftCorner(r, r);
      const auto& perm = qr.colsPermutation().indices();
      MatrixX<Scalar> wp(n, r);
      for (Index j = 0; j < r; ++j) wp.col(j) = wi.col(perm[j]);
      MatrixX<Scalar> atq =
          r1.template triangularView<Eigen::Upper>().template solve<Eigen::OnTheRight>(wp);
      term = detail::rowwise_dot(q, atq);  // diag(Q Q^T A)
      proj -= q * (q.transpose() * y.col(i));
    }
    acc += term + probe.cwiseProduct(proj).cwiseQuotient(probe.cwiseProduct(probe));
  }

  res.diagonal = acc / static_cast<Scalar>(s);
  res.matvecs_used = 2 * s;
  return res;
}

/// Exact diagonal through n basis-vector queries; test/benchmark oracle for
/// implicit operators.
template <typename Scalar>
EstimateResult<Scalar> exact_diagonal(const LinearOperator<Scalar>& op) {
  const Index n = op.dim();
  VectorX<Scalar> d(n);
  VectorX<Scalar> e = VectorX<Scalar>::Zero(n);
  for (Index i = 0; i < n; ++i) {
    e[i] = Scalar(1);
    d[i] = op.apply(e)[i];
    e[i] = Scalar(0);
  }
  EstimateResult<Scalar> res;
  res.diagonal = std::move(d);
  res.matvecs_used = n;
  res.method = Method::exact;
  return res;
}

}  // namespace diagest
