#pragma once

#include <Eigen/SparseCore>
#include <atomic>
#include <memory>
#include <string>
#include <utility>

#include "diagest/basis.hpp"
#include "diagest/core.hpp"

namespace diagest {

/// An implicit n x n real matrix exposing matrix-vector products.
///
/// apply() is the only costed operation: each call bumps this operator's
/// matvec counter by one (composite operators additionally bump the counters
/// of the operators they touch). The counter is atomic so batches of applies
/// may run from concurrent workers; everything else is immutable after
/// construction.
template <typename Scalar>
class LinearOperator {
 public:
  LinearOperator(Index dim, std::string name) : dim_(dim), name_(std::move(name)) {
    detail::require(dim >= 1, "LinearOperator: dim must be >= 1");
  }
  virtual ~LinearOperator() = default;

  LinearOperator(const LinearOperator&) = delete;
  LinearOperator& operator=(const LinearOperator&) = delete;

  Index dim() const { return dim_; }
  const std::string& name() const { return name_; }

  long long matvec_count() const { return count_.load(std::memory_order_relaxed); }
  void reset_matvec_count() { count_.store(0, std::memory_order_relaxed); }

  VectorX<Scalar> apply(const Eigen::Ref<const VectorX<Scalar>>& v) const {
    check_input(v);
    VectorX<Scalar> out = apply_impl(v);
    count_.fetch_add(1, std::memory_order_relaxed);
    check_output(out);
    return out;
  }

  /// Action of the transpose, counted like a plain apply. Only some
  /// operators support it; see has_transpose().
  VectorX<Scalar> apply_transpose(const Eigen::Ref<const VectorX<Scalar>>& v) const {
    check_input(v);
    if (!has_transpose())
      throw invalid_input("operator '" + name_ + "' has no transpose action");
    VectorX<Scalar> out = apply_transpose_impl(v);
    count_.fetch_add(1, std::memory_order_relaxed);
    check_output(out);
    return out;
  }

  virtual bool has_transpose() const { return false; }
  virtual bool is_symmetric() const { return false; }

 protected:
  virtual VectorX<Scalar> apply_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const = 0;
  virtual VectorX<Scalar> apply_transpose_impl(const Eigen::Ref<const VectorX<Scalar>>&) const {
    throw invalid_input("operator '" + name_ + "' has no transpose action");
  }

 private:
  void check_input(const Eigen::Ref<const VectorX<Scalar>>& v) const {
    if (v.size() != dim_)
      throw invalid_input("operator '" + name_ + "': input length " +
                          std::to_string(v.size()) + " != dim " + std::to_string(dim_));
    if (!v.allFinite())
      throw invalid_input("operator '" + name_ + "': non-finite input entries");
  }
  void check_output(const VectorX<Scalar>& out) const {
    if (!out.allFinite())
      throw numerical_error("operator '" + name_ + "' produced non-finite output");
  }

  Index dim_;
  std::string name_;
  mutable std::atomic<long long> count_{0};
};

/// Dense matrix operator; the reference implementation all estimators are
/// tested against.
template <typename Scalar>
class DenseOperator : public LinearOperator<Scalar> {
 public:
  explicit DenseOperator(MatrixX<Scalar> a, std::string name = "dense")
      : LinearOperator<Scalar>(a.rows(), std::move(name)), a_(std::move(a)) {
    detail::require(a_.rows() == a_.cols(), "DenseOperator: matrix must be square");
    detail::require(a_.allFinite(), "DenseOperator: matrix has non-finite entries");
    symmetric_ = (a_ - a_.transpose()).cwiseAbs().maxCoeff() <=
                 Scalar(1e-12) * (Scalar(1) + a_.cwiseAbs().maxCoeff());
  }

  const MatrixX<Scalar>& matrix() const { return a_; }
  VectorX<Scalar> diagonal() const { return a_.diagonal(); }
  Scalar frobenius_norm_sq() const { return a_.squaredNorm(); }

  bool has_transpose() const override { return true; }
  bool is_symmetric() const override { return symmetric_; }

 protected:
  VectorX<Scalar> apply_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return a_ * v;
  }
  VectorX<Scalar> apply_transpose_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return a_.transpose() * v;
  }

 private:
  MatrixX<Scalar> a_;
  bool symmetric_;
};

template <typename Scalar>
class DiagonalOperator : public LinearOperator<Scalar> {
 public:
  explicit DiagonalOperator(VectorX<Scalar> d)
      : LinearOperator<Scalar>(d.size(), "diagonal"), d_(std::move(d)) {
    detail::require(d_.allFinite(), "DiagonalOperator: non-finite entries");
  }
  const VectorX<Scalar>& diagonal() const { return d_; }
  bool has_transpose() const override { return true; }
  bool is_symmetric() const override { return true; }

 protected:
  VectorX<Scalar> apply_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return d_.cwiseProduct(v);
  }
  VectorX<Scalar> apply_transpose_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return d_.cwiseProduct(v);
  }

 private:
  VectorX<Scalar> d_;
};

/// Compressed-row sparse operator (row_offsets / col_indices / values live in
/// the Eigen row-major sparse storage). `symmetric` is a promise made by the
/// producer (e.g. graph loaders), not a verified property.
template <typename Scalar>
class SparseOperator : public LinearOperator<Scalar> {
 public:
  using Csr = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  explicit SparseOperator(Csr a, bool symmetric = false, std::string name = "sparse")
      : LinearOperator<Scalar>(a.rows(), std::move(name)),
        a_(std::move(a)),
        symmetric_(symmetric) {
    detail::require(a_.rows() == a_.cols(), "SparseOperator: matrix must be square");
    a_.makeCompressed();
  }

  const Csr& matrix() const { return a_; }
  Index stored_entries() const { return a_.nonZeros(); }
  VectorX<Scalar> diagonal() const { return a_.diagonal(); }
  Scalar frobenius_norm_sq() const {
    Scalar s = 0;
    for (Index i = 0; i < a_.nonZeros(); ++i) s += a_.valuePtr()[i] * a_.valuePtr()[i];
    return s;
  }

  bool has_transpose() const override { return true; }
  bool is_symmetric() const override { return symmetric_; }

 protected:
  VectorX<Scalar> apply_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return a_ * v;
  }
  VectorX<Scalar> apply_transpose_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return a_.transpose() * v;
  }

 private:
  Csr a_;
  bool symmetric_;
};

/// base^p. One apply performs exactly p applies of the base operator; the
/// power operator's own counter still advances by one per apply.
template <typename Scalar>
class PowerOperator : public LinearOperator<Scalar> {
 public:
  PowerOperator(const LinearOperator<Scalar>& base, int exponent)
      : LinearOperator<Scalar>(base.dim(), base.name() + "^" + std::to_string(exponent)),
        base_(base),
        p_(exponent) {
    detail::require(exponent >= 1, "PowerOperator: exponent must be >= 1");
  }

  const LinearOperator<Scalar>& base() const { return base_; }
  int exponent() const { return p_; }
  bool has_transpose() const override { return base_.has_transpose(); }
  bool is_symmetric() const override { return base_.is_symmetric(); }

 protected:
  VectorX<Scalar> apply_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    VectorX<Scalar> out = base_.apply(v);
    for (int i = 1; i < p_; ++i) out = base_.apply(out);
    return out;
  }
  VectorX<Scalar> apply_transpose_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    VectorX<Scalar> out = base_.apply_transpose(v);
    for (int i = 1; i < p_; ++i) out = base_.apply_transpose(out);
    return out;
  }

 private:
  const LinearOperator<Scalar>& base_;
  int p_;
};

/// Input-side deflation: v -> A((I - QQ^T)v). The projection is vector-scale
/// work and is not charged; the single base apply is.
template <typename Scalar>
class DeflatedOperator : public LinearOperator<Scalar> {
 public:
  DeflatedOperator(const LinearOperator<Scalar>& base, const OrthonormalBasis<Scalar>& basis)
      : LinearOperator<Scalar>(base.dim(), base.name() + "-deflated"),
        base_(base),
        basis_(basis) {
    detail::require(basis.dim() == base.dim(), "DeflatedOperator: dimension mismatch");
  }

  bool has_transpose() const override { return base_.has_transpose(); }

 protected:
  VectorX<Scalar> apply_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return base_.apply(basis_.project_out(v));
  }
  // (A(I-QQ^T))^T = (I-QQ^T) A^T.
  VectorX<Scalar> apply_transpose_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return basis_.project_out(base_.apply_transpose(v));
  }

 private:
  const LinearOperator<Scalar>& base_;
  const OrthonormalBasis<Scalar>& basis_;
};

/// Deflected apply as a free function: base*(v - Q(Q^T v)), one base apply.
template <typename Scalar>
VectorX<Scalar> deflected_apply(const LinearOperator<Scalar>& base,
                                const OrthonormalBasis<Scalar>& basis,
                                const VectorX<Scalar>& v) {
  detail::require(basis.dim() == base.dim(), "deflected_apply: dimension mismatch");
  return base.apply(basis.project_out(v));
}

using LinearOperatorD = LinearOperator<double>;
using DenseOperatorD = DenseOperator<double>;
using DiagonalOperatorD = DiagonalOperator<double>;
using SparseOperatorD = SparseOperator<double>;
using PowerOperatorD = PowerOperator<double>;
using DeflatedOperatorD = DeflatedOperator<double>;

}  // namespace diagest
