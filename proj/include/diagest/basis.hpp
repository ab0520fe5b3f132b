#pragma once

#include <cmath>

#include "diagest/core.hpp"

namespace diagest {

/// Incrementally grown column-orthonormal basis Q with, per column q_j, the
/// cached product A*q_j, the running ||AQ||_F^2, and the deflation diagonal
/// d_defl = sum_j (A q_j) .* q_j.
///
/// Orthogonality is maintained with one re-orthogonalization pass per added
/// column (||Q^T Q - I||_max stays <= 1e-10 for the sizes this library runs).
template <typename Scalar>
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Index dim, Index capacity_hint = 16)
      : dim_(dim),
        k_(0),
        q_(dim, std::max<Index>(capacity_hint, 1)),
        aq_(dim, std::max<Index>(capacity_hint, 1)),
        d_defl_(VectorX<Scalar>::Zero(dim)),
        aq_fro_sq_(0),
        d_defl_norm_sq_(0) {
    detail::require(dim >= 1, "OrthonormalBasis: dim must be >= 1");
  }

  Index dim() const { return dim_; }
  Index k() const { return k_; }

  auto q() const { return q_.leftCols(k_); }
  auto aq() const { return aq_.leftCols(k_); }

  const VectorX<Scalar>& d_defl() const { return d_defl_; }
  Scalar d_defl_norm_sq() const { return d_defl_norm_sq_; }
  Scalar aq_fro_sq() const { return aq_fro_sq_; }

  /// v - Q(Q^T v); identity when the basis is empty.
  VectorX<Scalar> project_out(const Eigen::Ref<const VectorX<Scalar>>& v) const {
    detail::require(v.size() == dim_, "OrthonormalBasis: dimension mismatch");
    if (k_ == 0) return v;
    return v - q() * (q().transpose() * v);
  }

  /// Orthogonalizes y against the current columns with one
  /// re-orthogonalization pass. Returns false (leaving `out` untouched) when
  /// the residual norm falls below drop_tol * ||y||.
  bool orthonormalize(const Eigen::Ref<const VectorX<Scalar>>& y, VectorX<Scalar>& out,
                      Scalar drop_tol = Scalar(1e-12)) const {
    VectorX<Scalar> r = project_out(y);
    r = project_out(r);
    const Scalar rn = r.norm();
    if (rn < drop_tol * y.norm() || rn == Scalar(0)) return false;
    out = r / rn;
    return true;
  }

  /// Appends a unit column q with its product aq = A*q, updating d_defl,
  /// ||AQ||_F^2 and ||d_defl||^2 incrementally.
  void append_column(const Eigen::Ref<const VectorX<Scalar>>& q,
                     const Eigen::Ref<const VectorX<Scalar>>& aq) {
    detail::require(q.size() == dim_ && aq.size() == dim_,
                    "OrthonormalBasis: dimension mismatch");
    detail::require(k_ < dim_, "OrthonormalBasis: basis already complete");
    if (k_ == q_.cols()) {
      q_.conservativeResize(Eigen::NoChange, 2 * q_.cols());
      aq_.conservativeResize(Eigen::NoChange, 2 * aq_.cols());
    }
    q_.col(k_) = q;
    aq_.col(k_) = aq;
    ++k_;
    aq_fro_sq_ += aq.squaredNorm();
    d_defl_ += aq.cwiseProduct(q);
    d_defl_norm_sq_ = d_defl_.squaredNorm();
  }

  /// Max-norm orthogonality defect ||Q^T Q - I||_max; test hook.
  Scalar orthogonality_defect() const {
    if (k_ == 0) return Scalar(0);
    MatrixX<Scalar> g = q().transpose() * q();
    g.diagonal().array() -= Scalar(1);
    return g.cwiseAbs().maxCoeff();
  }

 private:
  Index dim_;
  Index k_;
  MatrixX<Scalar> q_;
  MatrixX<Scalar> aq_;
  VectorX<Scalar> d_defl_;
  Scalar aq_fro_sq_;
  Scalar d_defl_norm_sq_;
};

using OrthonormalBasisD = OrthonormalBasis<double>;

}  // namespace diagest
