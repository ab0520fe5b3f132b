#pragma once

#include <Eigen/QR>
#include <cmath>
#include <random>

#include "diagest/core.hpp"
#include "diagest/linop.hpp"
#include "diagest/probes.hpp"

namespace diagest {

enum class SpectrumKind { flat, poly, exp_decay, step, randint };

inline const char* spectrum_name(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::flat: return "flat";
    case SpectrumKind::poly: return "poly";
    case SpectrumKind::exp_decay: return "exp";
    case SpectrumKind::step: return "step";
    case SpectrumKind::randint: return "randint";
  }
  return "?";
}

template <typename Scalar>
struct SpectrumSpec {
  SpectrumKind kind;
  Index n;
  // randint bounds (inclusive, MATLAB randi semantics).
  long randint_lo = 0;
  long randint_hi = 2000;
  // step profile: leading plateau of ones, then the floor value.
  Index step_plateau = 50;
  Scalar step_floor = Scalar(1e-3);
};

/// Uniform integer in [lo, hi], inclusive bounds, by rejection on the top
/// 64-bit range (bias-free).
inline long uniform_int_inclusive(std::mt19937_64& eng, long lo, long hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % span + 1) % span;
  std::uint64_t x;
  do {
    x = eng();
  } while (x > limit);
  return lo + static_cast<long>(x % span);
}

/// The benchmark eigenvalue profiles. flat/poly/exp/step are nonincreasing;
/// randint entries are i.i.d. uniform integers in the given bounds.
template <typename Scalar>
VectorX<Scalar> spectrum_eigenvalues(const SpectrumSpec<Scalar>& spec, std::uint64_t seed) {
  const Index n = spec.n;
  detail::require(n >= 2, "spectrum_eigenvalues: n must be >= 2");
  VectorX<Scalar> lam(n);
  switch (spec.kind) {
    case SpectrumKind::flat:
      for (Index i = 0; i < n; ++i)
        lam[i] = Scalar(3) - Scalar(2) * Scalar(i) / Scalar(n - 1);
      break;
    case SpectrumKind::poly:
      for (Index i = 0; i < n; ++i) lam[i] = Scalar(1) / (Scalar(i + 1) * Scalar(i + 1));
      break;
    case SpectrumKind::exp_decay:
      for (Index i = 0; i < n; ++i) lam[i] = std::pow(Scalar(0.7), Scalar(i));
      break;
    case SpectrumKind::step: {
      detail::require(spec.step_plateau >= 1 && spec.step_plateau <= n,
                      "spectrum_eigenvalues: bad step plateau");
      for (Index i = 0; i < n; ++i)
        lam[i] = i < spec.step_plateau ? Scalar(1) : spec.step_floor;
      break;
    }
    case SpectrumKind::randint: {
      detail::require(spec.randint_lo <= spec.randint_hi,
                      "spectrum_eigenvalues: bad randint bounds");
      std::mt19937_64 eng(derive_seed(seed, 0x5eedu));
      for (Index i = 0; i < n; ++i)
        lam[i] = Scalar(uniform_int_inclusive(eng, spec.randint_lo, spec.randint_hi));
      break;
    }
  }
  return lam;
}

/// Haar-distributed orthogonal matrix: QR of an i.i.d. Gaussian matrix with
/// the R-diagonal signs folded into Q.
template <typename Scalar>
MatrixX<Scalar> haar_orthogonal(Index n, std::uint64_t seed) {
  ProbeStream<Scalar> gauss(derive_seed(seed, 0x4aa2u), ProbeDistribution::gaussian, n);
  MatrixX<Scalar> g = gauss.block(n);
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(g);
  MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(n, n);
  const MatrixX<Scalar>& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  return q;
}

template <typename Scalar>
struct SynthMatrix {
  MatrixX<Scalar> dense;          // A = U D U^T, symmetrized
  VectorX<Scalar> diagonal;       // exact diag(A)
  VectorX<Scalar> eigenvalues;    // D
};

/// Materialized test matrix A = U D U^T with exact diagonal and spectrum
/// retained for oracles. Intended up to n = 8192; use synth_operator above
/// that.
template <typename Scalar>
SynthMatrix<Scalar> synth_matrix(const SpectrumSpec<Scalar>& spec, std::uint64_t seed) {
  SynthMatrix<Scalar> out;
  out.eigenvalues = spectrum_eigenvalues(spec, seed);
  MatrixX<Scalar> u = haar_orthogonal<Scalar>(spec.n, seed);
  MatrixX<Scalar> t = u * out.eigenvalues.asDiagonal();
  out.dense.noalias() = t * u.transpose();
  out.dense = ((out.dense + out.dense.transpose()) / Scalar(2)).eval();
  out.diagonal = out.dense.diagonal();
  return out;
}

/// Matrix-free form of the same ensemble: v -> U (D (U^T v)), exact diagonal
/// d_i = sum_j U_ij^2 D_j. Avoids the n x n product for large n.
template <typename Scalar>
class SynthOperator : public LinearOperator<Scalar> {
 public:
  SynthOperator(const SpectrumSpec<Scalar>& spec, std::uint64_t seed)
      : LinearOperator<Scalar>(spec.n, std::string("synth-") + spectrum_name(spec.kind)),
        u_(haar_orthogonal<Scalar>(spec.n, seed)),
        lam_(spectrum_eigenvalues(spec, seed)) {}

  VectorX<Scalar> diagonal() const {
    return u_.cwiseProduct(u_) * lam_;
  }
  const VectorX<Scalar>& eigenvalues() const { return lam_; }
  Scalar frobenius_norm_sq() const { return lam_.squaredNorm(); }
  bool has_transpose() const override { return true; }
  bool is_symmetric() const override { return true; }

 protected:
  VectorX<Scalar> apply_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return u_ * lam_.cwiseProduct(u_.transpose() * v).eval();
  }
  VectorX<Scalar> apply_transpose_impl(const Eigen::Ref<const VectorX<Scalar>>& v) const override {
    return apply_impl(v);
  }

 private:
  MatrixX<Scalar> u_;
  VectorX<Scalar> lam_;
};

using SpectrumSpecD = SpectrumSpec<double>;
using SynthMatrixD = SynthMatrix<double>;
using SynthOperatorD = SynthOperator<double>;

}  // namespace diagest
