#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "diagest/core.hpp"

namespace diagest {

/// splitmix64 step; the standard 64-bit mixer.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent sub-seed from (base, salt). Every component that
/// needs its own stream (trials, suite rows, sketch vs probe phases) calls
/// this with a documented salt so that one CLI --seed pins the whole run.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

enum class ProbeDistribution { gaussian, rademacher };

/// Deterministic, seedable stream of random query vectors.
///
/// Vector `i` is derived from (seed, i) alone: a per-index mt19937_64 engine
/// filled by Box-Muller (gaussian) or sign bits (rademacher). Draws are
/// therefore order-independent: workers consuming disjoint indices in any
/// order produce the same multiset of vectors as serial consumption.
template <typename Scalar>
class ProbeStream {
 public:
  ProbeStream(std::uint64_t seed, ProbeDistribution dist, Index dim)
      : seed_(seed), dist_(dist), dim_(dim), index_(0) {
    detail::require(dim >= 1, "ProbeStream: dim must be >= 1");
  }

  Index dim() const { return dim_; }
  ProbeDistribution distribution() const { return dist_; }
  std::uint64_t seed() const { return seed_; }

  /// Number of vectors drawn through next()/block().
  Index drawn() const { return index_; }

  /// Random access: the index-th probe of this stream, independent of the
  /// consumption position.
  VectorX<Scalar> probe(Index index) const {
    std::mt19937_64 eng(derive_seed(seed_, static_cast<std::uint64_t>(index)));
    VectorX<Scalar> v(dim_);
    if (dist_ == ProbeDistribution::rademacher) {
      for (Index i = 0; i < dim_; ++i)
        v[i] = (eng() & 1ULL) ? Scalar(1) : Scalar(-1);
      return v;
    }
    // Box-Muller on 53-bit uniforms; u1 in (0,1], u2 in [0,1).
    Index i = 0;
    while (i < dim_) {
      const double u1 = (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
      const double u2 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double t = 2.0 * M_PI * u2;
      v[i++] = static_cast<Scalar>(r * std::cos(t));
      if (i < dim_) v[i++] = static_cast<Scalar>(r * std::sin(t));
    }
    return v;
  }

  /// Next probe in sequence order.
  VectorX<Scalar> next() { return probe(index_++); }

  /// The next `count` probes as columns of an n x count block.
  MatrixX<Scalar> block(Index count) {
    detail::require(count >= 0, "probe_block: count must be >= 0");
    MatrixX<Scalar> out(dim_, count);
    for (Index j = 0; j < count; ++j) out.col(j) = next();
    return out;
  }

 private:
  std::uint64_t seed_;
  ProbeDistribution dist_;
  Index dim_;
  Index index_;
};

using ProbeStreamD = ProbeStream<double>;

}  // namespace diagest
