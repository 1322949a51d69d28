#pragma once

#include <cmath>
#include <cstdint>

#include "plap/grid.hpp"

namespace plap {

/// splitmix64 stream; fully portable and bit-deterministic, so seeded
/// artifacts reproduce byte-for-byte across runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

/// Field of independent uniform samples in [lo, hi).
template <typename Scalar>
FieldT<Scalar> random_field(const GridT<Scalar>& g, Rng& rng, Scalar lo,
                            Scalar hi) {
  FieldT<Scalar> out = FieldT<Scalar>::zero(g);
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    out.values[i] = static_cast<Scalar>(
        rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
  return out;
}

/// Random field rescaled to unit L2 norm (zero-safe: retries the draw if the
/// sample is numerically null).
template <typename Scalar>
FieldT<Scalar> random_unit_field(const GridT<Scalar>& g, Rng& rng) {
  for (;;) {
    FieldT<Scalar> f = random_field(g, rng, Scalar(-1), Scalar(1));
    const Scalar n = l2_norm(f);
    if (n > Scalar(1e-12)) {
      f.values /= n;
      return f;
    }
  }
}

}  // namespace plap
