#pragma once

// Counter-based deterministic random streams. A single global seed is
// expanded into independent per-(check, pair, sequence) streams so that
// parallel or reordered execution cannot change the numbers drawn.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace strata {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// stable sub-seed derivation for per-sequence / per-pair streams
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t s = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
  return detail::splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // burn-in decorrelates small seeds
    detail::splitmix64(state_);
    detail::splitmix64(state_);
  }

  // Derive an independent stream keyed by (seed, k1, k2, ...).
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = seed;
    detail::splitmix64(s);
    for (std::uint64_t k : keys) {
      s ^= k + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
      detail::splitmix64(s);
    }
    return Rng(s);
  }

  std::uint64_t next() { return detail::splitmix64(state_); }

  double uniform() {  // [0,1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {  // [0, n)
    return static_cast<int>(next() % static_cast<std::uint64_t>(n));
  }

  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Eigen::VectorXd unit_vector(int n) {
    Eigen::VectorXd v = normal_vector(n);
    double nv = v.norm();
    while (nv < 1e-12) {
      v = normal_vector(n);
      nv = v.norm();
    }
    return v / nv;
  }

  Eigen::VectorXd in_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd v(lo.size());
    for (int i = 0; i < lo.size(); ++i) v(i) = uniform(lo(i), hi(i));
    return v;
  }

 private:
  std::uint64_t state_;
};

}  // namespace strata
