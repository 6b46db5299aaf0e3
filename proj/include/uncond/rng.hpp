#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace uncond::rng {

// SplitMix64. Fully specified arithmetic, so streams are identical on every
// platform and thread count; std::<distribution>s are not and are avoided.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Decorrelated child seed for stream `index` (restart i, sample block i, ...).
inline uint64_t child_seed(uint64_t seed, uint64_t index) {
  uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (index + 0x632be59bd9b4e019ull));
  (void)splitmix64(s);
  return splitmix64(s);
}

class Stream {
 public:
  explicit Stream(uint64_t seed) : state_(seed) { (void)splitmix64(state_); }

  uint64_t next_u64() { return splitmix64(state_); }
  // uniform in [0, 1)
  double next_uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  // uniform in [-1, 1)
  double next_symmetric() { return 2.0 * next_uniform() - 1.0; }
  double next_gaussian();

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Eigen::MatrixXd gaussian_matrix(int rows, int cols, uint64_t seed);

// Halton point #index (1-based internally) in the first `dim` prime bases.
Eigen::VectorXd halton_point(int64_t index, int dim);

// Acklam's rational approximation, |error| < 1.2e-9. Deterministic inverse
// normal CDF for mapping low-discrepancy points to directions.
double inverse_normal_cdf(double p);

}  // namespace uncond::rng
