#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace gpbnn {

/// PCG32 (XSH-RR 64/32, O'Neill 2014). The stream is fully determined by
/// (seed, stream) on every platform, unlike the std distributions.
class Pcg32 {
 public:
  using result_type = std::uint32_t;

  explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL,
                 std::uint64_t stream = 0xda3e39cb94b95bdbULL);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via the Box-Muller transform; caches the second variate.
  double normal();
  /// Uniform integer in [0, n), rejection-sampled without modulo bias.
  std::uint32_t below(std::uint32_t n);

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for a labeled stream, e.g. derive_seed(master, "design/low", rep).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

/// Counter-based standard normal: a pure function of (seed, counter).
double counter_normal(std::uint64_t seed, std::uint64_t counter);

/// Fisher-Yates shuffle driven by Pcg32::below, so the permutation is portable.
template <typename It>
void shuffle(It first, It last, Pcg32& rng) {
  const auto n = static_cast<std::uint32_t>(last - first);
  for (std::uint32_t i = n; i > 1; --i) {
    const std::uint32_t j = rng.below(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace gpbnn
