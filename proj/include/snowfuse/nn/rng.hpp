#ifndef SNOWFUSE_NN_RNG_HPP
#define SNOWFUSE_NN_RNG_HPP

#include <cstdint>

namespace snowfuse::nn {

/**
 * Counter-based generator: output k is splitmix64(seed + k * golden).
 * The integer stream is identical on every platform; no OS entropy is used.
 */
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

  /// Independent generator for a named sub-stream.
  SeededRng fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace snowfuse::nn

#endif  // SNOWFUSE_NN_RNG_HPP
