#pragma once

#include <cstdint>

namespace uechecker {

/// SplitMix64 finalizer; a good 64-bit mixing function.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based generator: the n-th draw of a stream is a pure function of
/// (seed, stream, n), so results never depend on draw interleaving between
/// streams and are identical across platforms.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(mix64(seed) ^ mix64(stream + 0x9e37ULL)) {}

  std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  /// Derives an independent child stream key (used per dropout call).
  std::uint64_t fork() { return next_u64(); }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stateless draw `index` of stream `key`, uniform in [0, 1).
double hashed_uniform(std::uint64_t key, std::uint64_t index);

}  // namespace uechecker
