#pragma once

#include <cstdint>
#include <string_view>

namespace prefopt {

// Counter-based generator. Draw k of a stream with key K is
//   mix64(K + k * 0x9E3779B97F4A7C15)
// where mix64 is the SplitMix64 finalizer and K = mix64(seed). The output
// depends only on (seed, k), so a stream can be replayed from any record of
// its seed and counter. fork() derives an independent key from a tag, which
// is how sub-streams (per iteration, per trial, per worker) are obtained.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; both variates of a pair are used.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  RandomStream fork(std::uint64_t tag) const;
  RandomStream fork(std::string_view tag) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  RandomStream(std::uint64_t seed, std::uint64_t key);

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace prefopt
