#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace stainkit {

/// Seedable random source with derivable substreams.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Conversions to other variates are done here
/// rather than through the <random> distributions, whose algorithms are
/// implementation-defined, so a given (seed, stream) yields the same draws
/// with every standard library.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream keyed by `tag`. Does not advance this stream.
  SeededRng fork(std::uint64_t tag) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on [low, high); returns low when low == high.
  double uniform(double low, double high);
  /// Uniform integer on [0, n). n must be positive.
  std::size_t index(std::size_t n);
  bool bernoulli(double p);
  /// Standard normal variate (Box-Muller, one value per call).
  double normal();

 private:
  SeededRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t key);

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser; used to derive stream keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace stainkit
