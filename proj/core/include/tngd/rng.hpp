#pragma once

#include <cstdint>

namespace tngd::numerics {

/// Counter-based random stream.
///
/// Every draw is a pure function of (seed, stream, counter): the 64-bit output
/// for position n is a SplitMix64-style finalizer applied twice to the counter
/// mixed with a per-stream key. Two streams with the same seed but different
/// stream indices are independent; a stream copied at a given position
/// reproduces the same draws. Streams are single-owner values: copy or split,
/// never share.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }
  [[nodiscard]] std::uint64_t position() const noexcept { return counter_; }

  /// Child stream with the same seed and a stream id derived from (stream, child).
  [[nodiscard]] RngStream split(std::uint64_t child) const;

  std::uint64_t next_u64() noexcept;
  /// Uniform on (0, 1].
  double uniform() noexcept;
  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept;
  /// Standard normal via Box-Muller; consumes exactly two counter positions.
  double normal() noexcept;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::uint64_t key_ = 0;
};

[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace tngd::numerics
