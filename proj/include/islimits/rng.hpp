#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace islimits {

/// Counter-based random stream (Philox4x32-10) keyed by (base_seed, stream_id).
///
/// Two streams with the same key produce identical output; streams with
/// different ids are statistically independent. The 128-bit counter is split
/// into a 64-bit block index and the 64-bit stream id, so no state other than
/// the block position is carried. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t base_seed, std::uint64_t stream_id)
      : seed_(base_seed), stream_id_(stream_id) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (next_ == kBuffered) refill();
    return buffer_[next_++];
  }

  /// Independent child stream; deterministic in (this key, child).
  Stream split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Raw Philox4x32-10 bijection, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key);

 private:
  void refill();

  // Four counter blocks per refill; independent lanes let the rounds overlap.
  static constexpr int kLanes = 4;
  static constexpr int kBuffered = 2 * kLanes;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, kBuffered> buffer_{};
  int next_ = kBuffered;
};

/// Standard normal variates (ziggurat). Unlike std::normal_distribution its
/// output sequence is the same on every standard library.
using NormalDistribution = boost::random::normal_distribution<double>;

/// SplitMix64 finalizer; used to derive stream ids from structured indices.
std::uint64_t mix64(std::uint64_t x);

/// Stream id for replicate `replicate` of cell `cell`.
std::uint64_t replicate_stream_id(std::uint64_t cell, std::uint64_t replicate);

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(Stream& s);

}  // namespace islimits
