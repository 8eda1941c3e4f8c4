#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace bbmmi {

/// Counter-based random stream (Philox 4x64, 10 rounds).
///
/// Streams are keyed by (master seed, role tag) and indexed by a 64-bit
/// stream index placed in the counter block, so distinct (index, role)
/// pairs draw from disjoint counter spaces of the same keyed permutation
/// family. Identical (seed, index, role) reproduce the same sequence on
/// every platform; numpy's Philox bit generator produces the same blocks,
/// which the unit tests pin.
class RngStream {
 public:
  using result_type = std::uint64_t;

  static constexpr const char* kAlgorithm = "philox4x64-10";

  RngStream() : RngStream(0, 0, "") {}

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index,
            std::string_view role = "")
      : master_seed_(master_seed),
        stream_index_(stream_index),
        role_hash_(fnv1a64(role)) {
    counter_ = {0, 0, stream_index_, 0};
    buffer_pos_ = 4;  // force a refill on first draw
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (buffer_pos_ == 4) refill();
    return buffer_[buffer_pos_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return double((*this)() >> 11) * 0x1.0p-53; }

  /// Exponential variate with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  /// Unbiased uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % n;
    }
  }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  static std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }

  void refill() {
    static constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

    std::array<std::uint64_t, 4> c = counter_;
    std::uint64_t k0 = master_seed_;
    std::uint64_t k1 = role_hash_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k0 += kW0;
        k1 += kW1;
      }
      std::uint64_t hi0, lo0, hi1, lo1;
      mulhilo(kM0, c[0], hi0, lo0);
      mulhilo(kM1, c[2], hi1, lo1);
      c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    }
    buffer_ = c;
    buffer_pos_ = 0;
    if (++counter_[0] == 0) ++counter_[1];  // 128-bit draw counter
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t role_hash_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> buffer_;
  int buffer_pos_;
};

/// Deterministic stream derivation: one independent stream per
/// (replica index, role) pair under a common master seed.
inline RngStream derive_stream(std::uint64_t master_seed,
                               std::uint64_t replica_index,
                               std::string_view role) {
  return RngStream(master_seed, replica_index, role);
}

}  // namespace bbmmi
