#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace afdiag {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit seed is the key. The 128-bit counter is split into a 64-bit
/// block position and a 64-bit stream id, so independent streams are
/// addressed directly instead of by skipping ahead. Satisfies
/// UniformRandomBitGenerator with 32-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (lane_ == 4) {
      output_ = bijection({static_cast<std::uint32_t>(position_),
                           static_cast<std::uint32_t>(position_ >> 32),
                           static_cast<std::uint32_t>(stream_),
                           static_cast<std::uint32_t>(stream_ >> 32)},
                          key_);
      ++position_;
      lane_ = 0;
    }
    return output_[lane_++];
  }

  /// The ten-round Philox bijection of one counter block under `key`.
  static constexpr Block bijection(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

  Key key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  Block output_{};
  int lane_ = 4;
};

/// What a random stream is used for. Together with the replication and an
/// asset index it names one independent Philox stream.
enum class StreamKind : std::uint32_t {
  Loadings = 1,
  LatentFactors = 2,
  Errors = 3,
  ObservableLoadings = 4,
  ObservableFactor = 5,
  Mask = 6,
  Subsample = 7,
};

/// Stream id layout: replication in the high 32 bits, kind in bits 24..31,
/// asset index in the low 24 bits.
inline Philox4x32 make_stream(std::uint64_t seed, std::uint64_t replication, StreamKind kind,
                              std::uint64_t asset = 0) noexcept {
  const std::uint64_t id = (replication << 32) |
                           (std::uint64_t{static_cast<std::uint32_t>(kind)} << 24) |
                           (asset & 0xFFFFFFu);
  return Philox4x32(seed, id);
}

}  // namespace afdiag
