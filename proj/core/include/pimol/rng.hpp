#pragma once

#include <array>
#include <cstdint>

namespace pimol {

/// Counter-based Philox4x32-10 stream.
///
/// The 128-bit counter is split into a 64-bit block index (low half) and a
/// 64-bit stream id (high half), so streams with distinct ids never overlap.
/// The key is derived from the master seed. The full state is a handful of
/// integers, which makes checkpointing exact.
class RandomStream {
 public:
  struct State {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t block = 0;
    std::uint32_t used = 4;  // words of the current block already consumed
    std::uint32_t has_spare_normal = 0;
    double spare_normal = 0.0;

    bool operator==(const State&) const = default;
  };

  RandomStream(std::uint64_t seed, std::uint64_t stream);
  explicit RandomStream(const State& state);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal deviate (Box-Muller, pairs cached).
  double normal();

  State state() const;

  /// Raw Philox4x32-10 bijection, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> buffer_{};
  std::uint32_t used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pimol
