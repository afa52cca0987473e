#pragma once

// Counter-based random numbers: Philox4x32-10 keyed by a 64-bit seed.
//
// Every random quantity in the toolkit is a pure function of (seed, counter),
// so results do not depend on thread count or scheduling order.

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace qdim {

using Philox4x32 = std::array<std::uint32_t, 4>;

/// Ten rounds of Philox4x32 on `ctr` under `key`.
Philox4x32 philox4x32_10(Philox4x32 ctr, std::array<std::uint32_t, 2> key) noexcept;

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for a labelled subsystem; distinct labels give unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// 53-bit uniform in [0, 1).
constexpr double to_unit(std::uint64_t x) noexcept { return static_cast<double>(x >> 11) * 0x1.0p-53; }

/// Stream of 64-bit values from Philox blocks with counter (c0, c1, c2, block).
/// Satisfies UniformRandomBitGenerator.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream(std::uint64_t seed, std::uint64_t stream_hi, std::uint32_t stream_lo = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 2) refill();
    return buf_[pos_++];
  }
  double uniform() noexcept { return to_unit((*this)()); }

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint32_t c0_, c1_, c2_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int pos_ = 2;
};

}  // namespace qdim
