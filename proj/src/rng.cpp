#include "qdim/rng.hpp"

#include "qdim/util.hpp"

namespace qdim {

namespace {
constexpr std::uint32_t kMulA = 0xD2511F53, kMulB = 0xCD9E8D57;
constexpr std::uint32_t kWeylA = 0x9E3779B9, kWeylB = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}
}  // namespace

Philox4x32 philox4x32_10(Philox4x32 x, std::array<std::uint32_t, 2> k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMulA, x[0], hi0, lo0);
    mulhilo(kMulB, x[2], hi1, lo1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
    k[0] += kWeylA;
    k[1] += kWeylB;
  }
  return x;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept {
  return mix64(master ^ mix64(fnv1a(label)));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index ^ 0x6a09e667f3bcc909ULL));
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t stream_hi, std::uint32_t stream_lo) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      c0_(static_cast<std::uint32_t>(stream_hi)),
      c1_(static_cast<std::uint32_t>(stream_hi >> 32)),
      c2_(stream_lo) {}

void CounterStream::refill() noexcept {
  const Philox4x32 r = philox4x32_10({c0_, c1_, c2_, block_++}, key_);
  buf_[0] = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
  buf_[1] = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
  pos_ = 0;
}

}  // namespace qdim
