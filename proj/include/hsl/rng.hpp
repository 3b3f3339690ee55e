#pragma once

// Counter-based random streams (Philox4x32-10). A stream is keyed by
// (master seed, stream id); draws never touch shared state, so replicate
// streams are independent and shard merges are order-stable by construction.

#include <array>
#include <cmath>
#include <cstdint>

namespace hsl {

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  constexpr std::uint64_t M0 = 0xD2511F53ull;
  constexpr std::uint64_t M1 = 0xCD9E8D57ull;
  const std::uint64_t p0 = M0 * c[0];
  const std::uint64_t p1 = M1 * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

// One 128-bit block of Philox4x32 with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t W0 = 0x9E3779B9u;
  constexpr std::uint32_t W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    if (r) {
      key[0] += W0;
      key[1] += W1;
    }
    detail::philox_round(ctr, key);
  }
  return ctr;
}

// Deterministic stream of uniforms/normals. Counter layout: words 0..1 hold
// the running block counter, words 2..3 the stream id; the key holds the
// master seed. Distinct (seed, stream) pairs never share blocks.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(master_seed),
             static_cast<std::uint32_t>(master_seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream_id)),
        stream_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

  std::uint32_t raw32() {
    if (idx_ == 4) refill();
    return buf_[idx_++];
  }

  std::uint64_t raw64() {
    const std::uint64_t lo = raw32();
    const std::uint64_t hi = raw32();
    return (hi << 32) | lo;
  }

  // Uniform on (0,1); never returns 0 or 1.
  double uniform() {
    const std::uint64_t u = raw64() >> 11;  // 53 bits
    return (static_cast<double>(u) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (pair cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  void refill() {
    buf_ = philox4x32({static_cast<std::uint32_t>(block_),
                       static_cast<std::uint32_t>(block_ >> 32), stream_lo_, stream_hi_},
                      key_);
    ++block_;
    idx_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int idx_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hsl
