#include "rng.hpp"

#include <cmath>

namespace deconv::rng {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> ctr) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

void CounterStream::refill() {
  buf_ = philox4x32(key_, {block_, tag_, draw_, rep_});
  ++block_;
  avail_ = 2; // two 64-bit uniforms per block
}

double CounterStream::next_unit() {
  if (avail_ == 0) refill();
  const int i = 2 - avail_;
  --avail_;
  const std::uint64_t bits =
      (static_cast<std::uint64_t>(buf_[2 * i]) << 32) | buf_[2 * i + 1];
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double CounterStream::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  spare_ = r * std::sin(t);
  have_spare_ = true;
  return r * std::cos(t);
}

} // namespace deconv::rng
