#pragma once

#include <array>
#include <cstdint>

namespace deconv::rng {

// Philox4x32-10 counter-based generator. A draw is addressed by
// (seed, replicate, draw index, component tag); every scalar draw owns its
// own counter stream, so rejection samplers consume a private substream and
// results never depend on evaluation order or thread assignment.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 2> key,
                                        std::array<std::uint32_t, 4> ctr);

enum : std::uint32_t { TAG_X = 0, TAG_XI = 1 };

class CounterStream {
public:
  CounterStream(std::uint64_t seed, std::uint64_t rep, std::uint64_t draw, std::uint32_t tag)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        tag_(tag),
        draw_(static_cast<std::uint32_t>(draw)),
        rep_(static_cast<std::uint32_t>(rep)) {}

  // Uniform on (0,1), 53 significant bits, never exactly 0 or 1.
  double next_unit();
  // Standard normal via Box-Muller; pairs are cached.
  double next_normal();

private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t tag_, draw_, rep_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int avail_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace deconv::rng
