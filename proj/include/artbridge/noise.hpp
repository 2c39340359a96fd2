#pragma once

#include <cstdint>
#include <string_view>

#include "artbridge/image.hpp"

// Portable hashing and pseudorandom primitives. Every constant and
// composition rule here is fixed by docs/determinism.md so that other
// implementations can reproduce mock-backend output bit for bit.
namespace artbridge {

using Seed = std::uint64_t;

// SplitMix64 finalizer, including the golden-gamma increment.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// FNV-1a, 64-bit.
constexpr std::uint64_t hash64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr std::uint64_t noise_word(Seed seed, std::uint64_t prompt_hash,
                                   std::uint32_t x, std::uint32_t y) {
  return mix64(seed ^ mix64(prompt_hash ^ mix64((std::uint64_t{y} << 32) | x)));
}

// Channel 0 = red, 1 = green, 2 = blue.
constexpr std::uint8_t noise_channel(std::uint64_t word, int channel) {
  return static_cast<std::uint8_t>(word >> (8 * channel));
}

// Stylize-job seed for one (session, frame, buffer) triple.
constexpr Seed job_seed(std::string_view session_id, std::uint64_t frame_index,
                        std::string_view buffer_id) {
  return mix64(hash64(session_id) ^ mix64(frame_index ^ mix64(hash64(buffer_id))));
}

// SplitMix64 stream generator.
class SplitMix64 {
public:
  explicit constexpr SplitMix64(Seed seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    const std::uint64_t out = mix64(state_);
    state_ += 0x9E3779B97F4A7C15ull;
    return out;
  }

  // Value in [0, bound) by plain modulo; bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) { return next() % bound; }

private:
  std::uint64_t state_;
};

// Mock diffusion kernels.
//   stylize:     out = round((1-s)*in + s*noise) per RGB channel, alpha kept.
//   style field: noise tinted by `tint` (round(noise*tint/255)), alpha 255.
RasterImage mock_stylize(const RasterImage& input, double strength, Seed seed,
                         std::uint64_t prompt_hash);
RasterImage mock_style_field(std::uint32_t width, std::uint32_t height, Seed seed,
                             std::uint64_t prompt_hash, ColorRGBA tint);

namespace serial {
RasterImage mock_stylize(const RasterImage& input, double strength, Seed seed,
                         std::uint64_t prompt_hash);
RasterImage mock_style_field(std::uint32_t width, std::uint32_t height, Seed seed,
                             std::uint64_t prompt_hash, ColorRGBA tint);
} // namespace serial

} // namespace artbridge
