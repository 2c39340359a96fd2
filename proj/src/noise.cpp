#include "artbridge/noise.hpp"

#include <cmath>
#include <vector>

#include "artbridge/error.hpp"

namespace artbridge {

namespace {

void check_strength(double strength) {
  if (!(strength >= 0.0 && strength <= 1.0))
    throw Error(ErrorCode::InvalidInput, "strength must lie in [0, 1]",
                {{"strength", strength}});
}

inline std::uint8_t lerp_round(std::uint8_t in, std::uint8_t v, double s) {
  return static_cast<std::uint8_t>(std::floor((1.0 - s) * in + s * v + 0.5));
}

inline std::uint8_t tint_round(std::uint8_t v, std::uint8_t t) {
  return static_cast<std::uint8_t>((2u * v * t + 255u) / 510u);
}

} // namespace

RasterImage mock_stylize(const RasterImage& input, double strength, Seed seed,
                         std::uint64_t prompt_hash) {
  check_strength(strength);
  if (input.empty()) throw Error(ErrorCode::InvalidInput, "stylize: empty image");
  if (strength == 0.0) return input;

  // lerp_round over every (input, noise) pair, evaluated once per call
  std::vector<std::uint8_t> lut(256 * 256);
  for (int a = 0; a < 256; ++a)
    for (int v = 0; v < 256; ++v)
      lut[a * 256 + v] = lerp_round(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(v), strength);

  RasterImage out = input;
  auto px = out.samples();
  const auto w = input.width();
  const long h = input.height();
#pragma omp parallel for schedule(static)
  for (long y = 0; y < h; ++y) {
    auto* row = &px[static_cast<std::size_t>(y) * w * 4];
    for (std::uint32_t x = 0; x < w; ++x) {
      const auto word = noise_word(seed, prompt_hash, x, static_cast<std::uint32_t>(y));
      auto* p = row + std::size_t{x} * 4;
      for (int c = 0; c < 3; ++c) p[c] = lut[p[c] * 256u + noise_channel(word, c)];
    }
  }
  return out;
}

RasterImage mock_style_field(std::uint32_t width, std::uint32_t height, Seed seed,
                             std::uint64_t prompt_hash, ColorRGBA tint) {
  RasterImage out(width, height);
  auto px = out.samples();
  const std::uint8_t t[3] = {tint.r, tint.g, tint.b};
#pragma omp parallel for schedule(static)
  for (long y = 0; y < static_cast<long>(height); ++y) {
    auto* row = &px[static_cast<std::size_t>(y) * width * 4];
    for (std::uint32_t x = 0; x < width; ++x) {
      const auto word = noise_word(seed, prompt_hash, x, static_cast<std::uint32_t>(y));
      auto* p = row + std::size_t{x} * 4;
      for (int c = 0; c < 3; ++c) p[c] = tint_round(noise_channel(word, c), t[c]);
      p[3] = 255;
    }
  }
  return out;
}

namespace serial {

RasterImage mock_stylize(const RasterImage& input, double strength, Seed seed,
                         std::uint64_t prompt_hash) {
  check_strength(strength);
  if (input.empty()) throw Error(ErrorCode::InvalidInput, "stylize: empty image");
  RasterImage out = input;
  for (std::uint32_t y = 0; y < input.height(); ++y)
    for (std::uint32_t x = 0; x < input.width(); ++x) {
      const auto word = noise_word(seed, prompt_hash, x, y);
      auto c = input.at(x, y);
      c.r = lerp_round(c.r, noise_channel(word, 0), strength);
      c.g = lerp_round(c.g, noise_channel(word, 1), strength);
      c.b = lerp_round(c.b, noise_channel(word, 2), strength);
      out.set(x, y, c);
    }
  return out;
}

RasterImage mock_style_field(std::uint32_t width, std::uint32_t height, Seed seed,
                             std::uint64_t prompt_hash, ColorRGBA tint) {
  RasterImage out(width, height);
  for (std::uint32_t y = 0; y < height; ++y)
    for (std::uint32_t x = 0; x < width; ++x) {
      const auto word = noise_word(seed, prompt_hash, x, y);
      out.set(x, y,
              {tint_round(noise_channel(word, 0), tint.r),
               tint_round(noise_channel(word, 1), tint.g),
               tint_round(noise_channel(word, 2), tint.b), 255});
    }
  return out;
}

} // namespace serial

} // namespace artbridge
