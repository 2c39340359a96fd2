#pragma once

#include <optional>
#include <span>

#include "artbridge/image.hpp"

namespace artbridge {

inline constexpr double kDefaultBackgroundThreshold = 30.0;

struct BackgroundRemoval {
  RasterImage image;
  // False when the input had no opaque pixel; `image` is then an unchanged copy.
  bool background_found = false;
  ColorRGBA background{};
};

// Most frequent opaque RGB (ties: lowest packed value) becomes transparent,
// along with every pixel within `threshold` Euclidean RGB distance of it.
// Only alpha is modified.
BackgroundRemoval remove_background(const RasterImage& img,
                                    double threshold = kDefaultBackgroundThreshold);

// Non-premultiplied source-over, folded bottom to top with 8-bit rounding
// after every step. A source pixel with alpha 0 leaves the destination as is.
RasterImage composite(std::span<const RasterImage> layers);
RasterImage composite(std::span<const RasterImage* const> layers);

RasterImage crop(const RasterImage& img, Rect rect);

RasterImage resize_nearest(const RasterImage& img, std::uint32_t width,
                           std::uint32_t height);

// Most frequent opaque RGB value, if any.
std::optional<ColorRGBA> dominant_opaque_color(const RasterImage& img);

// Single-threaded reference kernels. Same contracts and byte-identical
// results; kept for cross-checking and benchmarking the parallel path.
namespace serial {

BackgroundRemoval remove_background(const RasterImage& img,
                                    double threshold = kDefaultBackgroundThreshold);
RasterImage composite(std::span<const RasterImage> layers);
RasterImage resize_nearest(const RasterImage& img, std::uint32_t width,
                           std::uint32_t height);
std::optional<ColorRGBA> dominant_opaque_color(const RasterImage& img);

} // namespace serial

// One source-over step on a single pixel, shared by both kernel paths.
inline ColorRGBA blend_over(ColorRGBA src, ColorRGBA dst) {
  if (src.a == 0) return dst;
  if (src.a == 255) return src;
  // Exact rational evaluation in units of 1/255^2; round half up is
  // floor((2n + d) / 2d). Floating point misrounds exact .5 ties.
  const std::uint32_t ws = std::uint32_t{src.a} * 255;
  const std::uint32_t wd = std::uint32_t{dst.a} * (255 - src.a);
  const std::uint32_t den = ws + wd; // a_out * 255^2, never 0 here
  auto channel = [&](std::uint8_t cs, std::uint8_t cd) {
    const std::uint32_t num = cs * ws + cd * wd;
    return static_cast<std::uint8_t>((2 * num + den) / (2 * den));
  };
  return {channel(src.r, dst.r), channel(src.g, dst.g), channel(src.b, dst.b),
          static_cast<std::uint8_t>((2 * den + 255) / 510)};
}

} // namespace artbridge
