#include <map>
#include <string>

#include "artbridge/error.hpp"
#include "artbridge/image_ops.hpp"

namespace artbridge::serial {

std::optional<ColorRGBA> dominant_opaque_color(const RasterImage& img) {
  std::map<std::uint32_t, std::size_t> histogram;
  for (std::uint32_t y = 0; y < img.height(); ++y)
    for (std::uint32_t x = 0; x < img.width(); ++x) {
      const auto c = img.at(x, y);
      if (c.a > 0) ++histogram[c.packed_rgb()];
    }
  if (histogram.empty()) return std::nullopt;

  auto best = histogram.begin();
  for (auto it = histogram.begin(); it != histogram.end(); ++it)
    if (it->second > best->second) best = it;
  const auto rgb = best->first;
  return ColorRGBA{static_cast<std::uint8_t>(rgb >> 16),
                   static_cast<std::uint8_t>(rgb >> 8),
                   static_cast<std::uint8_t>(rgb), 255};
}

BackgroundRemoval remove_background(const RasterImage& img, double threshold) {
  if (img.empty())
    throw Error(ErrorCode::InvalidInput, "remove_background: empty image");
  if (!(threshold >= 0.0))
    throw Error(ErrorCode::InvalidInput, "remove_background: threshold must be >= 0");

  BackgroundRemoval result{img, false, {}};
  const auto bg = serial::dominant_opaque_color(img);
  if (!bg) return result;
  result.background_found = true;
  result.background = *bg;

  for (std::uint32_t y = 0; y < img.height(); ++y)
    for (std::uint32_t x = 0; x < img.width(); ++x) {
      auto c = img.at(x, y);
      const double dr = double(c.r) - bg->r;
      const double dg = double(c.g) - bg->g;
      const double db = double(c.b) - bg->b;
      if (dr * dr + dg * dg + db * db <= threshold * threshold) {
        c.a = 0;
        result.image.set(x, y, c);
      }
    }
  return result;
}

RasterImage composite(std::span<const RasterImage> layers) {
  if (layers.empty())
    throw Error(ErrorCode::InvalidInput, "composite: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].empty())
      throw Error(ErrorCode::InvalidInput, "composite: empty image");
    if (!layers[i].same_size(layers[0]))
      throw Error(ErrorCode::DimensionMismatch,
                  "composite: layer " + std::to_string(i) + " has mismatched dimensions",
                  {{"layer_index", i}});
  }

  RasterImage out = layers[0];
  for (std::size_t li = 1; li < layers.size(); ++li)
    for (std::uint32_t y = 0; y < out.height(); ++y)
      for (std::uint32_t x = 0; x < out.width(); ++x)
        out.set(x, y, blend_over(layers[li].at(x, y), out.at(x, y)));
  return out;
}

RasterImage resize_nearest(const RasterImage& img, std::uint32_t width,
                           std::uint32_t height) {
  if (img.empty() || width == 0 || height == 0)
    throw Error(ErrorCode::InvalidInput, "resize_nearest: dimensions must be positive");
  RasterImage out(width, height);
  for (std::uint32_t y = 0; y < height; ++y)
    for (std::uint32_t x = 0; x < width; ++x)
      out.set(x, y,
              img.at(static_cast<std::uint32_t>(std::uint64_t{x} * img.width() / width),
                     static_cast<std::uint32_t>(std::uint64_t{y} * img.height() / height)));
  return out;
}

} // namespace artbridge::serial
