#include "artbridge/image_ops.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <string>
#include <vector>

#include "artbridge/error.hpp"

namespace artbridge {

namespace {

void require_nonempty(const RasterImage& img, const char* op) {
  if (img.empty())
    throw Error(ErrorCode::InvalidInput, std::string(op) + ": empty image");
}

} // namespace

// Exact mode of the opaque RGB values, ties to the lowest packed value.
// Keys are bucketed by their top 12 bits with one counting-sort scatter;
// each bucket is then counted on its low 12 bits in a 4096-entry table
// that stays in L1 and is cleared by revisiting the bucket.
std::optional<ColorRGBA> dominant_opaque_color(const RasterImage& img) {
  const auto s = img.samples();
  const std::size_t n = img.pixel_count();

  std::vector<std::uint32_t> offsets(4097, 0);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = &s[i * 4];
    if (p[3] == 0) continue;
    ++offsets[((std::uint32_t{p[0]} << 4) | (p[1] >> 4)) + 1];
    ++kept;
  }
  if (kept == 0) return std::nullopt;
  for (std::size_t b = 1; b < offsets.size(); ++b) offsets[b] += offsets[b - 1];

  std::vector<std::uint32_t> keys(kept);
  {
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = &s[i * 4];
      if (p[3] == 0) continue;
      const std::uint32_t key = (std::uint32_t{p[0]} << 16) | (std::uint32_t{p[1]} << 8) | p[2];
      keys[cursor[key >> 12]++] = key;
    }
  }

  std::vector<std::uint32_t> counts(4096, 0);
  std::uint32_t best = 0;
  std::uint32_t best_count = 0;
  for (std::size_t b = 0; b < 4096; ++b) {
    const std::uint32_t lo = offsets[b], hi = offsets[b + 1];
    if (hi - lo < best_count) continue; // cannot hold a better color
    for (std::uint32_t i = lo; i < hi; ++i) {
      const std::uint32_t key = keys[i];
      const std::uint32_t c = ++counts[key & 0xFFF];
      if (c > best_count || (c == best_count && key < best)) {
        best_count = c;
        best = key;
      }
    }
    for (std::uint32_t i = lo; i < hi; ++i) counts[keys[i] & 0xFFF] = 0;
  }
  return ColorRGBA{static_cast<std::uint8_t>(best >> 16),
                   static_cast<std::uint8_t>(best >> 8),
                   static_cast<std::uint8_t>(best), 255};
}

BackgroundRemoval remove_background(const RasterImage& img, double threshold) {
  require_nonempty(img, "remove_background");
  if (!(threshold >= 0.0))
    throw Error(ErrorCode::InvalidInput, "remove_background: threshold must be >= 0");

  BackgroundRemoval result{img, false, {}};
  const auto bg = dominant_opaque_color(img);
  if (!bg) return result;
  result.background_found = true;
  result.background = *bg;

  // d^2 is an integer, so d^2 <= t^2 exactly when d^2 <= floor(t^2)
  const double t2 = threshold * threshold;
  const std::int32_t limit = t2 >= 3.0 * 255 * 255 ? 3 * 255 * 255 : static_cast<std::int32_t>(t2);
  auto out = result.image.samples();
  const auto n = static_cast<long>(img.pixel_count());
  const std::int32_t br = bg->r, bgg = bg->g, bb = bg->b;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    auto* p = &out[static_cast<std::size_t>(i) * 4];
    const std::int32_t dr = p[0] - br, dg = p[1] - bgg, db = p[2] - bb;
    if (dr * dr + dg * dg + db * db <= limit) p[3] = 0;
  }
  return result;
}

RasterImage composite(std::span<const RasterImage* const> layers) {
  if (layers.empty())
    throw Error(ErrorCode::InvalidInput, "composite: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    require_nonempty(*layers[i], "composite");
    if (!layers[i]->same_size(*layers[0]))
      throw Error(ErrorCode::DimensionMismatch,
                  "composite: layer " + std::to_string(i) + " is " +
                      std::to_string(layers[i]->width()) + "x" +
                      std::to_string(layers[i]->height()) + ", expected " +
                      std::to_string(layers[0]->width()) + "x" +
                      std::to_string(layers[0]->height()),
                  {{"layer_index", i}});
  }

  RasterImage out = *layers[0];
  auto dst = out.samples();
  const auto n = static_cast<long>(out.pixel_count());
  for (std::size_t li = 1; li < layers.size(); ++li) {
    const auto src = layers[li]->samples();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
      const auto off = static_cast<std::size_t>(i) * 4;
      const std::uint8_t sa = src[off + 3];
      if (sa == 0) continue;
      if (sa == 255) {
        std::memcpy(&dst[off], &src[off], 4);
        continue;
      }
      const auto c = blend_over({src[off], src[off + 1], src[off + 2], sa},
                                {dst[off], dst[off + 1], dst[off + 2], dst[off + 3]});
      dst[off] = c.r;
      dst[off + 1] = c.g;
      dst[off + 2] = c.b;
      dst[off + 3] = c.a;
    }
  }
  return out;
}

RasterImage composite(std::span<const RasterImage> layers) {
  std::vector<const RasterImage*> ptrs;
  ptrs.reserve(layers.size());
  for (const auto& l : layers) ptrs.push_back(&l);
  return composite(std::span<const RasterImage* const>(ptrs));
}

RasterImage crop(const RasterImage& img, Rect rect) {
  require_nonempty(img, "crop");
  const std::uint64_t right = std::uint64_t{rect.x} + rect.w;
  const std::uint64_t bottom = std::uint64_t{rect.y} + rect.h;
  if (rect.w == 0 || rect.h == 0 || right > img.width() || bottom > img.height()) {
    Rect fit;
    fit.x = std::min(rect.x, img.width() - 1);
    fit.y = std::min(rect.y, img.height() - 1);
    fit.w = std::clamp<std::uint32_t>(rect.w, 1, img.width() - fit.x);
    fit.h = std::clamp<std::uint32_t>(rect.h, 1, img.height() - fit.y);
    throw Error(ErrorCode::OutOfBounds,
                "crop rect exceeds " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " image",
                {{"rect", {{"x", rect.x}, {"y", rect.y}, {"w", rect.w}, {"h", rect.h}}},
                 {"suggested", {{"x", fit.x}, {"y", fit.y}, {"w", fit.w}, {"h", fit.h}}}});
  }

  RasterImage out(rect.w, rect.h);
  const auto src = img.samples();
  auto dst = out.samples();
  const std::size_t row_bytes = std::size_t{rect.w} * 4;
  for (std::uint32_t y = 0; y < rect.h; ++y) {
    const auto from = (std::size_t{rect.y + y} * img.width() + rect.x) * 4;
    std::memcpy(&dst[y * row_bytes], &src[from], row_bytes);
  }
  return out;
}

RasterImage resize_nearest(const RasterImage& img, std::uint32_t width,
                           std::uint32_t height) {
  require_nonempty(img, "resize_nearest");
  if (width == 0 || height == 0)
    throw Error(ErrorCode::InvalidInput, "resize_nearest: target dimensions must be positive");
  if (width == img.width() && height == img.height()) return img;

  RasterImage out(width, height);
  const auto src = img.samples();
  auto dst = out.samples();
  std::vector<std::uint32_t> col(width);
  for (std::uint32_t x = 0; x < width; ++x)
    col[x] = static_cast<std::uint32_t>(std::uint64_t{x} * img.width() / width);

#pragma omp parallel for schedule(static)
  for (long y = 0; y < static_cast<long>(height); ++y) {
    const auto sy = static_cast<std::uint32_t>(std::uint64_t(y) * img.height() / height);
    const auto* srow = &src[std::size_t{sy} * img.width() * 4];
    auto* drow = &dst[static_cast<std::size_t>(y) * width * 4];
    for (std::uint32_t x = 0; x < width; ++x)
      std::memcpy(drow + std::size_t{x} * 4, srow + std::size_t{col[x]} * 4, 4);
  }
  return out;
}

} // namespace artbridge
