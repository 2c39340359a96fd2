#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artbridge/image.hpp"
#include "artbridge/noise.hpp"

namespace artbridge {

struct Point {
  std::uint32_t x = 0;
  std::uint32_t y = 0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
};

// Canonical order: row-major, (y, x) lexicographic.
constexpr bool canonical_less(Point a, Point b) {
  return a.y != b.y ? a.y < b.y : a.x < b.x;
}

// Contour pixels of a source image. Points are kept sorted in canonical
// order and free of duplicates.
class ContourMap {
public:
  ContourMap() = default;
  // Sorts and deduplicates; throws InvalidInput for points outside the grid.
  ContourMap(std::uint32_t width, std::uint32_t height, std::vector<Point> points);

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  const std::vector<Point>& points() const noexcept { return points_; }
  bool empty() const noexcept { return points_.empty(); }
  std::size_t size() const noexcept { return points_.size(); }
  bool contains(Point p) const;

  friend bool operator==(const ContourMap&, const ContourMap&) = default;

private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<Point> points_;
};

struct Palette {
  std::vector<ColorRGBA> colors;

  friend bool operator==(const Palette&, const Palette&) = default;
};

struct NearestContour {
  Point point;
  double distance = 0.0;
};

inline constexpr int kDefaultForegroundThreshold = 128;

// round(0.299 r + 0.587 g + 0.114 b), computed exactly in integers.
constexpr int luminance(ColorRGBA c) {
  return (299 * c.r + 587 * c.g + 114 * c.b + 500) / 1000;
}

struct ContourOptions {
  int fg_threshold = kDefaultForegroundThreshold;
  // Compare 255 - luminance instead, for dark-on-light contour art.
  bool invert = false;
};

// Foreground: alpha > 0 and luminance >= threshold. Contour: foreground
// pixel with at least one 4-neighbour that is background or off-image.
ContourMap extract_contours(const RasterImage& img, ContourOptions opts = {});

// Uniform sampling without replacement (partial Fisher-Yates over the
// canonical order, driven by SplitMix64(seed)). n >= size returns all points.
std::vector<Point> sample_contour_points(const ContourMap& map, std::size_t n, Seed seed);

// Closest point by Euclidean distance; ties go to the canonically smaller
// point. Throws EmptyMap.
NearestContour find_nearest_contour(const ContourMap& map, double x, double y);

// Top-n 4-bit-per-channel RGB bins of opaque pixels by population (ties:
// lower bin index), each reported as its members' rounded mean color.
// `seed` is accepted for interface stability and ignored.
Palette sample_colors(const RasterImage& img, std::size_t n, Seed seed = 0);

// 12-bit bin index: (r>>4)<<8 | (g>>4)<<4 | (b>>4).
constexpr std::uint32_t color_bin(ColorRGBA c) {
  return (std::uint32_t{c.r} >> 4 << 8) | (std::uint32_t{c.g} >> 4 << 4) |
         (std::uint32_t{c.b} >> 4);
}

namespace serial {
ContourMap extract_contours(const RasterImage& img, ContourOptions opts = {});
NearestContour find_nearest_contour(const ContourMap& map, double x, double y);
Palette sample_colors(const RasterImage& img, std::size_t n, Seed seed = 0);
} // namespace serial

// {"width":W,"height":H,"points":[[x,y],...]} in canonical order.
nlohmann::json to_json(const ContourMap& map);
ContourMap contour_map_from_json(const nlohmann::json& j);

// {"colors":["#RRGGBB",...]}
nlohmann::json to_json(const Palette& palette);
Palette palette_from_json(const nlohmann::json& j);

std::string to_hex(ColorRGBA c);

} // namespace artbridge
