#include "artbridge/conditioning.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "artbridge/error.hpp"

namespace artbridge {

ContourMap::ContourMap(std::uint32_t width, std::uint32_t height, std::vector<Point> points)
    : width_(width), height_(height), points_(std::move(points)) {
  for (const auto& p : points_)
    if (p.x >= width_ || p.y >= height_)
      throw Error(ErrorCode::InvalidInput, "contour point outside the map grid",
                  {{"point", {p.x, p.y}}, {"width", width_}, {"height", height_}});
  std::sort(points_.begin(), points_.end(), canonical_less);
  points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
}

bool ContourMap::contains(Point p) const {
  return std::binary_search(points_.begin(), points_.end(), p, canonical_less);
}

namespace {

std::vector<std::uint8_t> foreground_mask(const RasterImage& img, ContourOptions opts) {
  const auto s = img.samples();
  const auto n = static_cast<long>(img.pixel_count());
  std::vector<std::uint8_t> fg(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto* p = &s[static_cast<std::size_t>(i) * 4];
    int lum = luminance({p[0], p[1], p[2], p[3]});
    if (opts.invert) lum = 255 - lum;
    fg[i] = p[3] > 0 && lum >= opts.fg_threshold;
  }
  return fg;
}

struct BinStats {
  std::uint64_t count = 0;
  std::uint64_t sum[3] = {0, 0, 0};
};

constexpr std::size_t kBins = 4096;

Palette rank_bins(const std::vector<BinStats>& bins, std::size_t n) {
  std::vector<std::uint32_t> order;
  for (std::uint32_t b = 0; b < kBins; ++b)
    if (bins[b].count > 0) order.push_back(b);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return bins[a].count > bins[b].count;
  });
  order.resize(std::min(n, order.size()));

  Palette out;
  for (auto b : order) {
    const auto& st = bins[b];
    auto mean = [&](int c) {
      return static_cast<std::uint8_t>((2 * st.sum[c] + st.count) / (2 * st.count));
    };
    out.colors.push_back({mean(0), mean(1), mean(2), 255});
  }
  return out;
}

void check_inputs(const RasterImage& img, const ContourOptions& opts) {
  if (img.empty()) throw Error(ErrorCode::InvalidInput, "extract_contours: empty image");
  if (opts.fg_threshold < 0 || opts.fg_threshold > 255)
    throw Error(ErrorCode::InvalidInput, "foreground threshold must lie in [0, 255]",
                {{"threshold", opts.fg_threshold}});
}

} // namespace

ContourMap extract_contours(const RasterImage& img, ContourOptions opts) {
  check_inputs(img, opts);
  const auto fg = foreground_mask(img, opts);
  const std::uint32_t w = img.width();
  const std::uint32_t h = img.height();
  std::vector<std::vector<Point>> rows(h);

#pragma omp parallel for schedule(static)
  for (long yl = 0; yl < static_cast<long>(h); ++yl) {
    const auto y = static_cast<std::uint32_t>(yl);
    auto at = [&](std::uint32_t xx, std::uint32_t yy) {
      return fg[std::size_t{yy} * w + xx] != 0;
    };
    for (std::uint32_t x = 0; x < w; ++x) {
      if (!at(x, y)) continue;
      const bool edge = x == 0 || y == 0 || x + 1 == w || y + 1 == h ||
                        !at(x - 1, y) || !at(x + 1, y) || !at(x, y - 1) || !at(x, y + 1);
      if (edge) rows[y].push_back({x, y});
    }
  }

  std::vector<Point> points;
  for (auto& r : rows) points.insert(points.end(), r.begin(), r.end());
  return ContourMap(w, h, std::move(points));
}

std::vector<Point> sample_contour_points(const ContourMap& map, std::size_t n, Seed seed) {
  const auto& pts = map.points();
  if (n >= pts.size()) return pts;

  std::vector<Point> pool = pts;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

NearestContour find_nearest_contour(const ContourMap& map, double x, double y) {
  if (map.empty()) throw Error(ErrorCode::EmptyMap, "find_nearest_contour: empty contour map");
  const auto& pts = map.points();
  const auto n = static_cast<long>(pts.size());

  double best_d2 = std::numeric_limits<double>::infinity();
  long best_i = 0;
#pragma omp parallel
  {
    double local_d2 = std::numeric_limits<double>::infinity();
    long local_i = 0;
#pragma omp for schedule(static) nowait
    for (long i = 0; i < n; ++i) {
      const double dx = pts[i].x - x;
      const double dy = pts[i].y - y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < local_d2) {
        local_d2 = d2;
        local_i = i;
      }
    }
#pragma omp critical
    if (local_d2 < best_d2 || (local_d2 == best_d2 && local_i < best_i)) {
      best_d2 = local_d2;
      best_i = local_i;
    }
  }
  // selection by squared distance; the reported value uses the more accurate hypot
  const Point best = pts[best_i];
  return {best, std::hypot(best.x - x, best.y - y)};
}

Palette sample_colors(const RasterImage& img, std::size_t n, Seed) {
  if (img.empty() || n == 0) return {};
  const auto s = img.samples();
  const auto count = static_cast<long>(img.pixel_count());
  const int threads = omp_get_max_threads();
  std::vector<std::vector<BinStats>> partial(threads, std::vector<BinStats>(kBins));

#pragma omp parallel
  {
    auto& local = partial[omp_get_thread_num()];
#pragma omp for schedule(static)
    for (long i = 0; i < count; ++i) {
      const auto* p = &s[static_cast<std::size_t>(i) * 4];
      if (p[3] == 0) continue;
      auto& st = local[color_bin({p[0], p[1], p[2], p[3]})];
      ++st.count;
      st.sum[0] += p[0];
      st.sum[1] += p[1];
      st.sum[2] += p[2];
    }
  }

  std::vector<BinStats> bins(kBins);
  for (const auto& local : partial)
    for (std::size_t b = 0; b < kBins; ++b) {
      bins[b].count += local[b].count;
      for (int c = 0; c < 3; ++c) bins[b].sum[c] += local[b].sum[c];
    }
  return rank_bins(bins, n);
}

namespace serial {

ContourMap extract_contours(const RasterImage& img, ContourOptions opts) {
  check_inputs(img, opts);
  auto is_fg = [&](long x, long y) {
    if (x < 0 || y < 0 || x >= long(img.width()) || y >= long(img.height())) return false;
    const auto c = img.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
    const int lum = opts.invert ? 255 - luminance(c) : luminance(c);
    return c.a > 0 && lum >= opts.fg_threshold;
  };
  std::vector<Point> points;
  for (long y = 0; y < long(img.height()); ++y)
    for (long x = 0; x < long(img.width()); ++x)
      if (is_fg(x, y) &&
          (!is_fg(x - 1, y) || !is_fg(x + 1, y) || !is_fg(x, y - 1) || !is_fg(x, y + 1)))
        points.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});
  return ContourMap(img.width(), img.height(), std::move(points));
}

NearestContour find_nearest_contour(const ContourMap& map, double x, double y) {
  if (map.empty()) throw Error(ErrorCode::EmptyMap, "find_nearest_contour: empty contour map");
  const Point* best = nullptr;
  double best_d2 = 0;
  for (const auto& p : map.points()) {
    const double d2 = (p.x - x) * (p.x - x) + (p.y - y) * (p.y - y);
    if (!best || d2 < best_d2) {
      best = &p;
      best_d2 = d2;
    }
  }
  return {*best, std::hypot(best->x - x, best->y - y)};
}

Palette sample_colors(const RasterImage& img, std::size_t n, Seed) {
  if (img.empty() || n == 0) return {};
  std::vector<BinStats> bins(kBins);
  for (std::uint32_t y = 0; y < img.height(); ++y)
    for (std::uint32_t x = 0; x < img.width(); ++x) {
      const auto c = img.at(x, y);
      if (c.a == 0) continue;
      auto& st = bins[color_bin(c)];
      ++st.count;
      st.sum[0] += c.r;
      st.sum[1] += c.g;
      st.sum[2] += c.b;
    }
  return rank_bins(bins, n);
}

} // namespace serial

std::string to_hex(ColorRGBA c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", c.r, c.g, c.b);
  return buf;
}

nlohmann::json to_json(const ContourMap& map) {
  auto pts = nlohmann::json::array();
  for (const auto& p : map.points()) pts.push_back({p.x, p.y});
  return {{"width", map.width()}, {"height", map.height()}, {"points", std::move(pts)}};
}

ContourMap contour_map_from_json(const nlohmann::json& j) {
  try {
    std::vector<Point> pts;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2)
        throw Error(ErrorCode::InvalidInput, "contour point must be [x, y]");
      pts.push_back({p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>()});
    }
    return ContourMap(j.at("width").get<std::uint32_t>(), j.at("height").get<std::uint32_t>(),
                      std::move(pts));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed contour map: ") + e.what());
  }
}

nlohmann::json to_json(const Palette& palette) {
  auto colors = nlohmann::json::array();
  for (const auto& c : palette.colors) colors.push_back(to_hex(c));
  return {{"colors", std::move(colors)}};
}

Palette palette_from_json(const nlohmann::json& j) {
  Palette out;
  try {
    for (const auto& item : j.at("colors")) {
      const auto s = item.get<std::string>();
      unsigned r = 0, g = 0, b = 0;
      if (s.size() != 7 || s[0] != '#' || std::sscanf(s.c_str() + 1, "%2x%2x%2x", &r, &g, &b) != 3)
        throw Error(ErrorCode::InvalidInput, "malformed palette color '" + s + "'");
      out.colors.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                            static_cast<std::uint8_t>(b), 255});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed palette: ") + e.what());
  }
  return out;
}

} // namespace artbridge
