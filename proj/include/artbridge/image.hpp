#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace artbridge {

struct ColorRGBA {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 0;

  // 0xRRGGBB, alpha ignored.
  constexpr std::uint32_t packed_rgb() const {
    return (std::uint32_t{r} << 16) | (std::uint32_t{g} << 8) | std::uint32_t{b};
  }

  friend constexpr bool operator==(const ColorRGBA&, const ColorRGBA&) = default;
};

struct Rect {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t w = 0;
  std::uint32_t h = 0;

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

// Row-major RGBA8 pixel grid. A default-constructed image is empty (0x0);
// every other image has positive dimensions and exactly w*h*4 samples.
class RasterImage {
public:
  RasterImage() = default;
  RasterImage(std::uint32_t width, std::uint32_t height, ColorRGBA fill = {});

  // Takes ownership of `samples`; throws InvalidInput when the sample count
  // does not match or a dimension is zero.
  static RasterImage from_samples(std::uint32_t width, std::uint32_t height,
                                  std::vector<std::uint8_t> samples);

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  std::size_t pixel_count() const noexcept {
    return std::size_t{width_} * height_;
  }

  std::span<const std::uint8_t> samples() const noexcept { return samples_; }
  std::span<std::uint8_t> samples() noexcept { return samples_; }

  ColorRGBA at(std::uint32_t x, std::uint32_t y) const noexcept {
    const auto* p = &samples_[(std::size_t{y} * width_ + x) * 4];
    return {p[0], p[1], p[2], p[3]};
  }
  void set(std::uint32_t x, std::uint32_t y, ColorRGBA c) noexcept {
    auto* p = &samples_[(std::size_t{y} * width_ + x) * 4];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
    p[3] = c.a;
  }

  bool same_size(const RasterImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint8_t> samples_;
};

} // namespace artbridge
