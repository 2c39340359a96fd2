#include "artbridge/image.hpp"

#include <string>

#include "artbridge/error.hpp"

namespace artbridge {

RasterImage::RasterImage(std::uint32_t width, std::uint32_t height, ColorRGBA fill)
    : width_(width), height_(height) {
  if (width == 0 || height == 0)
    throw Error(ErrorCode::InvalidInput, "image dimensions must be positive",
                {{"width", width}, {"height", height}});
  samples_.resize(pixel_count() * 4);
  for (std::size_t i = 0; i < samples_.size(); i += 4) {
    samples_[i] = fill.r;
    samples_[i + 1] = fill.g;
    samples_[i + 2] = fill.b;
    samples_[i + 3] = fill.a;
  }
}

RasterImage RasterImage::from_samples(std::uint32_t width, std::uint32_t height,
                                      std::vector<std::uint8_t> samples) {
  if (width == 0 || height == 0)
    throw Error(ErrorCode::InvalidInput, "image dimensions must be positive",
                {{"width", width}, {"height", height}});
  if (samples.size() != std::size_t{width} * height * 4)
    throw Error(ErrorCode::InvalidInput,
                "sample count " + std::to_string(samples.size()) +
                    " does not match " + std::to_string(width) + "x" +
                    std::to_string(height) + " RGBA");
  RasterImage img;
  img.width_ = width;
  img.height_ = height;
  img.samples_ = std::move(samples);
  return img;
}

} // namespace artbridge
