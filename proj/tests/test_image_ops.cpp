#include "doctest.h"

#include <random>

#include "artbridge/error.hpp"
#include "artbridge/image_ops.hpp"
#include "support/oracles.hpp"

using namespace artbridge;

namespace {

constexpr ColorRGBA kWhite{255, 255, 255, 255};
constexpr ColorRGBA kBlack{0, 0, 0, 255};
constexpr ColorRGBA kRed{255, 0, 0, 255};

std::size_t opaque_count(const RasterImage& img) {
  std::size_t n = 0;
  for (std::uint32_t y = 0; y < img.height(); ++y)
    for (std::uint32_t x = 0; x < img.width(); ++x) n += img.at(x, y).a > 0;
  return n;
}

RasterImage numbered(std::uint32_t w, std::uint32_t h) {
  RasterImage img(w, h);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      img.set(x, y, {std::uint8_t(x), std::uint8_t(y), std::uint8_t(y * w + x), 255});
  return img;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an artbridge::Error");
  return ErrorCode::InvalidInput;
}

} // namespace

TEST_CASE("RasterImage rejects mismatched samples and zero dimensions") {
  CHECK(code_of([] { RasterImage(0, 3); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] { RasterImage::from_samples(2, 2, std::vector<std::uint8_t>(15)); }) ==
        ErrorCode::InvalidInput);
  const auto img = RasterImage::from_samples(1, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(img.at(0, 1) == ColorRGBA{5, 6, 7, 8});
  CHECK(RasterImage().empty());
}

TEST_CASE("remove_background: uniform white image becomes fully transparent") {
  RasterImage img(4, 4, kWhite);
  const auto r = remove_background(img, 10);
  CHECK(r.background_found);
  CHECK(r.background == kWhite);
  CHECK(opaque_count(r.image) == 0);
}

TEST_CASE("remove_background: single red pixel on white survives") {
  RasterImage img(10, 10, kWhite);
  img.set(3, 3, kRed);
  const auto r = remove_background(img, 10);
  CHECK(opaque_count(r.image) == 1);
  CHECK(r.image.at(3, 3) == kRed);
  CHECK(r.image == oracle::remove_background(img, 10));
}

TEST_CASE("remove_background: ties go to the lowest packed RGB") {
  RasterImage img(2, 2, kWhite);
  img.set(0, 0, kBlack);
  img.set(1, 1, kBlack);
  const auto r = remove_background(img, 0);
  CHECK(r.background == kBlack);
  CHECK(r.image.at(0, 0).a == 0);
  CHECK(r.image.at(1, 1).a == 0);
  CHECK(r.image.at(1, 0) == kWhite);
  CHECK(r.image.at(0, 1) == kWhite);
}

TEST_CASE("remove_background: transparent pixels do not vote") {
  RasterImage img(3, 3, ColorRGBA{0, 255, 0, 0}); // 9 transparent green
  img.set(0, 0, kRed);
  img.set(1, 0, kRed);
  img.set(2, 0, kWhite);
  const auto r = remove_background(img, 0);
  CHECK(r.background == kRed);
  CHECK(r.image.at(2, 0) == kWhite);
}

TEST_CASE("remove_background: no opaque pixel is reported, not an error") {
  RasterImage img(3, 2, ColorRGBA{9, 9, 9, 0});
  const auto r = remove_background(img, 30);
  CHECK_FALSE(r.background_found);
  CHECK(r.image == img);
}

TEST_CASE("remove_background: invalid inputs") {
  CHECK(code_of([] { remove_background(RasterImage(), 1); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] { remove_background(RasterImage(1, 1), -1); }) == ErrorCode::InvalidInput);
}

TEST_CASE("remove_background: properties on random images") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 60; ++iter) {
    const auto img = gen::palette_image(rng, 24, 5);
    const double thr = double(rng() % 120);
    const auto once = remove_background(img, thr);

    // only alpha changes
    for (std::uint32_t y = 0; y < img.height(); ++y)
      for (std::uint32_t x = 0; x < img.width(); ++x) {
        const auto a = img.at(x, y), b = once.image.at(x, y);
        REQUIRE((a.r == b.r && a.g == b.g && a.b == b.b));
      }

    const auto twice = remove_background(once.image, thr);
    CHECK(opaque_count(twice.image) <= opaque_count(once.image));
    if (twice.background_found && once.background_found && twice.background == once.background)
      CHECK(twice.image == once.image);

    CHECK(remove_background(img, thr).image == once.image);
    CHECK(serial::remove_background(img, thr).image == once.image);
  }
}

TEST_CASE("composite: worked example and identities") {
  RasterImage bottom(1, 1, {0, 0, 255, 255});
  RasterImage top(1, 1, {255, 0, 0, 128});
  std::vector<RasterImage> layers{bottom, top};
  CHECK(composite(layers).at(0, 0) == ColorRGBA{128, 0, 127, 255});

  std::mt19937_64 rng(3);
  const auto base = gen::noise_image(rng, 7, 5);
  std::vector<RasterImage> single{base};
  CHECK(composite(single) == base);

  std::vector<RasterImage> with_clear{base, RasterImage(7, 5, {10, 20, 30, 0})};
  CHECK(composite(with_clear) == base);

  auto opaque_top = gen::noise_image(rng, 7, 5);
  for (std::size_t i = 3; i < opaque_top.samples().size(); i += 4) opaque_top.samples()[i] = 255;
  std::vector<RasterImage> covered{base, opaque_top};
  CHECK(composite(covered) == opaque_top);
}

TEST_CASE("composite: errors name the offending layer") {
  std::vector<RasterImage> none;
  CHECK(code_of([&] { composite(none); }) == ErrorCode::InvalidInput);
  std::vector<RasterImage> mixed{RasterImage(2, 2), RasterImage(2, 2), RasterImage(3, 2)};
  try {
    composite(mixed);
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
    CHECK(e.context().at("layer_index") == 2);
  }
}

TEST_CASE("composite: left fold associativity and oracle agreement") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 40; ++iter) {
    const std::uint32_t w = 1 + rng() % 16, h = 1 + rng() % 16;
    std::vector<RasterImage> abc{gen::noise_image(rng, w, h), gen::noise_image(rng, w, h),
                                 gen::noise_image(rng, w, h)};
    std::vector<RasterImage> ab{abc[0], abc[1]};
    std::vector<RasterImage> ab_c{composite(ab), abc[2]};
    const auto out = composite(abc);
    CHECK(out == composite(ab_c));
    CHECK(out == oracle::composite(abc));
    CHECK(out == serial::composite(abc));
  }
}

TEST_CASE("crop") {
  const auto img = numbered(4, 4);
  CHECK(crop(img, {0, 0, 4, 4}) == img);
  const auto one = crop(img, {0, 0, 1, 1});
  CHECK(one.width() == 1);
  CHECK(one.at(0, 0) == img.at(0, 0));

  const auto mid = crop(img, {1, 1, 2, 2});
  CHECK(mid.at(0, 0) == ColorRGBA{1, 1, 5, 255});
  CHECK(mid.at(1, 0) == ColorRGBA{2, 1, 6, 255});
  CHECK(mid.at(0, 1) == ColorRGBA{1, 2, 9, 255});
  CHECK(mid.at(1, 1) == ColorRGBA{2, 2, 10, 255});
}

TEST_CASE("crop: out-of-bounds rect carries a clamped suggestion") {
  const auto img = numbered(4, 4);
  try {
    crop(img, {3, 1, 5, 2});
    FAIL("expected OutOfBounds");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfBounds);
    const auto& s = e.context().at("suggested");
    CHECK(s.at("x") == 3);
    CHECK(s.at("y") == 1);
    CHECK(s.at("w") == 1);
    CHECK(s.at("h") == 2);
    // the suggestion itself is valid
    CHECK_NOTHROW(crop(img, {s["x"], s["y"], s["w"], s["h"]}));
  }
  CHECK(code_of([&] { crop(img, {0, 0, 0, 1}); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { crop(img, {0xFFFFFFFFu, 0, 2, 1}); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("crop of a crop equals one crop with the composed rect") {
  std::mt19937_64 rng(9);
  for (int iter = 0; iter < 50; ++iter) {
    const auto img = gen::noise_image(rng, 1 + rng() % 20, 1 + rng() % 20);
    const std::uint32_t x1 = rng() % img.width(), y1 = rng() % img.height();
    const std::uint32_t w1 = 1 + rng() % (img.width() - x1), h1 = 1 + rng() % (img.height() - y1);
    const std::uint32_t x2 = rng() % w1, y2 = rng() % h1;
    const std::uint32_t w2 = 1 + rng() % (w1 - x2), h2 = 1 + rng() % (h1 - y2);
    CHECK(crop(crop(img, {x1, y1, w1, h1}), {x2, y2, w2, h2}) ==
          crop(img, {x1 + x2, y1 + y2, w2, h2}));
  }
}

TEST_CASE("resize_nearest") {
  const auto img = numbered(4, 4);
  CHECK(resize_nearest(img, 4, 4) == img);

  RasterImage checker(2, 2, kWhite);
  checker.set(1, 0, kBlack);
  checker.set(0, 1, kBlack);
  const auto big = resize_nearest(checker, 4, 4);
  for (std::uint32_t y = 0; y < 4; ++y)
    for (std::uint32_t x = 0; x < 4; ++x) CHECK(big.at(x, y) == checker.at(x / 2, y / 2));

  const auto small = resize_nearest(img, 2, 2);
  CHECK(small.at(0, 0) == img.at(0, 0));
  CHECK(small.at(1, 0) == img.at(2, 0));
  CHECK(small.at(0, 1) == img.at(0, 2));
  CHECK(small.at(1, 1) == img.at(2, 2));

  CHECK(code_of([&] { resize_nearest(img, 0, 3); }) == ErrorCode::InvalidInput);

  std::mt19937_64 rng(1);
  const auto n = gen::noise_image(rng, 13, 7);
  CHECK(resize_nearest(n, 5, 11) == serial::resize_nearest(n, 5, 11));
}

TEST_CASE("image operations do not mutate their inputs") {
  std::mt19937_64 rng(2);
  const auto img = gen::palette_image(rng, 16, 4);
  const auto copy = img;
  (void)remove_background(img, 40);
  (void)crop(img, {0, 0, 1, 1});
  (void)resize_nearest(img, 3, 3);
  std::vector<RasterImage> layers{img, img};
  (void)composite(layers);
  CHECK(img == copy);
}
