#include "artbridge/png_io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>
#include <fstream>

#include <boost/beast/core/detail/base64.hpp>

#include "artbridge/error.hpp"

namespace artbridge::png {

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void read_callback(png_structp png_ptr, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png_ptr));
  if (cursor->offset + length > cursor->bytes.size())
    png_error(png_ptr, "truncated PNG stream");
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

void write_callback(png_structp png_ptr, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png_ptr));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

void error_callback(png_structp png_ptr, png_const_charp message) {
  auto* msg = static_cast<std::string*>(png_get_error_ptr(png_ptr));
  if (msg) *msg = message;
  png_longjmp(png_ptr, 1);
}

void warning_callback(png_structp, png_const_charp) {}

// Deflates a SUB-filtered sample of rows. Stylized frames are mostly noise
// and barely shrink, so paying ~10 ms of Huffman coding for them is wasted.
bool worth_compressing(const RasterImage& img) {
  const std::uint32_t stride = img.width() * 4;
  const std::uint32_t step = std::max<std::uint32_t>(1, img.height() / 16);
  std::vector<std::uint8_t> sample;
  for (std::uint32_t y = 0; y < img.height(); y += step) {
    const auto* row = img.samples().data() + std::size_t{y} * stride;
    for (std::uint32_t i = 0; i < stride; ++i)
      sample.push_back(static_cast<std::uint8_t>(row[i] - (i >= 4 ? row[i - 4] : 0)));
  }
  uLongf size = compressBound(sample.size());
  std::vector<Bytef> packed(size);
  z_stream zs{};
  if (deflateInit2(&zs, 1, Z_DEFLATED, 15, 8, Z_RLE) != Z_OK) return true;
  zs.next_in = sample.data();
  zs.avail_in = static_cast<uInt>(sample.size());
  zs.next_out = packed.data();
  zs.avail_out = static_cast<uInt>(size);
  const int rc = deflate(&zs, Z_FINISH);
  size = zs.total_out;
  deflateEnd(&zs);
  return rc != Z_STREAM_END || size * 4 < sample.size() * 3;
}

} // namespace

std::vector<std::uint8_t> encode(const RasterImage& img) {
  if (img.empty())
    throw Error(ErrorCode::InvalidInput, "cannot encode an empty image");

  std::string message;
  png_structp png_ptr = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                                error_callback, warning_callback);
  if (!png_ptr) throw Error(ErrorCode::Io, "png_create_write_struct failed");
  png_infop info_ptr = png_create_info_struct(png_ptr);
  if (!info_ptr) {
    png_destroy_write_struct(&png_ptr, nullptr);
    throw Error(ErrorCode::Io, "png_create_info_struct failed");
  }

  std::vector<std::uint8_t> out;
  out.reserve(img.pixel_count() + 1024);
  std::vector<png_bytep> rows(img.height());

  if (setjmp(png_jmpbuf(png_ptr))) {
    png_destroy_write_struct(&png_ptr, &info_ptr);
    throw Error(ErrorCode::Io, "PNG encode failed: " + message);
  }

  png_set_write_fn(png_ptr, &out, write_callback, flush_callback);
  png_set_IHDR(png_ptr, info_ptr, img.width(), img.height(), 8,
               PNG_COLOR_TYPE_RGB_ALPHA, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // Run-length deflate shrinks flat drawings ~100x at a fraction of the cost
  // of level-1 matching; incompressible frames are stored.
  if (worth_compressing(img)) {
    png_set_compression_level(png_ptr, 1);
    png_set_compression_strategy(png_ptr, Z_RLE);
    png_set_filter(png_ptr, 0, PNG_FILTER_SUB);
  } else {
    png_set_compression_level(png_ptr, 0);
    png_set_filter(png_ptr, 0, PNG_FILTER_NONE);
  }
  png_write_info(png_ptr, info_ptr);

  auto* base = const_cast<std::uint8_t*>(img.samples().data());
  for (std::uint32_t y = 0; y < img.height(); ++y)
    rows[y] = base + std::size_t{y} * img.width() * 4;
  png_write_image(png_ptr, rows.data());
  png_write_end(png_ptr, nullptr);
  png_destroy_write_struct(&png_ptr, &info_ptr);
  return out;
}

RasterImage decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw Error(ErrorCode::ProtocolError, "not a PNG stream");

  std::string message;
  png_structp png_ptr = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                               error_callback, warning_callback);
  if (!png_ptr) throw Error(ErrorCode::Io, "png_create_read_struct failed");
  png_infop info_ptr = png_create_info_struct(png_ptr);
  if (!info_ptr) {
    png_destroy_read_struct(&png_ptr, nullptr, nullptr);
    throw Error(ErrorCode::Io, "png_create_info_struct failed");
  }

  ReadCursor cursor{bytes, 0};
  std::vector<std::uint8_t> samples;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;

  if (setjmp(png_jmpbuf(png_ptr))) {
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    throw Error(ErrorCode::ProtocolError, "PNG decode failed: " + message);
  }

  png_set_read_fn(png_ptr, &cursor, read_callback);
  png_read_info(png_ptr, info_ptr);
  width = png_get_image_width(png_ptr, info_ptr);
  height = png_get_image_height(png_ptr, info_ptr);
  const int color_type = png_get_color_type(png_ptr, info_ptr);
  const int bit_depth = png_get_bit_depth(png_ptr, info_ptr);

  if (bit_depth == 16) png_set_strip_16(png_ptr);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_ptr);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png_ptr);
  if (png_get_valid(png_ptr, info_ptr, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png_ptr);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png_ptr);
  if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_GRAY ||
      color_type == PNG_COLOR_TYPE_PALETTE)
    png_set_filler(png_ptr, 0xFF, PNG_FILLER_AFTER);
  png_set_interlace_handling(png_ptr);
  png_read_update_info(png_ptr, info_ptr);

  if (width == 0 || height == 0 || png_get_rowbytes(png_ptr, info_ptr) != width * 4) {
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    throw Error(ErrorCode::ProtocolError, "unsupported PNG layout");
  }

  samples.resize(std::size_t{width} * height * 4);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y)
    rows[y] = samples.data() + std::size_t{y} * width * 4;
  png_read_image(png_ptr, rows.data());
  png_read_end(png_ptr, nullptr);
  png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
  return RasterImage::from_samples(width, height, std::move(samples));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

RasterImage load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode(bytes);
}

void save(const RasterImage& img, const std::filesystem::path& path) {
  write_file(path, encode(img));
}

} // namespace artbridge::png

namespace artbridge::base64 {

namespace detail = boost::beast::detail::base64;

std::string encode(std::span<const std::uint8_t> bytes) {
  std::string out(detail::encoded_size(bytes.size()), '\0');
  out.resize(detail::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> decode(std::string_view text) {
  if (text.size() % 4 != 0)
    throw Error(ErrorCode::ProtocolError, "base64 length is not a multiple of 4");
  // detail::decode stops at the first '=', so padding is checked here
  std::size_t body = text.size();
  for (int i = 0; i < 2 && body > 0 && text[body - 1] == '='; ++i) --body;
  std::vector<std::uint8_t> out(detail::decoded_size(text.size()));
  const auto [written, consumed] = detail::decode(out.data(), text.data(), body);
  if (consumed != body || body % 4 == 1)
    throw Error(ErrorCode::ProtocolError, "malformed base64 payload");
  out.resize(written);
  return out;
}

} // namespace artbridge::base64
