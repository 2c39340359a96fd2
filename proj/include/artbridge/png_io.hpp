#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "artbridge/image.hpp"

namespace artbridge::png {

// Encoding is deterministic: identical pixels always produce identical bytes
// (fixed zlib level, fixed filter, no timestamp chunks).
std::vector<std::uint8_t> encode(const RasterImage& img);

// Accepts any PNG libpng can read; palette, grayscale, 16-bit and
// interlaced inputs are normalized to RGBA8. Throws ProtocolError.
RasterImage decode(std::span<const std::uint8_t> bytes);

RasterImage load(const std::filesystem::path& path);
void save(const RasterImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace artbridge::png

namespace artbridge::base64 {

std::string encode(std::span<const std::uint8_t> bytes);
// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> decode(std::string_view text);

} // namespace artbridge::base64
