#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rcov/vprompt.hpp"

namespace rcov {

/// Decodes PNG (any bit depth / color type, alpha dropped) or baseline JPEG,
/// detected by signature. Throws ImageError.
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage read_image(const std::filesystem::path& path);

/// RGB8 PNG, no alpha, no ancillary chunks, filter type 0 on every row and
/// a single IDAT compressed with zlib level 9. Output depends only on the
/// pixels.
std::vector<std::uint8_t> encode_png(const RasterImage& image);
void write_png(const std::filesystem::path& path, const RasterImage& image);

}  // namespace rcov
