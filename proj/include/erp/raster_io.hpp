#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "erp/raster.hpp"

namespace erp {

// ERP1 layout, all little-endian:
//   "ERP1" | u32 height | u32 width | u32 band_count | u64 cell_id |
//   f64 captured_at_days | band_count planes of f32 row-major samples
std::vector<std::uint8_t> encode_erp1(const Image& image);
Image decode_erp1(std::span<const std::uint8_t> bytes);

void write_raster(const std::filesystem::path& path, const Image& image);
Image read_raster(const std::filesystem::path& path);

}  // namespace erp
