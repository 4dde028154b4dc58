#pragma once

#include <filesystem>

#include "mmt/image.hpp"

namespace mmt {

// 8-bit RGB color images and 16-bit grayscale depth images.
void write_png(const std::filesystem::path& path, const ImageRgb8& image);
void write_png(const std::filesystem::path& path, const ImageU16& image);

ImageRgb8 read_png_rgb8(const std::filesystem::path& path);
ImageU16 read_png_u16(const std::filesystem::path& path);

// Depth <-> 16-bit conversion. units_per_meter defaults to 0.1 mm/unit.
constexpr double kDepthUnitsPerMeter = 10000.0;

ImageU16 encode_depth(const ImageF& depth_m,
                      double units_per_meter = kDepthUnitsPerMeter);
ImageF decode_depth(const ImageU16& depth_units,
                    double units_per_meter = kDepthUnitsPerMeter);

}  // namespace mmt
