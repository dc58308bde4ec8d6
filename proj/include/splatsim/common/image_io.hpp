#pragma once

#include <filesystem>

#include "splatsim/common/image.hpp"

namespace splatsim::io {

/// 8-bit PNG (gray, RGB or RGBA; alpha is dropped on read).
Image8 read_png8(const std::filesystem::path& path);
void write_png8(const std::filesystem::path& path, const Image8& img);

/// 16-bit single-channel PNG; raw values, no scaling.
Image<std::uint16_t> read_png16(const std::filesystem::path& path);
void write_png16(const std::filesystem::path& path, const Image<std::uint16_t>& img);

/// Portable float map (1 or 3 channels). Rows are stored bottom-to-top on disk.
ImageF read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const ImageF& img);

/// Depth map in meters from either a .pfm or a 16-bit millimeter .png. Zero means invalid.
ImageD read_depth(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const ImageD& depth);

/// [0,1] doubles <-> 8-bit with rounding and clamping.
Image8 to_rgb8(const ImageD& img);
ImageD from_rgb8(const Image8& img);

}  // namespace splatsim::io
