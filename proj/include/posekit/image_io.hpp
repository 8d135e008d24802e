#pragma once

#include <posekit/types.hpp>

#include <cstdint>
#include <filesystem>

namespace posekit {

/// 8-bit RGB PNG from [0,1] floats (values clamped).
void writePngRgb(const std::filesystem::path& path, const RgbImage& image);

/// 16-bit greyscale PNG.
void writePngGray16(const std::filesystem::path& path, const Image<std::uint16_t>& image);

/// 8- or 16-bit PNG into raw integer samples; channels follow the file
/// (grey, grey+alpha, RGB, RGBA). Throws Error naming the path on failure.
Image<std::uint16_t> readPng(const std::filesystem::path& path, int* bit_depth = nullptr);

}  // namespace posekit
