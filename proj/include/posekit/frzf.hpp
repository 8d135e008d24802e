#pragma once

#include <posekit/features.hpp>

#include <filesystem>
#include <iosfwd>

namespace posekit {

/**
 * FRZF feature interchange format (little-endian, no padding):
 *
 *   offset  size  field
 *   0       4     magic "FRZF"
 *   4       4     version (u32) = 1
 *   8       8     rows (u64)
 *   16      4     dim (u32)
 *   20      4     reserved (u32) = 0
 *   24      ...   rows * dim float32, row-major
 */
inline constexpr std::uint32_t kFrzfVersion = 1;
inline constexpr size_t kFrzfHeaderSize = 24;

void writeFrzf(std::ostream& out, const FeatureMatrix& features);
void writeFrzf(const std::filesystem::path& path, const FeatureMatrix& features);

/// Errors: "bad magic", "unsupported version", "unexpected end of stream",
/// "non-finite value in payload".
FeatureMatrix readFrzf(std::istream& in);
FeatureMatrix readFrzf(const std::filesystem::path& path);

}  // namespace posekit
