#pragma once

#include <posekit/types.hpp>

#include <filesystem>

namespace posekit {

/**
 * @brief Reads a PLY mesh (ascii or binary_little_endian).
 *
 * Vertex properties x, y, z are required; red, green, blue (uchar, or float
 * in [0, 1]) become vertex colours; normals and unknown properties are
 * skipped. Faces are polygon lists (vertex_indices or vertex_index) split
 * into fans. Coordinates are multiplied by `scale` (0.001 for BOP
 * millimetre models). Errors name the file and the offending element.
 */
TriangleMesh loadPly(const std::filesystem::path& path, double scale = 0.001);

/// ASCII PLY writer; coordinates are divided by `scale`.
void savePly(const std::filesystem::path& path, const TriangleMesh& mesh, double scale = 0.001);

/// Point cloud as an ASCII PLY (x y z [nx ny nz] [red green blue]), meters.
void savePointCloudPly(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace posekit
