#pragma once

#include <posekit/types.hpp>

#include <array>
#include <functional>

namespace posekit {

/// Face order: +x, -x, +y, -y, +z, -z.
using FaceColors = std::array<Vec3, 6>;

/// Six saturated, mutually distinct colours.
FaceColors distinctFaceColors();

/**
 * @brief Axis-aligned box with unshared face vertices (flat per-face colour)
 * and outward winding. Each face is split into `subdiv` x `subdiv` quads.
 */
TriangleMesh makeBox(const Vec3& half_extents, const Vec3& center, const FaceColors& colors, int subdiv = 1);

/// Distinct colour number k: points on a shell around mid-grey, ordered so
/// that consecutive indices differ strongly.
Vec3 paletteColor(int k);

/**
 * @brief Box whose faces are cut into tiles of roughly `tile` meters, each
 * tile coloured paletteColor(first_color + running tile index).
 * Returns the mesh; `next_color` (optional) receives the next unused index.
 */
TriangleMesh makeTiledBox(const Vec3& half_extents, const Vec3& center, double tile, int first_color = 0,
                          int* next_color = nullptr);

/// Cube of edge `size` centred at the origin.
TriangleMesh makeCube(double size, const FaceColors& colors, int subdiv = 1);

/// Closed cylinder along z, centred at the origin.
TriangleMesh makeCylinder(double radius, double height, int segments, const Vec3& color);

/// Icosphere; vertex colours from `color_of(unit direction)`.
TriangleMesh makeSphere(double radius, int subdivisions, const std::function<Vec3(const Vec3&)>& color_of);

/// Appends `b` to `a`.
TriangleMesh mergeMeshes(const TriangleMesh& a, const TriangleMesh& b);

/**
 * @brief Textured test object with no rotational self-symmetry: a body box
 * with two offset appendages of different sizes, tiled with distinct
 * colours. About 0.15 m across, roughly centred at the origin.
 */
TriangleMesh makeAsymmetricObject();

/// 0.1 m cube at the origin, each face split into 3 x 3 tiles of unique
/// palette colours: geometrically octahedral, visually asymmetric.
TriangleMesh makeTexturedCube();

}  // namespace posekit
