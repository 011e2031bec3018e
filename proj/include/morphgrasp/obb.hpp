#pragma once

#include <utility>
#include <vector>

#include "morphgrasp/geom.hpp"
#include "morphgrasp/mesh.hpp"

namespace mg {

// Oriented bounding box; columns of `rotation` are the box axes, matching
// `extents` (full side lengths, sorted descending). det(rotation) = +1.
struct OrientedBox {
    Mat3 rotation;
    Vec3 center{0, 0, 0};
    Vec3 extents{0, 0, 0};
    double volume() const { return extents.x * extents.y * extents.z; }
};

// Near-minimal-volume OBB: best of axis-aligned and PCA-aligned starts,
// refined by coordinate descent over axis-angle perturbations with shrinking
// step sizes. Guaranteed no worse than either starting box.
OrientedBox obb_of_points(const std::vector<Vec3>& points);
OrientedBox min_volume_obb(const TriMesh& mesh);

// (com, size) of the mesh placed by world_transform: OBB center and extents in
// the world frame.
std::pair<Vec3, Vec3> link_summary(const TriMesh& mesh, const Transform& world_transform);

}  // namespace mg
