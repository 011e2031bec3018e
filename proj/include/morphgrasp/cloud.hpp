#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "morphgrasp/mesh.hpp"
#include "morphgrasp/urdf.hpp"

namespace mg {

struct PointCloudGraph {
    std::vector<Vec3> points;
    std::vector<std::vector<int>> neighbors;  // k nearest per point, sorted by (distance, index)
    int k = 0;

    // undirected edge list (i < j) from the neighbor lists, symmetrized
    std::vector<std::pair<int, int>> edges() const;
};

// Exact k nearest neighbors by Euclidean distance; ties broken toward the
// lower index; a point is never its own neighbor.
PointCloudGraph knn_graph(const std::vector<Vec3>& points, int k);

// Surface samples of the whole hand at the canonical rest pose (identity root,
// mid-limit joints), with each point attributed to the link it came from.
struct GripperCloud {
    std::vector<Vec3> points;
    std::vector<int> link_of_point;        // index into link_names
    std::vector<std::string> link_names;   // links that contributed geometry, tree order
};

GripperCloud assemble_gripper_cloud(const KinematicTree& tree,
                                    const std::map<std::string, TriMesh>& link_meshes, int count,
                                    std::uint64_t seed);

// Flat little-endian binary: magic "MGPC0001", u64 point count, u64 k, then
// xyz doubles. Neighbor lists are recomputed from k on load, so the file only
// stores geometry.
void save_cloud(const std::string& path, const PointCloudGraph& graph);
PointCloudGraph load_cloud(const std::string& path);

// Gripper clouds additionally carry the link each point came from: magic
// "MGGC0001", u64 point count, u64 link name count, length-prefixed names,
// then per point xyz doubles plus a u64 link id.
void save_gripper_cloud(const std::string& path, const GripperCloud& cloud);
GripperCloud load_gripper_cloud(const std::string& path);

}  // namespace mg
