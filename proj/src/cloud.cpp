#include "morphgrasp/cloud.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "morphgrasp/errors.hpp"

namespace mg {

std::vector<std::pair<int, int>> PointCloudGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (std::size_t i = 0; i < neighbors.size(); ++i)
        for (int j : neighbors[i]) {
            int a = static_cast<int>(i), b = j;
            if (a > b) std::swap(a, b);
            out.emplace_back(a, b);
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

PointCloudGraph knn_graph(const std::vector<Vec3>& points, int k) {
    int s = static_cast<int>(points.size());
    if (k < 1 || s <= k)
        throw TooFewPoints("knn_graph needs more than k=" + std::to_string(k) + " points, got " +
                           std::to_string(s));
    PointCloudGraph g;
    g.points = points;
    g.k = k;
    g.neighbors.resize(s);
    std::vector<std::pair<double, int>> dist;
    dist.reserve(s - 1);
    for (int i = 0; i < s; ++i) {
        dist.clear();
        for (int j = 0; j < s; ++j) {
            if (j == i) continue;
            Vec3 d = points[j] - points[i];
            dist.emplace_back(d.dot(d), j);
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        g.neighbors[i].reserve(k);
        for (int n = 0; n < k; ++n) g.neighbors[i].push_back(dist[n].second);
    }
    return g;
}

GripperCloud assemble_gripper_cloud(const KinematicTree& tree,
                                    const std::map<std::string, TriMesh>& link_meshes, int count,
                                    std::uint64_t seed) {
    auto fk = forward_kinematics(tree, Transform{}, rest_pose(tree));
    GripperCloud cloud;
    std::vector<TriMesh> parts;
    std::vector<int> face_to_link;  // per merged face
    for (const LinkSpec& link : tree.links) {
        auto it = link_meshes.find(link.name);
        if (it == link_meshes.end()) continue;
        TriMesh placed = transformed(it->second, fk.at(link.name).compose(link.visual_origin));
        int link_id = static_cast<int>(cloud.link_names.size());
        cloud.link_names.push_back(link.name);
        for (std::size_t f = 0; f < placed.faces.size(); ++f) face_to_link.push_back(link_id);
        parts.push_back(std::move(placed));
    }
    if (parts.empty()) throw NoMeshes("no link of '" + tree.root_link + "' tree has a mesh");

    TriMesh merged_mesh = merged(parts);
    std::vector<int> face_of_point;
    cloud.points = sample_surface(merged_mesh, count, seed, &face_of_point);
    cloud.link_of_point.reserve(count);
    for (int f : face_of_point) cloud.link_of_point.push_back(face_to_link[f]);
    return cloud;
}

namespace {
constexpr char kCloudMagic[8] = {'M', 'G', 'P', 'C', '0', '0', '0', '1'};
}

void save_cloud(const std::string& path, const PointCloudGraph& graph) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CorruptFile("cannot write cloud file: " + path);
    f.write(kCloudMagic, 8);
    std::uint64_t s = graph.points.size();
    std::uint64_t k = static_cast<std::uint64_t>(graph.k);
    f.write(reinterpret_cast<const char*>(&s), 8);
    f.write(reinterpret_cast<const char*>(&k), 8);
    for (const Vec3& p : graph.points) {
        double xyz[3] = {p.x, p.y, p.z};
        f.write(reinterpret_cast<const char*>(xyz), 24);
    }
}

PointCloudGraph load_cloud(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CacheMiss("no cloud file at " + path);
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kCloudMagic, 8) != 0)
        throw CorruptFile("bad cloud file magic in " + path);
    std::uint64_t s = 0, k = 0;
    if (!f.read(reinterpret_cast<char*>(&s), 8) || !f.read(reinterpret_cast<char*>(&k), 8))
        throw CorruptFile("truncated cloud header in " + path);
    std::vector<Vec3> points(s);
    for (std::uint64_t i = 0; i < s; ++i) {
        double xyz[3];
        if (!f.read(reinterpret_cast<char*>(xyz), 24))
            throw CorruptFile("truncated cloud payload in " + path);
        points[i] = {xyz[0], xyz[1], xyz[2]};
    }
    return knn_graph(points, static_cast<int>(k));
}

namespace {
constexpr char kGripperMagic[8] = {'M', 'G', 'G', 'C', '0', '0', '0', '1'};
}

void save_gripper_cloud(const std::string& path, const GripperCloud& cloud) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CorruptFile("cannot write gripper cloud file: " + path);
    f.write(kGripperMagic, 8);
    std::uint64_t s = cloud.points.size();
    std::uint64_t names = cloud.link_names.size();
    f.write(reinterpret_cast<const char*>(&s), 8);
    f.write(reinterpret_cast<const char*>(&names), 8);
    for (const std::string& name : cloud.link_names) {
        std::uint64_t len = name.size();
        f.write(reinterpret_cast<const char*>(&len), 8);
        f.write(name.data(), static_cast<std::streamsize>(len));
    }
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        double xyz[3] = {cloud.points[i].x, cloud.points[i].y, cloud.points[i].z};
        f.write(reinterpret_cast<const char*>(xyz), 24);
        std::uint64_t link = static_cast<std::uint64_t>(cloud.link_of_point[i]);
        f.write(reinterpret_cast<const char*>(&link), 8);
    }
}

GripperCloud load_gripper_cloud(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CacheMiss("no gripper cloud file at " + path);
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kGripperMagic, 8) != 0)
        throw CorruptFile("bad gripper cloud magic in " + path);
    std::uint64_t s = 0, names = 0;
    if (!f.read(reinterpret_cast<char*>(&s), 8) || !f.read(reinterpret_cast<char*>(&names), 8))
        throw CorruptFile("truncated gripper cloud header in " + path);
    GripperCloud cloud;
    for (std::uint64_t i = 0; i < names; ++i) {
        std::uint64_t len = 0;
        if (!f.read(reinterpret_cast<char*>(&len), 8) || len > (1u << 20))
            throw CorruptFile("truncated gripper cloud names in " + path);
        std::string name(len, '\0');
        if (!f.read(name.data(), static_cast<std::streamsize>(len)))
            throw CorruptFile("truncated gripper cloud names in " + path);
        cloud.link_names.push_back(std::move(name));
    }
    for (std::uint64_t i = 0; i < s; ++i) {
        double xyz[3];
        std::uint64_t link = 0;
        if (!f.read(reinterpret_cast<char*>(xyz), 24) ||
            !f.read(reinterpret_cast<char*>(&link), 8))
            throw CorruptFile("truncated gripper cloud payload in " + path);
        if (link >= names) throw CorruptFile("gripper cloud link id out of range in " + path);
        cloud.points.push_back({xyz[0], xyz[1], xyz[2]});
        cloud.link_of_point.push_back(static_cast<int>(link));
    }
    return cloud;
}

}  // namespace mg
