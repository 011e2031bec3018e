#include "morphgrasp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <set>

#include "morphgrasp/errors.hpp"

namespace mg {

using nlohmann::json;
namespace fs = std::filesystem;

const GripperEntry* DatasetManifest::gripper(const std::string& id) const {
    for (const GripperEntry& g : grippers)
        if (g.id == id) return &g;
    return nullptr;
}

const ObjectEntry* DatasetManifest::object(const std::string& id) const {
    for (const ObjectEntry& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (allowed.count(key) == 0)
            throw ConfigMismatch(std::string("unknown key '") + key + "' in " + where);
    }
}

GripperEntry parse_gripper(const json& j) {
    reject_unknown(j, {"id", "urdf", "mesh_dir", "keypoints", "cloud_points", "cloud_seed"},
                   "gripper entry");
    GripperEntry e;
    e.id = j.at("id").get<std::string>();
    e.urdf = j.at("urdf").get<std::string>();
    e.mesh_dir = j.at("mesh_dir").get<std::string>();
    if (j.contains("cloud_points")) e.cloud_points = j.at("cloud_points").get<int>();
    if (j.contains("cloud_seed")) e.cloud_seed = j.at("cloud_seed").get<std::uint64_t>();
    std::set<std::string> links;
    for (const json& kj : j.at("keypoints")) {
        reject_unknown(kj, {"point", "link"}, "keypoint entry");
        KeypointEntry k;
        k.point_index = kj.at("point").get<int>();
        k.link_name = kj.at("link").get<std::string>();
        if (!links.insert(k.link_name).second)
            throw ConfigMismatch("gripper " + e.id + " repeats keypoint link " + k.link_name);
        e.keypoints.push_back(std::move(k));
    }
    return e;
}

ObjectEntry parse_object(const json& j) {
    reject_unknown(j, {"id", "mesh", "cloud_points", "cloud_seed"}, "object entry");
    ObjectEntry e;
    e.id = j.at("id").get<std::string>();
    e.mesh = j.at("mesh").get<std::string>();
    if (j.contains("cloud_points")) e.cloud_points = j.at("cloud_points").get<int>();
    if (j.contains("cloud_seed")) e.cloud_seed = j.at("cloud_seed").get<std::uint64_t>();
    return e;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CacheMiss("no dataset manifest at " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw CorruptFile("bad manifest JSON in " + path + ": " + e.what());
    }
    try {
        reject_unknown(j, {"schema", "grippers", "objects", "grasp_files"}, "manifest");
        if (j.at("schema").get<std::string>() != "dataset/1")
            throw CorruptFile("unsupported manifest schema in " + path);
        DatasetManifest m;
        m.root = fs::absolute(fs::path(path)).parent_path();
        std::set<std::string> ids;
        for (const json& gj : j.at("grippers")) {
            GripperEntry e = parse_gripper(gj);
            if (!ids.insert("g:" + e.id).second)
                throw ConfigMismatch("duplicate gripper id " + e.id);
            m.grippers.push_back(std::move(e));
        }
        for (const json& oj : j.at("objects")) {
            ObjectEntry e = parse_object(oj);
            if (!ids.insert("o:" + e.id).second)
                throw ConfigMismatch("duplicate object id " + e.id);
            m.objects.push_back(std::move(e));
        }
        if (j.contains("grasp_files"))
            for (const json& fj : j.at("grasp_files")) m.grasp_files.push_back(fj.get<std::string>());
        return m;
    } catch (const json::exception& e) {
        throw CorruptFile("manifest missing fields in " + path + ": " + e.what());
    }
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    json j;
    j["schema"] = "dataset/1";
    json grippers = json::array();
    for (const GripperEntry& g : m.grippers) {
        json e;
        e["id"] = g.id;
        e["urdf"] = g.urdf;
        e["mesh_dir"] = g.mesh_dir;
        e["cloud_points"] = g.cloud_points;
        e["cloud_seed"] = g.cloud_seed;
        json kps = json::array();
        for (const KeypointEntry& k : g.keypoints)
            kps.push_back({{"point", k.point_index}, {"link", k.link_name}});
        e["keypoints"] = kps;
        grippers.push_back(e);
    }
    j["grippers"] = grippers;
    json objects = json::array();
    for (const ObjectEntry& o : m.objects) {
        json e;
        e["id"] = o.id;
        e["mesh"] = o.mesh;
        e["cloud_points"] = o.cloud_points;
        e["cloud_seed"] = o.cloud_seed;
        objects.push_back(e);
    }
    j["objects"] = objects;
    j["grasp_files"] = m.grasp_files;
    std::ofstream f(path);
    if (!f) throw CorruptFile("cannot write manifest: " + path);
    f << j.dump(2) << "\n";
}

namespace {
constexpr char kGraspMagic[8] = {'M', 'G', 'G', 'R', '0', '0', '0', '1'};

void write_string(std::ofstream& f, const std::string& s) {
    std::uint64_t len = s.size();
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write(s.data(), static_cast<std::streamsize>(len));
}

std::string read_string(std::ifstream& f, const std::string& path) {
    std::uint64_t len = 0;
    if (!f.read(reinterpret_cast<char*>(&len), 8) || len > (1u << 20))
        throw CorruptFile("truncated grasp file header in " + path);
    std::string s(len, '\0');
    if (!f.read(s.data(), static_cast<std::streamsize>(len)))
        throw CorruptFile("truncated grasp file header in " + path);
    return s;
}
}  // namespace

void save_grasps(const std::string& path, const GraspFile& file) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CorruptFile("cannot write grasp file: " + path);
    f.write(kGraspMagic, 8);
    write_string(f, file.gripper_id);
    write_string(f, file.object_id);
    std::uint64_t dof = static_cast<std::uint64_t>(file.dof);
    std::uint64_t count = file.poses.size();
    f.write(reinterpret_cast<const char*>(&dof), 8);
    f.write(reinterpret_cast<const char*>(&count), 8);
    for (const GraspPose& p : file.poses) {
        if (static_cast<int>(p.joint_angles.size()) != file.dof)
            throw ShapeMismatch("grasp pose has " + std::to_string(p.joint_angles.size()) +
                                " angles, file expects " + std::to_string(file.dof));
        double head[7] = {p.translation.x, p.translation.y, p.translation.z,
                          p.rotation.w,    p.rotation.x,    p.rotation.y,   p.rotation.z};
        f.write(reinterpret_cast<const char*>(head), 56);
        f.write(reinterpret_cast<const char*>(p.joint_angles.data()),
                static_cast<std::streamsize>(8 * p.joint_angles.size()));
    }
}

GraspFile load_grasps(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CacheMiss("no grasp file at " + path);
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kGraspMagic, 8) != 0)
        throw CorruptFile("bad grasp file magic in " + path);
    GraspFile out;
    out.gripper_id = read_string(f, path);
    out.object_id = read_string(f, path);
    std::uint64_t dof = 0, count = 0;
    if (!f.read(reinterpret_cast<char*>(&dof), 8) || !f.read(reinterpret_cast<char*>(&count), 8))
        throw CorruptFile("truncated grasp file header in " + path);
    out.dof = static_cast<int>(dof);
    for (std::uint64_t i = 0; i < count; ++i) {
        GraspPose p;
        double head[7];
        if (!f.read(reinterpret_cast<char*>(head), 56))
            throw CorruptFile("truncated grasp row in " + path);
        p.translation = {head[0], head[1], head[2]};
        p.rotation = {head[3], head[4], head[5], head[6]};
        p.joint_angles.resize(dof);
        if (dof > 0 && !f.read(reinterpret_cast<char*>(p.joint_angles.data()),
                               static_cast<std::streamsize>(8 * dof)))
            throw CorruptFile("truncated grasp row in " + path);
        out.poses.push_back(std::move(p));
    }
    return out;
}

GraspFileHeader peek_grasps(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CacheMiss("no grasp file at " + path);
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kGraspMagic, 8) != 0)
        throw CorruptFile("bad grasp file magic in " + path);
    GraspFileHeader h;
    h.gripper_id = read_string(f, path);
    h.object_id = read_string(f, path);
    std::uint64_t dof = 0;
    if (!f.read(reinterpret_cast<char*>(&dof), 8) ||
        !f.read(reinterpret_cast<char*>(&h.count), 8))
        throw CorruptFile("truncated grasp file header in " + path);
    h.dof = static_cast<int>(dof);
    return h;
}

std::vector<GraspRecord> load_all_grasps(const DatasetManifest& m) {
    std::vector<GraspRecord> out;
    for (const std::string& rel : m.grasp_files) {
        GraspFile gf = load_grasps((m.root / rel).string());
        for (GraspPose& p : gf.poses)
            out.push_back(GraspRecord{gf.gripper_id, gf.object_id, std::move(p)});
    }
    return out;
}

void validate_grasp(const KinematicTree& tree, const GraspRecord& record) {
    double n = record.pose.rotation.norm();
    if (std::abs(n - 1.0) > 1e-9)
        throw ConfigMismatch("grasp quaternion norm " + std::to_string(n) + " for gripper " +
                             record.gripper_id);
    std::vector<std::string> names = tree.revolute_joint_names();
    if (record.pose.joint_angles.size() != names.size())
        throw MissingJointAngle("grasp has " + std::to_string(record.pose.joint_angles.size()) +
                                " angles, gripper " + record.gripper_id + " has " +
                                std::to_string(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i)
        for (const JointSpec& j : tree.joints)
            if (j.name == names[i]) {
                double q = record.pose.joint_angles[i];
                if (q < j.limit_lower - 1e-9 || q > j.limit_upper + 1e-9)
                    throw ConfigMismatch("grasp angle " + std::to_string(q) + " outside limits of " +
                                         j.name);
            }
}

namespace {

// A morphology graph re-padded to `target` rows; real content is unchanged.
MorphologyGraph repad_morph(const MorphologyGraph& g, int target) {
    if (g.real_node_count > target)
        throw TooManyLinks(std::to_string(g.real_node_count) + " links exceed padded size " +
                           std::to_string(target));
    if (g.padded_size() == target) return g;
    MorphologyGraph out;
    out.real_node_count = g.real_node_count;
    out.link_index = g.link_index;
    out.feature_set = g.feature_set;
    out.features = nn::Tensor::zeros({target, 9});
    out.adjacency = nn::Tensor::zeros({target, target});
    for (int r = 0; r < g.real_node_count; ++r) {
        for (int c = 0; c < 9; ++c) out.features.at(r, c) = g.features.at(r, c);
        for (int c = 0; c < g.real_node_count; ++c) out.adjacency.at(r, c) = g.adjacency.at(r, c);
    }
    return out;
}

std::map<std::string, TriMesh> gripper_link_meshes(const KinematicTree& tree,
                                                   const fs::path& mesh_dir) {
    std::map<std::string, TriMesh> meshes;
    for (const LinkSpec& link : tree.links)
        if (link.mesh_ref) meshes[link.name] = load_mesh((mesh_dir / *link.mesh_ref).string());
    return meshes;
}

}  // namespace

GripperRuntime load_gripper_runtime(const DatasetManifest& m, const GripperEntry& entry,
                                    const nn::ModelConfig& cfg, const std::string& cache_root,
                                    bool strict) {
    if (entry.cloud_points != cfg.gripper_points)
        throw ConfigMismatch("gripper " + entry.id + " cloud has " +
                             std::to_string(entry.cloud_points) + " points, model expects " +
                             std::to_string(cfg.gripper_points));
    if (static_cast<int>(entry.keypoints.size()) != cfg.keypoints)
        throw ConfigMismatch("gripper " + entry.id + " defines " +
                             std::to_string(entry.keypoints.size()) + " keypoints, model expects " +
                             std::to_string(cfg.keypoints));

    GripperRuntime rt;
    rt.entry = entry;
    rt.tree = load_urdf((m.root / entry.urdf).string());
    fs::path mesh_dir = m.root / entry.mesh_dir;

    fs::path cloud_path = fs::path(cache_root) / "clouds" / ("gripper_" + entry.id + ".bin");
    if (fs::exists(cloud_path)) {
        rt.cloud = load_gripper_cloud(cloud_path.string());
    } else if (strict) {
        throw CacheMiss("missing gripper cloud cache " + cloud_path.string());
    } else {
        rt.cloud = assemble_gripper_cloud(rt.tree, gripper_link_meshes(rt.tree, mesh_dir),
                                          entry.cloud_points, entry.cloud_seed);
        fs::create_directories(cloud_path.parent_path());
        save_gripper_cloud(cloud_path.string(), rt.cloud);
    }
    if (static_cast<int>(rt.cloud.points.size()) != entry.cloud_points)
        throw ConfigMismatch("gripper cloud cache for " + entry.id + " has " +
                             std::to_string(rt.cloud.points.size()) + " points, manifest says " +
                             std::to_string(entry.cloud_points));
    rt.graph = knn_graph(rt.cloud.points, cfg.knn);

    MorphFeatureSet fset = cfg.expected_feature_set();
    fs::path morph_path =
        fs::path(cache_root) / "morph" / (entry.id + "_" + to_string(fset) + ".json");
    MorphologyGraph cached;
    if (fs::exists(morph_path)) {
        cached = load_morph_graph(morph_path.string());
        if (cached.feature_set != fset)
            throw ConfigMismatch("morphology cache " + morph_path.string() +
                                 " carries feature set " + to_string(cached.feature_set));
    } else if (strict) {
        throw CacheMiss("missing morphology cache " + morph_path.string());
    } else {
        auto summaries = link_summaries_from_meshes(rt.tree, mesh_dir.string());
        int canonical = std::max(32, static_cast<int>(rt.tree.links.size()));
        cached = build_morphology_graph(rt.tree, summaries, fset, canonical);
        fs::create_directories(morph_path.parent_path());
        save_morph_graph(morph_path.string(), cached, fset);
    }
    rt.morph = repad_morph(cached, cfg.morph_nodes);

    auto fk = forward_kinematics(rt.tree, Transform{}, rest_pose(rt.tree));
    for (const KeypointEntry& kp : entry.keypoints) {
        if (kp.point_index < 0 || kp.point_index >= static_cast<int>(rt.cloud.points.size()))
            throw InvalidKeypointIndex("keypoint index " + std::to_string(kp.point_index) +
                                       " outside gripper cloud of " + entry.id);
        int link_id = rt.cloud.link_of_point[static_cast<std::size_t>(kp.point_index)];
        const std::string& actual = rt.cloud.link_names[static_cast<std::size_t>(link_id)];
        if (actual != kp.link_name)
            throw ConfigMismatch("keypoint " + std::to_string(kp.point_index) + " of " + entry.id +
                                 " lies on link " + actual + ", manifest says " + kp.link_name);
        auto node = rt.morph.link_index.find(kp.link_name);
        if (node == rt.morph.link_index.end())
            throw UnknownLink("keypoint link " + kp.link_name + " not in morphology graph");
        Vec3 world = rt.cloud.points[static_cast<std::size_t>(kp.point_index)];
        rt.keypoint_locals.push_back(
            KeypointLocal{kp.link_name, fk.at(kp.link_name).inverse().apply(world)});
        rt.keypoint_points.push_back(kp.point_index);
        rt.keypoint_nodes.push_back(node->second);
    }
    return rt;
}

ObjectRuntime load_object_runtime(const DatasetManifest& m, const ObjectEntry& entry,
                                  const nn::ModelConfig& cfg, const std::string& cache_root,
                                  bool strict) {
    if (entry.cloud_points != cfg.object_points)
        throw ConfigMismatch("object " + entry.id + " cloud has " +
                             std::to_string(entry.cloud_points) + " points, model expects " +
                             std::to_string(cfg.object_points));
    ObjectRuntime rt;
    rt.entry = entry;
    fs::path cloud_path = fs::path(cache_root) / "clouds" / ("object_" + entry.id + ".bin");
    if (fs::exists(cloud_path)) {
        PointCloudGraph loaded = load_cloud(cloud_path.string());
        rt.graph = knn_graph(loaded.points, cfg.knn);
    } else if (strict) {
        throw CacheMiss("missing object cloud cache " + cloud_path.string());
    } else {
        TriMesh mesh = load_mesh((m.root / entry.mesh).string());
        auto points = sample_surface(mesh, entry.cloud_points, entry.cloud_seed);
        rt.graph = knn_graph(points, cfg.knn);
        fs::create_directories(cloud_path.parent_path());
        save_cloud(cloud_path.string(), rt.graph);
    }
    if (static_cast<int>(rt.graph.points.size()) != entry.cloud_points)
        throw ConfigMismatch("object cloud cache for " + entry.id + " has " +
                             std::to_string(rt.graph.points.size()) + " points, manifest says " +
                             std::to_string(entry.cloud_points));
    return rt;
}

ContactGroundTruth build_ground_truth(const GraspPose& pose, const GripperRuntime& gripper,
                                      const std::vector<Vec3>& object_points, double epsilon) {
    if (object_points.empty()) throw EmptyCloud("ground truth needs a non-empty object cloud");
    std::vector<Vec3> kp = keypoint_positions(gripper.tree, gripper.keypoint_locals, pose);
    ContactGroundTruth gt;
    int s = static_cast<int>(object_points.size());
    int n = static_cast<int>(kp.size());
    gt.maps = nn::Tensor::zeros({s, n});
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int v = 0; v < s; ++v) {
            Vec3 d = object_points[static_cast<std::size_t>(v)] - kp[static_cast<std::size_t>(i)];
            double dist2 = d.dot(d);
            if (dist2 < best_d) {
                best_d = dist2;
                best = v;
            }
            if (std::sqrt(dist2) <= epsilon) gt.maps.at(v, i) = 1.0;
        }
        gt.indices.push_back(best);
        gt.maps.at(best, i) = 1.0;
    }
    return gt;
}

nn::ModelInputs make_model_inputs(const GripperRuntime& gripper, const ObjectRuntime& object,
                                  const nn::ModelConfig& cfg) {
    if (static_cast<int>(object.graph.points.size()) != cfg.object_points)
        throw ConfigMismatch("object cloud has " + std::to_string(object.graph.points.size()) +
                             " points, model expects " + std::to_string(cfg.object_points));
    if (static_cast<int>(gripper.cloud.points.size()) != cfg.gripper_points)
        throw ConfigMismatch("gripper cloud has " + std::to_string(gripper.cloud.points.size()) +
                             " points, model expects " + std::to_string(cfg.gripper_points));
    if (gripper.morph.padded_size() != cfg.morph_nodes)
        throw ConfigMismatch("morphology graph padded to " +
                             std::to_string(gripper.morph.padded_size()) + ", model expects " +
                             std::to_string(cfg.morph_nodes));
    if (static_cast<int>(gripper.keypoint_points.size()) != cfg.keypoints)
        throw ConfigMismatch("gripper declares " + std::to_string(gripper.keypoint_points.size()) +
                             " keypoints, model expects " + std::to_string(cfg.keypoints));
    nn::ModelInputs in;
    int so = static_cast<int>(object.graph.points.size());
    in.object_points = nn::Tensor::zeros({so, 3});
    for (int i = 0; i < so; ++i) {
        const Vec3& p = object.graph.points[static_cast<std::size_t>(i)];
        in.object_points.at(i, 0) = p.x;
        in.object_points.at(i, 1) = p.y;
        in.object_points.at(i, 2) = p.z;
    }
    in.object_adj = nn::normalize_adjacency(
        nn::adjacency_from_edges(so, object.graph.edges(), true), "row");

    int sg = static_cast<int>(gripper.cloud.points.size());
    in.gripper_points = nn::Tensor::zeros({sg, 3});
    for (int i = 0; i < sg; ++i) {
        const Vec3& p = gripper.cloud.points[static_cast<std::size_t>(i)];
        in.gripper_points.at(i, 0) = p.x;
        in.gripper_points.at(i, 1) = p.y;
        in.gripper_points.at(i, 2) = p.z;
    }
    in.gripper_adj = nn::normalize_adjacency(
        nn::adjacency_from_edges(sg, gripper.graph.edges(), true), "row");

    in.morph_features = gripper.morph.features;
    in.morph_adj = nn::normalize_adjacency(gripper.morph.adjacency, "row");
    in.morph_real = gripper.morph.real_node_count;
    in.morph_feature_set = gripper.morph.feature_set;
    in.keypoint_point = gripper.keypoint_points;
    in.keypoint_node = gripper.keypoint_nodes;
    return in;
}

}  // namespace mg
