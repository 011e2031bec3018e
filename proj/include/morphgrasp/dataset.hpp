#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "morphgrasp/cloud.hpp"
#include "morphgrasp/ik.hpp"
#include "morphgrasp/model.hpp"
#include "morphgrasp/morph_graph.hpp"

namespace mg {

// One labeled grasp: which hand, which object, and the full pose.
struct GraspRecord {
    std::string gripper_id;
    std::string object_id;
    GraspPose pose;
};

struct KeypointEntry {
    int point_index = 0;     // index into the gripper's sampled cloud
    std::string link_name;   // link that point must lie on
};

struct GripperEntry {
    std::string id;
    std::string urdf;      // relative to the manifest directory
    std::string mesh_dir;  // ditto
    std::vector<KeypointEntry> keypoints;
    int cloud_points = 1000;
    std::uint64_t cloud_seed = 0;
};

struct ObjectEntry {
    std::string id;
    std::string mesh;  // relative to the manifest directory
    int cloud_points = 2048;
    std::uint64_t cloud_seed = 0;
};

struct DatasetManifest {
    std::filesystem::path root;  // directory the manifest was loaded from
    std::vector<GripperEntry> grippers;
    std::vector<ObjectEntry> objects;
    std::vector<std::string> grasp_files;  // relative paths

    const GripperEntry* gripper(const std::string& id) const;
    const ObjectEntry* object(const std::string& id) const;
};

// JSON manifest with strict key checking; keypoint links must be pairwise
// distinct per gripper.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& m);

// Grasp files hold poses for one gripper-object pair: magic "MGGR0001",
// length-prefixed gripper and object ids, u64 dof, u64 count, then rows of
// little-endian doubles (3 translation, 4 quaternion wxyz, dof angles).
struct GraspFile {
    std::string gripper_id;
    std::string object_id;
    int dof = 0;
    std::vector<GraspPose> poses;
};

void save_grasps(const std::string& path, const GraspFile& file);
GraspFile load_grasps(const std::string& path);
std::vector<GraspRecord> load_all_grasps(const DatasetManifest& m);

// Header only -- enough to decide whether a file is wanted without touching
// the pose payload.
struct GraspFileHeader {
    std::string gripper_id;
    std::string object_id;
    int dof = 0;
    std::uint64_t count = 0;
};
GraspFileHeader peek_grasps(const std::string& path);

// Checks the quaternion is unit norm (1e-9) and joint angles sit within the
// tree's limits.
void validate_grasp(const KinematicTree& tree, const GraspRecord& record);

// Everything derived from a gripper entry that training and inference need.
struct GripperRuntime {
    GripperEntry entry;
    KinematicTree tree;
    GripperCloud cloud;
    PointCloudGraph graph;           // knn over cloud.points
    MorphologyGraph morph;           // padded to the model's morphology size
    std::vector<KeypointLocal> keypoint_locals;  // cloud points in link frames at rest
    std::vector<int> keypoint_points;
    std::vector<int> keypoint_nodes;  // morphology rows of the keypoint links
};

struct ObjectRuntime {
    ObjectEntry entry;
    PointCloudGraph graph;
};

// Cache layout under `cache_root`:
//   clouds/gripper_<id>.bin   (points + link attribution)
//   clouds/object_<id>.bin    (points only)
//   morph/<id>_<feature_set>.json
// strict loads fail with CacheMiss when a file is absent; otherwise the entry
// is built from the manifest sources and written back.
GripperRuntime load_gripper_runtime(const DatasetManifest& m, const GripperEntry& entry,
                                    const nn::ModelConfig& cfg, const std::string& cache_root,
                                    bool strict);
ObjectRuntime load_object_runtime(const DatasetManifest& m, const ObjectEntry& entry,
                                  const nn::ModelConfig& cfg, const std::string& cache_root,
                                  bool strict);

struct ContactGroundTruth {
    std::vector<int> indices;  // nearest object point per keypoint
    nn::Tensor maps;           // [S_O, N] binary, maps[indices[i], i] always 1
};

// Keypoint world positions at the grasp pose, matched against the object
// cloud: nearest point indices plus epsilon-ball membership maps.
ContactGroundTruth build_ground_truth(const GraspPose& pose, const GripperRuntime& gripper,
                                      const std::vector<Vec3>& object_points, double epsilon);

// Model-ready tensors for one gripper-object pairing (everything except the
// per-sample ground truth).
nn::ModelInputs make_model_inputs(const GripperRuntime& gripper, const ObjectRuntime& object,
                                  const nn::ModelConfig& cfg);

}  // namespace mg
