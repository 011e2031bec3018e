#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "morphgrasp/dataset.hpp"
#include "morphgrasp/optim.hpp"

namespace mg {

struct TrainConfig {
    int epochs = 150;
    int batch_size = 32;
    nn::AdamConfig adam;
    std::uint64_t seed = 0;
    double w_geometric = 1.0;  // weight of the contact-map BCE term
    double w_contact = 1.0;    // weight of the autoregressive CE term
    double epsilon = 0.015;    // contact ball radius in meters for ground truth
    std::vector<std::string> holdout_grippers;
    std::vector<std::string> holdout_objects;
    int checkpoint_every = 0;     // extra checkpoint_epoch_<e>.bin every K epochs
    std::string init_checkpoint;  // warm start; required for freeze_policy finetune

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);  // rejects unknown keys
};

struct EpochLoss {
    int epoch = 0;
    double geometric = 0.0;
    double contact = 0.0;
    double total = 0.0;
};

struct TrainResult {
    std::string checkpoint_path;
    std::vector<EpochLoss> curve;  // row 0 is the pre-training evaluation
    int samples = 0;
    int steps = 0;  // optimizer steps taken
};

// Trains on every grasp record whose gripper and object survive the holdout
// lists. Caches under cache_root must already exist (CacheMiss otherwise).
// run_dir receives config.json (effective config echo), loss.txt (one line
// per epoch: epoch, geometric, contact, total), access.log (every dataset id
// and grasp file touched), and checkpoints. Deterministic for a fixed seed.
TrainResult train(const DatasetManifest& manifest, const nn::ModelConfig& mcfg,
                  const TrainConfig& tcfg, const std::string& cache_root,
                  const std::string& run_dir);

// A checkpoint rebuilt into usable weights. Movable; parameter addresses are
// stable because the store owns them behind pointers.
struct LoadedModel {
    nn::ModelConfig config;
    nn::ParamStore params;
    nn::ModelWeights weights;
    nlohmann::json meta;
};

LoadedModel load_model(const std::string& checkpoint_path);

struct SampleEval {
    std::string gripper_id;
    std::string object_id;
    double geometric = 0.0;      // contact-map BCE, teacher-forced
    double contact = 0.0;        // autoregressive CE, teacher-forced
    std::vector<int> predicted;  // inference-mode contact indices
    std::vector<int> truth;
    int matches = 0;  // positions where predicted == truth
};

struct EvalOptions {
    std::vector<std::string> grippers;  // empty = every gripper in the records
    std::vector<std::string> objects;
    double epsilon = 0.015;
};

// Per-record losses and predictions over the manifest's grasp records.
// Missing caches are built on the fly (non-strict).
std::vector<SampleEval> evaluate_dataset(const DatasetManifest& manifest,
                                         const LoadedModel& model,
                                         const std::string& cache_root,
                                         const EvalOptions& opts = {});

struct ContactPrediction {
    std::vector<int> indices;
    std::vector<Vec3> coords;  // object cloud coordinates at those indices
};

// Inference forward pass on a fresh cloud sampled from the mesh.
ContactPrediction predict_contacts(const LoadedModel& model, const TriMesh& object_mesh,
                                   std::uint64_t cloud_seed, const GripperRuntime& gripper);

struct GraspFit {
    GraspPose pose;
    double rms = 0.0;
    bool converged = false;
};

// Fits the gripper's keypoints to the targets, trying a fixed set of initial
// orientations and keeping the best result. Deterministic.
GraspFit fit_grasp(const GripperRuntime& gripper, const std::vector<Vec3>& targets);

struct GraspResidual {
    std::string gripper_id;
    std::string object_id;
    double rms = 0.0;  // RMS keypoint-to-nearest-object-point distance
};

// How far each recorded grasp's keypoints sit from the object surface.
std::vector<GraspResidual> grasp_residuals(const DatasetManifest& manifest,
                                           const std::vector<GraspRecord>& records,
                                           const std::string& cache_root);

}  // namespace mg
