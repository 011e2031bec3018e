#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphgrasp/layers.hpp"
#include "morphgrasp/morph_graph.hpp"

namespace mg::nn {

// Which inputs feed the correspondence stage. `full` cross-attends object and
// morphology embeddings; `point_cloud_only` swaps the morphology side for the
// gripper point cloud; `joints_only` / `links_only` keep the full wiring but
// expect the matching reduced morphology feature columns.
enum class Variant { full, point_cloud_only, joints_only, links_only };

// What happens to the object/gripper encoders during training: train them,
// continue from a checkpoint, or keep them fixed. The morphology encoder and
// all heads always train.
enum class FreezePolicy { scratch, finetune, freeze };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);
FreezePolicy freeze_policy_from_string(const std::string& s);
std::string to_string(FreezePolicy p);

struct ModelConfig {
    int latent = 512;          // embedding width n
    int gcn_hidden = 256;      // hidden width of each graph conv layer
    int gcn_layers = 3;        // hidden layer count per encoder
    int object_points = 2048;  // S_O
    int gripper_points = 1000; // S_G
    int morph_nodes = 32;      // padded morphology graph size S_M
    int keypoints = 6;         // N
    int heads = 4;             // attention heads
    int ff_width = 1024;       // transformer feed-forward width
    int mlp_hidden = 256;      // autoregressive MLP hidden width
    int downsample = 64;       // width fed to the autoregressive head
    int knn = 8;               // neighbors per point when building cloud graphs
    Variant variant = Variant::full;
    FreezePolicy freeze_policy = FreezePolicy::scratch;

    void validate() const;
    // Width of one autoregressive MLP input row: downsampled object embedding,
    // gathered gripper (and morphology, unless point_cloud_only) embeddings,
    // plus previous contact coordinates padded to 3*(keypoints-1).
    int step_input_width() const;
    MorphFeatureSet expected_feature_set() const;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);  // rejects unknown keys
};

struct ModelWeights {
    GcnEncoderWeights object_enc, gripper_enc, morph_enc;
    TransformerWeights t_obj;    // refines object embeddings
    TransformerWeights t_cross;  // refines morphology (or gripper, point_cloud_only)
    DenseWeights ds_obj, ds_grip, ds_morph;  // ds_morph unused for point_cloud_only
    std::vector<MlpWeights> steps;           // keypoints-1 autoregressive MLPs
};

// Parameter name prefixes: object_enc, gripper_enc, morph_enc, t_obj, t_cross,
// ds_obj, ds_grip, ds_morph, step1..step{N-1}.
ModelWeights make_model_weights(ParamStore& ps, const ModelConfig& cfg, Rng& rng);
// freeze => object_enc/gripper_enc parameters stop receiving updates.
void apply_freeze_policy(ParamStore& ps, FreezePolicy policy);

struct KeypointSpec {
    struct Entry {
        int point_index = 0;     // index into the gripper cloud
        std::string link_name;   // link the point belongs to
    };
    std::vector<Entry> entries;
};

// One forward sample. Adjacency tensors are pre-normalized; morphology rows at
// and past morph_real are expected to be exactly zero.
struct ModelInputs {
    Tensor object_points;   // [S_O, 3]
    Tensor object_adj;      // [S_O, S_O]
    Tensor gripper_points;  // [S_G, 3]
    Tensor gripper_adj;     // [S_G, S_G]
    Tensor morph_features;  // [S_M, 9]
    Tensor morph_adj;       // [S_M, S_M]
    int morph_real = 0;
    MorphFeatureSet morph_feature_set = MorphFeatureSet::standard;
    std::vector<int> keypoint_point;  // N gripper cloud indices
    std::vector<int> keypoint_node;   // N morphology node rows
};

enum class PredictMode { teacher_forcing, inference };

struct ModelOutputs {
    Var f_obj, f_grip, f_morph;   // encoder outputs [S, latent]
    Var fhat_obj;                 // object embedding after correspondence
    Var fhat_cross;               // morphology (or gripper) after correspondence
    Var contact_logits;           // [S_O, N]
    std::vector<Var> step_logits; // N column vectors [S_O, 1]
    std::vector<int> indices;     // argmax contact per step
};

// Full forward pass: encoders, residual correspondence, contact maps, keypoint
// gathering, downsampling, and the autoregressive head. teacher_forcing feeds
// ground-truth previous contacts into each step and requires gt_indices.
ModelOutputs model_forward(Tape& t, const ModelWeights& w, const ModelConfig& cfg,
                           const ModelInputs& in, PredictMode mode,
                           const std::vector<int>* gt_indices = nullptr);

// Mean binary cross-entropy over all (vertex, keypoint) cells.
Var geometric_embedding_loss(Tape& t, Var contact_logits, const Tensor& gt_maps);
// Mean over steps of the per-step classification loss over object vertices.
Var predicted_contact_loss(Tape& t, const std::vector<Var>& step_logits,
                           const std::vector<int>& gt_indices);

}  // namespace mg::nn
