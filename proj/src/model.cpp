#include "morphgrasp/model.hpp"

#include <array>

#include "morphgrasp/errors.hpp"

namespace mg::nn {

using nlohmann::json;

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "point_cloud_only") return Variant::point_cloud_only;
    if (s == "joints_only") return Variant::joints_only;
    if (s == "links_only") return Variant::links_only;
    throw ConfigMismatch("unknown variant: " + s);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::point_cloud_only: return "point_cloud_only";
        case Variant::joints_only: return "joints_only";
        case Variant::links_only: return "links_only";
    }
    return "full";
}

FreezePolicy freeze_policy_from_string(const std::string& s) {
    if (s == "scratch") return FreezePolicy::scratch;
    if (s == "finetune") return FreezePolicy::finetune;
    if (s == "freeze") return FreezePolicy::freeze;
    throw ConfigMismatch("unknown freeze policy: " + s);
}

std::string to_string(FreezePolicy p) {
    switch (p) {
        case FreezePolicy::scratch: return "scratch";
        case FreezePolicy::finetune: return "finetune";
        case FreezePolicy::freeze: return "freeze";
    }
    return "scratch";
}

void ModelConfig::validate() const {
    if (latent < 1 || gcn_hidden < 1 || gcn_layers < 1 || object_points < 1 ||
        gripper_points < 1 || morph_nodes < 1 || heads < 1 || ff_width < 1 || mlp_hidden < 1 ||
        downsample < 1 || knn < 1)
        throw ConfigMismatch("model dimensions must be positive");
    if (keypoints < 1) throw ConfigMismatch("keypoints must be >= 1");
    if (latent % heads != 0)
        throw HeadDivisibility("latent width " + std::to_string(latent) + " not divisible by " +
                               std::to_string(heads) + " heads");
}

int ModelConfig::step_input_width() const {
    int gathered = (variant == Variant::point_cloud_only) ? 2 : 3;
    return gathered * downsample + 3 * (keypoints - 1);
}

MorphFeatureSet ModelConfig::expected_feature_set() const {
    switch (variant) {
        case Variant::joints_only: return MorphFeatureSet::joints_only;
        case Variant::links_only: return MorphFeatureSet::links_only;
        default: return MorphFeatureSet::standard;
    }
}

json ModelConfig::to_json() const {
    json j;
    j["latent"] = latent;
    j["gcn_hidden"] = gcn_hidden;
    j["gcn_layers"] = gcn_layers;
    j["object_points"] = object_points;
    j["gripper_points"] = gripper_points;
    j["morph_nodes"] = morph_nodes;
    j["keypoints"] = keypoints;
    j["heads"] = heads;
    j["ff_width"] = ff_width;
    j["mlp_hidden"] = mlp_hidden;
    j["downsample"] = downsample;
    j["knn"] = knn;
    j["variant"] = to_string(variant);
    j["freeze_policy"] = to_string(freeze_policy);
    return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "latent") c.latent = value.get<int>();
        else if (key == "gcn_hidden") c.gcn_hidden = value.get<int>();
        else if (key == "gcn_layers") c.gcn_layers = value.get<int>();
        else if (key == "object_points") c.object_points = value.get<int>();
        else if (key == "gripper_points") c.gripper_points = value.get<int>();
        else if (key == "morph_nodes") c.morph_nodes = value.get<int>();
        else if (key == "keypoints") c.keypoints = value.get<int>();
        else if (key == "heads") c.heads = value.get<int>();
        else if (key == "ff_width") c.ff_width = value.get<int>();
        else if (key == "mlp_hidden") c.mlp_hidden = value.get<int>();
        else if (key == "downsample") c.downsample = value.get<int>();
        else if (key == "knn") c.knn = value.get<int>();
        else if (key == "variant") c.variant = variant_from_string(value.get<std::string>());
        else if (key == "freeze_policy")
            c.freeze_policy = freeze_policy_from_string(value.get<std::string>());
        else
            throw ConfigMismatch("unknown model config key: " + key);
    }
    c.validate();
    return c;
}

ModelWeights make_model_weights(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelWeights w;
    w.object_enc = make_gcn_encoder(ps, "object_enc", 3, cfg.gcn_hidden, cfg.gcn_layers,
                                    cfg.latent, rng);
    w.gripper_enc = make_gcn_encoder(ps, "gripper_enc", 3, cfg.gcn_hidden, cfg.gcn_layers,
                                     cfg.latent, rng);
    w.morph_enc = make_gcn_encoder(ps, "morph_enc", 9, cfg.gcn_hidden, cfg.gcn_layers,
                                   cfg.latent, rng);
    w.t_obj = make_transformer(ps, "t_obj", cfg.latent, cfg.heads, cfg.ff_width, rng);
    w.t_cross = make_transformer(ps, "t_cross", cfg.latent, cfg.heads, cfg.ff_width, rng);
    w.ds_obj = make_dense(ps, "ds_obj", cfg.latent, cfg.downsample, rng);
    w.ds_grip = make_dense(ps, "ds_grip", cfg.latent, cfg.downsample, rng);
    if (cfg.variant != Variant::point_cloud_only)
        w.ds_morph = make_dense(ps, "ds_morph", cfg.latent, cfg.downsample, rng);
    int width = cfg.step_input_width();
    for (int i = 1; i < cfg.keypoints; ++i) {
        std::vector<int> dims{width, cfg.mlp_hidden, cfg.mlp_hidden, cfg.mlp_hidden, 1};
        w.steps.push_back(make_mlp(ps, "step" + std::to_string(i), dims, rng));
    }
    return w;
}

void apply_freeze_policy(ParamStore& ps, FreezePolicy policy) {
    bool train_encoders = policy != FreezePolicy::freeze;
    ps.set_trainable_prefix("object_enc", train_encoders);
    ps.set_trainable_prefix("gripper_enc", train_encoders);
}

namespace {

void check_shape(const Tensor& t, int rows, int cols, const char* who) {
    if (t.rank() != 2 || t.rows() != rows || t.cols() != cols)
        throw ShapeMismatch(std::string(who) + " expected [" + std::to_string(rows) + ", " +
                            std::to_string(cols) + "], got " + t.shape_str());
}

int argmax_column(const Tensor& col) {
    int best = 0;
    for (std::size_t i = 1; i < col.numel(); ++i)
        if (col[i] > col[best]) best = static_cast<int>(i);
    return best;
}

}  // namespace

ModelOutputs model_forward(Tape& t, const ModelWeights& w, const ModelConfig& cfg,
                           const ModelInputs& in, PredictMode mode,
                           const std::vector<int>* gt_indices) {
    cfg.validate();
    bool pc_only = cfg.variant == Variant::point_cloud_only;
    int n_kp = cfg.keypoints;

    check_shape(in.object_points, cfg.object_points, 3, "object points");
    check_shape(in.object_adj, cfg.object_points, cfg.object_points, "object adjacency");
    check_shape(in.gripper_points, cfg.gripper_points, 3, "gripper points");
    check_shape(in.gripper_adj, cfg.gripper_points, cfg.gripper_points, "gripper adjacency");
    if (!pc_only) {
        check_shape(in.morph_features, cfg.morph_nodes, 9, "morphology features");
        check_shape(in.morph_adj, cfg.morph_nodes, cfg.morph_nodes, "morphology adjacency");
        if (in.morph_real < 1 || in.morph_real > cfg.morph_nodes)
            throw ShapeMismatch("morphology real node count " + std::to_string(in.morph_real) +
                                " outside [1, " + std::to_string(cfg.morph_nodes) + "]");
        if (in.morph_feature_set != cfg.expected_feature_set())
            throw VariantInputMismatch("variant " + to_string(cfg.variant) +
                                       " expects morphology feature set " +
                                       to_string(cfg.expected_feature_set()) + ", got " +
                                       to_string(in.morph_feature_set));
        if (static_cast<int>(in.keypoint_node.size()) != n_kp)
            throw ShapeMismatch("expected " + std::to_string(n_kp) + " keypoint nodes, got " +
                                std::to_string(in.keypoint_node.size()));
        for (int node : in.keypoint_node)
            if (node < 0 || node >= in.morph_real)
                throw UnknownLink("keypoint morphology row " + std::to_string(node) +
                                  " outside the real node range");
    }
    if (static_cast<int>(in.keypoint_point.size()) != n_kp)
        throw ShapeMismatch("expected " + std::to_string(n_kp) + " keypoint points, got " +
                            std::to_string(in.keypoint_point.size()));
    for (int p : in.keypoint_point)
        if (p < 0 || p >= cfg.gripper_points)
            throw InvalidKeypointIndex("keypoint gripper point " + std::to_string(p) +
                                       " outside [0, " + std::to_string(cfg.gripper_points) + ")");
    if (mode == PredictMode::teacher_forcing) {
        if (gt_indices == nullptr)
            throw MissingGroundTruth("teacher forcing requires ground-truth contact indices");
        if (static_cast<int>(gt_indices->size()) != n_kp)
            throw MissingGroundTruth("expected " + std::to_string(n_kp) +
                                     " ground-truth indices, got " +
                                     std::to_string(gt_indices->size()));
        for (int idx : *gt_indices)
            if (idx < 0 || idx >= cfg.object_points)
                throw IndexOutOfRange("ground-truth contact index " + std::to_string(idx) +
                                      " outside the object cloud");
    }

    ModelOutputs out;
    out.f_obj = gcn_encode(t, w.object_enc, in.object_adj, t.leaf(in.object_points));
    out.f_grip = gcn_encode(t, w.gripper_enc, in.gripper_adj, t.leaf(in.gripper_points));

    Var cross_src;
    int cross_real = -1;
    if (pc_only) {
        cross_src = out.f_grip;
    } else {
        out.f_morph = gcn_encode(t, w.morph_enc, in.morph_adj, t.leaf(in.morph_features));
        cross_src = out.f_morph;
        cross_real = in.morph_real;
    }

    out.fhat_obj = add(out.f_obj, transformer_module(t, w.t_obj, out.f_obj, -1, cross_src,
                                                     cross_real));
    out.fhat_cross = add(cross_src, transformer_module(t, w.t_cross, cross_src, cross_real,
                                                       out.f_obj, -1));

    Var g_kp = gather_rows(out.f_grip, in.keypoint_point);          // [N, latent]
    out.contact_logits = matmul(out.fhat_obj, transpose(g_kp));     // [S_O, N]

    Var obj_ds = linear(t, out.fhat_obj, w.ds_obj);                 // [S_O, ds]
    Var g_ds = linear(t, g_kp, w.ds_grip);                          // [N, ds]
    Var m_ds;
    if (!pc_only)
        m_ds = linear(t, gather_rows(out.fhat_cross, in.keypoint_node), w.ds_morph);

    out.step_logits.push_back(slice_cols(out.contact_logits, 0, 1));
    out.indices.push_back(argmax_column(t.value(out.step_logits[0])));

    int coord_pad = 3 * (n_kp - 1);
    for (int i = 1; i < n_kp; ++i) {
        std::vector<double> prev(static_cast<std::size_t>(coord_pad), 0.0);
        for (int j = 0; j < i; ++j) {
            int idx = (mode == PredictMode::teacher_forcing) ? (*gt_indices)[j] : out.indices[j];
            for (int c = 0; c < 3; ++c)
                prev[static_cast<std::size_t>(3 * j + c)] = in.object_points.at(idx, c);
        }
        std::vector<Var> parts;
        parts.push_back(obj_ds);
        parts.push_back(tile_rows(gather_rows(g_ds, {i}), cfg.object_points));
        if (!pc_only) parts.push_back(tile_rows(gather_rows(m_ds, {i}), cfg.object_points));
        parts.push_back(tile_rows(t.leaf(Tensor::row(std::move(prev))), cfg.object_points));
        Var logits_i = mlp_forward(t, w.steps[static_cast<std::size_t>(i - 1)], concat_cols(parts));
        out.step_logits.push_back(logits_i);
        out.indices.push_back(argmax_column(t.value(logits_i)));
    }
    return out;
}

Var geometric_embedding_loss(Tape& t, Var contact_logits, const Tensor& gt_maps) {
    const Tensor& logits = t.value(contact_logits);
    if (!logits.same_shape(gt_maps))
        throw ShapeMismatch("contact map logits " + logits.shape_str() +
                            " vs ground truth " + gt_maps.shape_str());
    return bce_with_logits_mean(contact_logits, gt_maps);
}

Var predicted_contact_loss(Tape& t, const std::vector<Var>& step_logits,
                           const std::vector<int>& gt_indices) {
    (void)t;
    if (step_logits.empty() || step_logits.size() != gt_indices.size())
        throw ShapeMismatch("predicted contact loss needs one ground-truth index per step");
    Var acc = cross_entropy_row(step_logits[0], gt_indices[0]);
    for (std::size_t i = 1; i < step_logits.size(); ++i)
        acc = add(acc, cross_entropy_row(step_logits[i], gt_indices[i]));
    return scale(acc, 1.0 / static_cast<double>(step_logits.size()));
}

}  // namespace mg::nn
