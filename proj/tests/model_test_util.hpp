#pragma once

#include <vector>

#include "morphgrasp/cloud.hpp"
#include "morphgrasp/model.hpp"
#include "nn_test_util.hpp"

namespace mgtest {

inline mg::nn::ModelConfig tiny_model_config() {
    mg::nn::ModelConfig c;
    c.latent = 16;
    c.gcn_hidden = 12;
    c.gcn_layers = 3;
    c.object_points = 32;
    c.gripper_points = 16;
    c.morph_nodes = 8;
    c.keypoints = 2;
    c.heads = 4;
    c.ff_width = 24;
    c.mlp_hidden = 10;
    c.downsample = 6;
    c.knn = 4;
    return c;
}

// Random point cloud with a row-normalized knn adjacency (self loops included).
inline void random_cloud(int count, int k, mg::Rng& rng, mg::nn::Tensor& points,
                         mg::nn::Tensor& adj) {
    std::vector<mg::Vec3> pts(count);
    points = mg::nn::Tensor::zeros({count, 3});
    for (int i = 0; i < count; ++i) {
        pts[i] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        points.at(i, 0) = pts[i].x;
        points.at(i, 1) = pts[i].y;
        points.at(i, 2) = pts[i].z;
    }
    auto graph = mg::knn_graph(pts, k);
    mg::nn::Tensor raw = mg::nn::adjacency_from_edges(count, graph.edges(), true);
    adj = mg::nn::normalize_adjacency(raw, "row");
}

// Chain-connected morphology graph padded to cfg.morph_nodes with `real` live
// rows; features random, padded rows exactly zero.
inline void random_morphology(int padded, int real, mg::Rng& rng, mg::nn::Tensor& features,
                              mg::nn::Tensor& adj) {
    features = mg::nn::Tensor::zeros({padded, 9});
    for (int i = 0; i < real; ++i)
        for (int c = 0; c < 9; ++c) features.at(i, c) = rng.uniform(-0.5, 0.5);
    mg::nn::Tensor raw = mg::nn::Tensor::zeros({padded, padded});
    for (int i = 0; i < real; ++i) raw.at(i, i) = 1.0;
    for (int i = 0; i + 1 < real; ++i) {
        raw.at(i, i + 1) = 1.0;
        raw.at(i + 1, i) = 1.0;
    }
    adj = mg::nn::normalize_adjacency(raw, "row");
}

inline mg::nn::ModelInputs random_model_inputs(const mg::nn::ModelConfig& cfg, int morph_real,
                                               std::uint64_t seed) {
    mg::Rng rng(seed);
    mg::nn::ModelInputs in;
    random_cloud(cfg.object_points, cfg.knn, rng, in.object_points, in.object_adj);
    random_cloud(cfg.gripper_points, cfg.knn, rng, in.gripper_points, in.gripper_adj);
    random_morphology(cfg.morph_nodes, morph_real, rng, in.morph_features, in.morph_adj);
    in.morph_real = morph_real;
    in.morph_feature_set = cfg.expected_feature_set();
    for (int i = 0; i < cfg.keypoints; ++i) {
        in.keypoint_point.push_back(
            static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.gripper_points))));
        in.keypoint_node.push_back(
            static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(morph_real))));
    }
    return in;
}

inline std::vector<int> random_gt_indices(const mg::nn::ModelConfig& cfg, std::uint64_t seed) {
    mg::Rng rng(seed);
    std::vector<int> gt;
    for (int i = 0; i < cfg.keypoints; ++i)
        gt.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.object_points))));
    return gt;
}

// Ground-truth contact maps consistent with the indices plus a few extra cells.
inline mg::nn::Tensor random_gt_maps(const mg::nn::ModelConfig& cfg, const std::vector<int>& gt,
                                     std::uint64_t seed) {
    mg::Rng rng(seed);
    mg::nn::Tensor maps = mg::nn::Tensor::zeros({cfg.object_points, cfg.keypoints});
    for (int i = 0; i < cfg.keypoints; ++i) {
        maps.at(gt[static_cast<std::size_t>(i)], i) = 1.0;
        for (int extra = 0; extra < 3; ++extra)
            maps.at(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.object_points))),
                    i) = 1.0;
    }
    return maps;
}

// The transformer output projections start at zero so the correspondence
// module begins as the identity; nudging them makes every path carry gradient.
inline void nudge_zero_params(mg::nn::ParamStore& ps, double magnitude, std::uint64_t seed) {
    mg::Rng rng(seed);
    for (mg::nn::Parameter* p : ps.all()) {
        bool all_zero = true;
        for (std::size_t i = 0; i < p->value.numel(); ++i)
            if (p->value[i] != 0.0) { all_zero = false; break; }
        if (!all_zero) continue;
        for (std::size_t i = 0; i < p->value.numel(); ++i)
            p->value[i] = rng.uniform(-magnitude, magnitude);
    }
}

}  // namespace mgtest
