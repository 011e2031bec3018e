#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "morphgrasp/checkpoint.hpp"
#include "morphgrasp/errors.hpp"
#include "morphgrasp/model.hpp"
#include "morphgrasp/optim.hpp"
#include "model_test_util.hpp"

using namespace mg;
using namespace mg::nn;
using namespace mgtest;

namespace {

struct TinyModel {
    ModelConfig cfg;
    ParamStore ps;
    ModelWeights w;
    ModelInputs in;
    std::vector<int> gt;
    Tensor gt_maps;

    explicit TinyModel(std::uint64_t seed = 41, Variant variant = Variant::full) {
        cfg = tiny_model_config();
        cfg.variant = variant;
        Rng rng(seed);
        w = make_model_weights(ps, cfg, rng);
        in = random_model_inputs(cfg, 5, seed + 1);
        gt = random_gt_indices(cfg, seed + 2);
        gt_maps = random_gt_maps(cfg, gt, seed + 3);
    }

    Var loss(Tape& t, ModelOutputs* keep = nullptr) {
        ModelOutputs out = model_forward(t, w, cfg, in, PredictMode::teacher_forcing, &gt);
        Var total = add(geometric_embedding_loss(t, out.contact_logits, gt_maps),
                        predicted_contact_loss(t, out.step_logits, gt));
        if (keep) *keep = out;
        return total;
    }
};

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("model config JSON round trip and strict key validation") {
    ModelConfig c = tiny_model_config();
    c.variant = Variant::joints_only;
    c.freeze_policy = FreezePolicy::freeze;
    ModelConfig back = ModelConfig::from_json(c.to_json());
    CHECK(back.latent == c.latent);
    CHECK(back.object_points == c.object_points);
    CHECK(back.keypoints == c.keypoints);
    CHECK(back.variant == Variant::joints_only);
    CHECK(back.freeze_policy == FreezePolicy::freeze);

    nlohmann::json j = c.to_json();
    j["lr"] = 0.1;
    CHECK_THROWS_AS(ModelConfig::from_json(j), ConfigMismatch);
    nlohmann::json bad = c.to_json();
    bad["variant"] = "everything";
    CHECK_THROWS_AS(ModelConfig::from_json(bad), ConfigMismatch);

    ModelConfig odd = tiny_model_config();
    odd.latent = 15;  // not divisible by 4 heads
    CHECK_THROWS_AS(odd.validate(), HeadDivisibility);

    ModelConfig defaults;
    CHECK(defaults.latent == 512);
    CHECK(defaults.gcn_hidden == 256);
    CHECK(defaults.gcn_layers == 3);
    CHECK(defaults.object_points == 2048);
    CHECK(defaults.gripper_points == 1000);
    CHECK(defaults.morph_nodes == 32);
    CHECK(defaults.keypoints == 6);
    CHECK(defaults.heads == 4);
    CHECK(defaults.ff_width == 1024);
    defaults.validate();
}

TEST_CASE("weight inventory follows the config") {
    ModelConfig cfg = tiny_model_config();
    ParamStore ps;
    Rng rng(7);
    ModelWeights w = make_model_weights(ps, cfg, rng);
    CHECK(ps.contains("object_enc.h0.w"));
    CHECK(ps.contains("gripper_enc.out.w"));
    CHECK(ps.contains("morph_enc.h2.w"));
    CHECK(ps.contains("t_obj.proj.w"));
    CHECK(ps.contains("t_cross.ff_in.w"));
    CHECK(ps.contains("ds_morph.w"));
    CHECK(ps.contains("step1.l0.w"));
    CHECK_FALSE(ps.contains("step2.l0.w"));  // keypoints = 2 -> a single MLP
    CHECK(w.steps.size() == 1);
    CHECK(ps.at("morph_enc.h0.w").value.rows() == 9);
    CHECK(ps.at("step1.l0.w").value.rows() == cfg.step_input_width());
    CHECK(cfg.step_input_width() == 3 * cfg.downsample + 3);

    ParamStore ps_pc;
    ModelConfig pc = cfg;
    pc.variant = Variant::point_cloud_only;
    Rng rng2(7);
    ModelWeights wpc = make_model_weights(ps_pc, pc, rng2);
    CHECK_FALSE(ps_pc.contains("ds_morph.w"));
    CHECK(ps_pc.at("step1.l0.w").value.rows() == 2 * cfg.downsample + 3);
    CHECK(wpc.steps.size() == 1);
}

TEST_CASE("freeze policy stops encoder updates but not the heads") {
    TinyModel m(11);
    m.cfg.freeze_policy = FreezePolicy::freeze;
    apply_freeze_policy(m.ps, m.cfg.freeze_policy);

    std::vector<Tensor> before;
    for (Parameter* p : m.ps.all()) before.push_back(p->value);

    AdamState adam;
    AdamConfig acfg;
    acfg.lr = 1e-3;
    for (int step = 0; step < 3; ++step) {
        m.ps.zero_grads();
        Tape t;
        t.backward(m.loss(t));
        adam_step(m.ps, adam, acfg);
    }

    std::size_t i = 0;
    bool morph_moved = false, head_moved = false;
    for (Parameter* p : m.ps.all()) {
        bool same = bit_equal(before[i++], p->value);
        if (p->name.rfind("object_enc", 0) == 0 || p->name.rfind("gripper_enc", 0) == 0) {
            CHECK(same);
        } else if (p->name.rfind("morph_enc", 0) == 0 && !same) {
            morph_moved = true;
        } else if (p->name.rfind("step1", 0) == 0 && !same) {
            head_moved = true;
        }
    }
    CHECK(morph_moved);
    CHECK(head_moved);

    apply_freeze_policy(m.ps, FreezePolicy::scratch);
    CHECK(m.ps.at("object_enc.h0.w").trainable);
}

TEST_CASE("forward shapes, valid indices, and run-to-run determinism") {
    TinyModel m(19);
    Tape t1;
    ModelOutputs a;
    Var l1 = m.loss(t1, &a);

    CHECK(t1.value(a.f_obj).rows() == m.cfg.object_points);
    CHECK(t1.value(a.f_obj).cols() == m.cfg.latent);
    CHECK(t1.value(a.f_grip).rows() == m.cfg.gripper_points);
    CHECK(t1.value(a.f_morph).rows() == m.cfg.morph_nodes);
    CHECK(t1.value(a.fhat_obj).rows() == m.cfg.object_points);
    CHECK(t1.value(a.fhat_cross).rows() == m.cfg.morph_nodes);
    CHECK(t1.value(a.contact_logits).rows() == m.cfg.object_points);
    CHECK(t1.value(a.contact_logits).cols() == m.cfg.keypoints);
    CHECK(static_cast<int>(a.step_logits.size()) == m.cfg.keypoints);
    for (const Var& s : a.step_logits) {
        CHECK(t1.value(s).rows() == m.cfg.object_points);
        CHECK(t1.value(s).cols() == 1);
    }
    CHECK(static_cast<int>(a.indices.size()) == m.cfg.keypoints);
    for (int idx : a.indices) {
        CHECK(idx >= 0);
        CHECK(idx < m.cfg.object_points);
    }

    Tape t2;
    ModelOutputs b;
    Var l2 = m.loss(t2, &b);
    CHECK(bit_equal(t1.value(a.contact_logits), t2.value(b.contact_logits)));
    CHECK(t1.value(l1).scalar_value() == t2.value(l2).scalar_value());
    CHECK(a.indices == b.indices);
}

TEST_CASE("contact maps match the explicit dot-product oracle") {
    TinyModel m(23);
    nudge_zero_params(m.ps, 0.2, 77);  // make the correspondence stage non-trivial
    Tape t;
    ModelOutputs out;
    m.loss(t, &out);
    const Tensor& fhat = t.value(out.fhat_obj);
    const Tensor& fg = t.value(out.f_grip);
    const Tensor& maps = t.value(out.contact_logits);
    for (int v = 0; v < m.cfg.object_points; ++v)
        for (int i = 0; i < m.cfg.keypoints; ++i) {
            double dot = 0.0;
            int kp = m.in.keypoint_point[static_cast<std::size_t>(i)];
            for (int c = 0; c < m.cfg.latent; ++c) dot += fhat.at(v, c) * fg.at(kp, c);
            CHECK(maps.at(v, i) == doctest::Approx(dot).epsilon(1e-12));
        }
}

TEST_CASE("duplicated and permuted keypoints move contact-map columns verbatim") {
    TinyModel m(29);
    nudge_zero_params(m.ps, 0.2, 78);

    Tape t1;
    ModelOutputs base;
    m.loss(t1, &base);
    const Tensor& maps = t1.value(base.contact_logits);

    TinyModel* alias = &m;
    std::swap(alias->in.keypoint_point[0], alias->in.keypoint_point[1]);
    std::swap(alias->in.keypoint_node[0], alias->in.keypoint_node[1]);
    std::swap(alias->gt[0], alias->gt[1]);
    Tape t2;
    ModelOutputs swapped;
    m.loss(t2, &swapped);
    const Tensor& maps2 = t2.value(swapped.contact_logits);
    for (int v = 0; v < m.cfg.object_points; ++v) {
        CHECK(maps.at(v, 0) == maps2.at(v, 1));
        CHECK(maps.at(v, 1) == maps2.at(v, 0));
    }

    // duplicate entry 0 -> identical columns
    m.in.keypoint_point[1] = m.in.keypoint_point[0];
    m.in.keypoint_node[1] = m.in.keypoint_node[0];
    Tape t3;
    ModelOutputs dup;
    m.loss(t3, &dup);
    const Tensor& maps3 = t3.value(dup.contact_logits);
    for (int v = 0; v < m.cfg.object_points; ++v)
        CHECK(maps3.at(v, 0) == maps3.at(v, 1));
}

TEST_CASE("zero-initialized projections reduce the correspondence stage to the identity") {
    TinyModel m(31);
    Tape t;
    ModelOutputs out;
    m.loss(t, &out);
    CHECK(bit_equal(t.value(out.fhat_obj), t.value(out.f_obj)));
    CHECK(bit_equal(t.value(out.fhat_cross), t.value(out.f_morph)));

    // contact maps equal the no-transformer baseline built by hand
    const Tensor& fo = t.value(out.f_obj);
    const Tensor& fg = t.value(out.f_grip);
    Tensor base = Tensor::zeros({m.cfg.object_points, m.cfg.keypoints});
    for (int v = 0; v < m.cfg.object_points; ++v)
        for (int i = 0; i < m.cfg.keypoints; ++i) {
            double dot = 0.0;
            int kp = m.in.keypoint_point[static_cast<std::size_t>(i)];
            for (int c = 0; c < m.cfg.latent; ++c) dot += fo.at(v, c) * fg.at(kp, c);
            base.at(v, i) = dot;
        }
    const Tensor& maps = t.value(out.contact_logits);
    for (std::size_t i = 0; i < maps.numel(); ++i)
        CHECK(maps[i] == doctest::Approx(base[i]).epsilon(1e-12));
}

TEST_CASE("morphology information reaches the object embedding") {
    TinyModel m(37);
    nudge_zero_params(m.ps, 0.2, 79);
    Tape t1;
    ModelOutputs before;
    m.loss(t1, &before);

    m.in.morph_features.at(2, 4) += 0.25;  // poke one live morphology node
    Tape t2;
    ModelOutputs after;
    m.loss(t2, &after);

    double delta = 0.0;
    const Tensor& a = t1.value(before.fhat_obj);
    const Tensor& b = t2.value(after.fhat_obj);
    for (std::size_t i = 0; i < a.numel(); ++i) delta = std::max(delta, std::abs(a[i] - b[i]));
    CHECK(delta > 1e-12);
}

TEST_CASE("padded morphology rows have zero embeddings and do not affect outputs") {
    // One weight set evaluated under two padding widths: real rows identical,
    // refined object embeddings identical.
    ModelConfig small = tiny_model_config();  // morph_nodes = 8
    ModelConfig wide = small;
    wide.morph_nodes = 16;

    ParamStore ps;
    Rng rng(43);
    ModelWeights w = make_model_weights(ps, small, rng);
    nudge_zero_params(ps, 0.2, 80);

    ModelInputs in_small = random_model_inputs(small, 5, 99);
    ModelInputs in_wide = in_small;
    in_wide.morph_features = Tensor::zeros({16, 9});
    in_wide.morph_adj = Tensor::zeros({16, 16});
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 9; ++c) in_wide.morph_features.at(r, c) = in_small.morph_features.at(r, c);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) in_wide.morph_adj.at(r, c) = in_small.morph_adj.at(r, c);

    std::vector<int> gt = random_gt_indices(small, 101);

    Tape t1, t2;
    ModelOutputs o1 = model_forward(t1, w, small, in_small, PredictMode::teacher_forcing, &gt);
    ModelOutputs o2 = model_forward(t2, w, wide, in_wide, PredictMode::teacher_forcing, &gt);

    const Tensor& fm_wide = t2.value(o2.f_morph);
    for (int r = 5; r < 16; ++r)
        for (int c = 0; c < small.latent; ++c) CHECK(fm_wide.at(r, c) == 0.0);

    const Tensor& fm1 = t1.value(o1.f_morph);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < small.latent; ++c) CHECK(fm1.at(r, c) == fm_wide.at(r, c));

    CHECK(bit_equal(t1.value(o1.fhat_obj), t2.value(o2.fhat_obj)));
    CHECK(bit_equal(t1.value(o1.contact_logits), t2.value(o2.contact_logits)));
    CHECK(o1.indices == o2.indices);
}

TEST_CASE("teacher forcing feeds ground truth, not the model's own picks") {
    TinyModel m(47);
    nudge_zero_params(m.ps, 0.2, 81);

    Tape t1;
    ModelOutputs a = model_forward(t1, m.w, m.cfg, m.in, PredictMode::teacher_forcing, &m.gt);
    std::vector<int> other_gt = m.gt;
    other_gt[0] = (other_gt[0] + 7) % m.cfg.object_points;
    Tape t2;
    ModelOutputs b = model_forward(t2, m.w, m.cfg, m.in, PredictMode::teacher_forcing, &other_gt);

    // step 0 comes straight from the contact maps -> unchanged
    CHECK(bit_equal(t1.value(a.step_logits[0]), t2.value(b.step_logits[0])));
    // step 1 consumes the previous ground-truth coordinate -> changed
    CHECK_FALSE(bit_equal(t1.value(a.step_logits[1]), t2.value(b.step_logits[1])));

    CHECK_THROWS_AS(model_forward(t1, m.w, m.cfg, m.in, PredictMode::teacher_forcing, nullptr),
                    MissingGroundTruth);

    std::vector<int> bad = m.gt;
    bad[1] = m.cfg.object_points;
    CHECK_THROWS_AS(model_forward(t1, m.w, m.cfg, m.in, PredictMode::teacher_forcing, &bad),
                    IndexOutOfRange);
}

TEST_CASE("single-keypoint config degenerates to the contact-map argmax") {
    ModelConfig cfg = tiny_model_config();
    cfg.keypoints = 1;
    ParamStore ps;
    Rng rng(53);
    ModelWeights w = make_model_weights(ps, cfg, rng);
    CHECK(w.steps.empty());
    ModelInputs in = random_model_inputs(cfg, 4, 54);
    Tape t;
    ModelOutputs out = model_forward(t, w, cfg, in, PredictMode::inference);
    CHECK(out.step_logits.size() == 1);
    const Tensor& col = t.value(out.step_logits[0]);
    int best = 0;
    for (int v = 1; v < cfg.object_points; ++v)
        if (col.at(v, 0) > col.at(best, 0)) best = v;
    CHECK(out.indices[0] == best);
}

TEST_CASE("input validation rejects inconsistent shapes, links, and variants") {
    TinyModel m(59);
    Tape t;

    ModelInputs bad = m.in;
    bad.object_points = Tensor::zeros({m.cfg.object_points, 2});
    CHECK_THROWS_AS(model_forward(t, m.w, m.cfg, bad, PredictMode::inference), ShapeMismatch);

    bad = m.in;
    bad.keypoint_point[0] = m.cfg.gripper_points;
    CHECK_THROWS_AS(model_forward(t, m.w, m.cfg, bad, PredictMode::inference),
                    InvalidKeypointIndex);

    bad = m.in;
    bad.keypoint_node[0] = m.in.morph_real;  // padded row is not a link
    CHECK_THROWS_AS(model_forward(t, m.w, m.cfg, bad, PredictMode::inference), UnknownLink);

    bad = m.in;
    bad.morph_feature_set = MorphFeatureSet::joints_only;
    CHECK_THROWS_AS(model_forward(t, m.w, m.cfg, bad, PredictMode::inference),
                    VariantInputMismatch);

    ModelConfig joints = m.cfg;
    joints.variant = Variant::joints_only;
    ParamStore ps2;
    Rng rng2(60);
    ModelWeights w2 = make_model_weights(ps2, joints, rng2);
    ModelInputs jin = m.in;
    jin.morph_feature_set = MorphFeatureSet::joints_only;
    ModelOutputs out = model_forward(t, w2, joints, jin, PredictMode::inference);
    CHECK(t.value(out.contact_logits).rows() == m.cfg.object_points);
}

TEST_CASE("point_cloud_only swaps the gripper cloud into the correspondence stage") {
    ModelConfig cfg = tiny_model_config();
    cfg.variant = Variant::point_cloud_only;
    ParamStore ps;
    Rng rng(61);
    ModelWeights w = make_model_weights(ps, cfg, rng);
    nudge_zero_params(ps, 0.2, 82);

    ModelInputs in = random_model_inputs(tiny_model_config(), 5, 62);
    in.morph_features = Tensor();  // unused by this variant
    in.morph_adj = Tensor();
    in.morph_real = 0;
    in.keypoint_node.clear();

    std::vector<int> gt = random_gt_indices(cfg, 63);
    Tape t;
    ModelOutputs out = model_forward(t, w, cfg, in, PredictMode::teacher_forcing, &gt);
    CHECK(t.value(out.fhat_cross).rows() == cfg.gripper_points);
    CHECK(t.value(out.fhat_cross).cols() == cfg.latent);
    CHECK(t.value(out.contact_logits).rows() == cfg.object_points);
    CHECK(out.f_morph.tape == nullptr);

    // same seed, full wiring -> different loss value (morphology is live there)
    ModelConfig full_cfg = tiny_model_config();
    ParamStore ps_full;
    Rng rng_full(61);
    ModelWeights w_full = make_model_weights(ps_full, full_cfg, rng_full);
    nudge_zero_params(ps_full, 0.2, 82);
    ModelInputs in_full = random_model_inputs(full_cfg, 5, 62);
    Tape t2;
    ModelOutputs out_full = model_forward(t2, w_full, full_cfg, in_full,
                                          PredictMode::teacher_forcing, &gt);
    Tensor maps_pc = t.value(out.contact_logits);
    Tensor maps_full = t2.value(out_full.contact_logits);
    bool differ = false;
    for (std::size_t i = 0; i < maps_pc.numel() && !differ; ++i)
        if (maps_pc[i] != maps_full[i]) differ = true;
    CHECK(differ);
}

TEST_CASE("loss anchors at the model interface") {
    TinyModel m(67);
    Tape t;
    ModelOutputs out;
    m.loss(t, &out);

    Tensor wrong = Tensor::zeros({m.cfg.object_points, m.cfg.keypoints + 1});
    CHECK_THROWS_AS(geometric_embedding_loss(t, out.contact_logits, wrong), ShapeMismatch);

    // uniform step logits -> ln(S_O) per step
    Var flat = t.leaf(Tensor::zeros({m.cfg.object_points, 1}));
    std::vector<Var> steps{flat, flat};
    std::vector<int> gt{3, 17};
    Var ce = predicted_contact_loss(t, steps, gt);
    CHECK(t.value(ce).scalar_value() ==
          doctest::Approx(std::log(static_cast<double>(m.cfg.object_points))).epsilon(1e-12));

    std::vector<int> bad_gt{3, m.cfg.object_points};
    CHECK_THROWS_AS(predicted_contact_loss(t, steps, bad_gt), IndexOutOfRange);

    // random 3-step oracle at S_O = 8
    Rng rng(68);
    Tape t2;
    std::vector<Var> cols;
    std::vector<Tensor> raw;
    for (int i = 0; i < 3; ++i) {
        Tensor c = random_tensor({8, 1}, rng, -2.0, 2.0);
        raw.push_back(c);
        cols.push_back(t2.leaf(c));
    }
    std::vector<int> gt3{1, 6, 4};
    double expect = 0.0;
    for (int i = 0; i < 3; ++i) expect += cross_entropy(raw[static_cast<std::size_t>(i)], gt3[static_cast<std::size_t>(i)]);
    expect /= 3.0;
    Var got = predicted_contact_loss(t2, cols, gt3);
    CHECK(t2.value(got).scalar_value() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("end-to-end gradients match finite differences on the tiny model") {
    TinyModel m(71);
    nudge_zero_params(m.ps, 0.2, 83);
    auto build = [&](Tape& t) { return m.loss(t); };
    GradCheckReport rep = fd_check(m.ps, build, 1e-5, 5);
    INFO("worst " << rep.worst_param << "[" << rep.worst_index << "] analytic "
                  << rep.worst_analytic << " numeric " << rep.worst_numeric);
    CHECK(rep.max_rel_err < 1e-4);
    CHECK(rep.checked > 0);
}

TEST_CASE("point_cloud_only gradients match finite differences") {
    ModelConfig cfg = tiny_model_config();
    cfg.variant = Variant::point_cloud_only;
    ParamStore ps;
    Rng rng(73);
    ModelWeights w = make_model_weights(ps, cfg, rng);
    nudge_zero_params(ps, 0.2, 84);
    ModelInputs in = random_model_inputs(tiny_model_config(), 5, 74);
    in.keypoint_node.clear();
    std::vector<int> gt = random_gt_indices(cfg, 75);
    Tensor gt_maps = random_gt_maps(cfg, gt, 76);

    auto build = [&](Tape& t) {
        ModelOutputs out = model_forward(t, w, cfg, in, PredictMode::teacher_forcing, &gt);
        return add(geometric_embedding_loss(t, out.contact_logits, gt_maps),
                   predicted_contact_loss(t, out.step_logits, gt));
    };
    GradCheckReport rep = fd_check(ps, build, 1e-5, 4);
    INFO("worst " << rep.worst_param << " analytic " << rep.worst_analytic << " numeric "
                  << rep.worst_numeric);
    CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("checkpoints round-trip parameters, optimizer state, and meta") {
    TinyModel m(79);
    AdamState adam;
    AdamConfig acfg;
    acfg.lr = 1e-3;
    for (int step = 0; step < 2; ++step) {
        m.ps.zero_grads();
        Tape t;
        t.backward(m.loss(t));
        adam_step(m.ps, adam, acfg);
    }

    nlohmann::json meta;
    meta["model"] = m.cfg.to_json();
    meta["note"] = "unit";
    std::string path = "model_ckpt_test.bin";
    save_checkpoint(path, m.ps, adam, meta);

    // fresh weights from another seed, then restore
    ParamStore ps2;
    Rng rng2(1234);
    ModelWeights w2 = make_model_weights(ps2, m.cfg, rng2);
    (void)w2;
    AdamState adam2;
    nlohmann::json meta2 = load_checkpoint(path, ps2, adam2);
    CHECK(meta2.at("note") == "unit");
    CHECK(ModelConfig::from_json(meta2.at("model")).latent == m.cfg.latent);
    CHECK(adam2.step == adam.step);
    auto orig = m.ps.all();
    auto restored = ps2.all();
    REQUIRE(orig.size() == restored.size());
    for (std::size_t i = 0; i < orig.size(); ++i) {
        CHECK(orig[i]->name == restored[i]->name);
        CHECK(bit_equal(orig[i]->value, restored[i]->value));
    }
    for (const auto& [name, mstate] : adam.m) {
        REQUIRE(adam2.m.count(name) == 1);
        CHECK(bit_equal(mstate, adam2.m.at(name)));
        CHECK(bit_equal(adam.v.at(name), adam2.v.at(name)));
    }

    // byte-for-byte determinism of the writer
    std::string path2 = "model_ckpt_test2.bin";
    save_checkpoint(path2, m.ps, adam, meta);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    CHECK(b1.size() > 16);

    // config mismatch: different store layout
    ParamStore ps3;
    ModelConfig other = m.cfg;
    other.downsample = m.cfg.downsample + 2;
    Rng rng3(5);
    make_model_weights(ps3, other, rng3);
    AdamState adam3;
    CHECK_THROWS_AS(load_checkpoint(path, ps3, adam3), ConfigMismatch);

    // corrupt + missing files
    {
        std::ofstream trunc("model_ckpt_trunc.bin", std::ios::binary);
        trunc << b1.substr(0, b1.size() / 2);
    }
    ParamStore ps4;
    Rng rng4(6);
    make_model_weights(ps4, m.cfg, rng4);
    AdamState adam4;
    CHECK_THROWS_AS(load_checkpoint("model_ckpt_trunc.bin", ps4, adam4), CorruptFile);
    CHECK_THROWS_AS(load_checkpoint("no_such_ckpt.bin", ps4, adam4), CacheMiss);
    CHECK_THROWS_AS(read_checkpoint_meta("no_such_ckpt.bin"), CacheMiss);
    CHECK(read_checkpoint_meta(path).at("note") == "unit");

    std::remove(path.c_str());
    std::remove(path2.c_str());
    std::remove("model_ckpt_trunc.bin");
}
