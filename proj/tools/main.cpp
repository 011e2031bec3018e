// Command line front end: every pipeline stage behind one binary.
//
// Exit codes: 0 success, 1 gradient check failure, 2 data/config error,
// 64 usage error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "morphgrasp/cloud.hpp"
#include "morphgrasp/dataset.hpp"
#include "morphgrasp/errors.hpp"
#include "morphgrasp/gradcheck.hpp"
#include "morphgrasp/layers.hpp"
#include "morphgrasp/mesh.hpp"
#include "morphgrasp/metrics.hpp"
#include "morphgrasp/model.hpp"
#include "morphgrasp/morph_graph.hpp"
#include "morphgrasp/pipeline.hpp"
#include "morphgrasp/toy.hpp"
#include "morphgrasp/urdf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --cache flag beats MORPHGRASP_CACHE beats <manifest dir>/cache.
std::string resolve_cache_root(const std::string& flag, const fs::path& manifest_root) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("MORPHGRASP_CACHE"); env && *env) return env;
    return (manifest_root / "cache").string();
}

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw mg::CorruptFile("cannot open config file: " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw mg::CorruptFile("bad JSON in " + path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw mg::CorruptFile("cannot write file: " + path);
    f << text;
}

bool wanted(const std::vector<std::string>& list, const std::string& id) {
    return list.empty() || std::find(list.begin(), list.end(), id) != list.end();
}

// ---------------------------------------------------------------- morph-compile

struct MorphCompileArgs {
    std::string urdf, mesh_dir, out;
    std::string features = "standard";
    int padded = 32;
};

int cmd_morph_compile(const MorphCompileArgs& a) {
    if (!fs::is_directory(a.mesh_dir))
        throw mg::CorruptFile("mesh directory not found: " + a.mesh_dir);
    mg::KinematicTree tree = mg::load_urdf(a.urdf);
    mg::MorphFeatureSet fset = mg::morph_feature_set_from_string(a.features);
    auto summaries = mg::link_summaries_from_meshes(tree, a.mesh_dir);
    mg::MorphologyGraph graph = mg::build_morphology_graph(tree, summaries, fset, a.padded);

    std::printf("links %zu\n", tree.links.size());
    std::printf("joints %zu\n", tree.joints.size());
    std::printf("revolute joints %d\n", tree.dof());
    std::printf("real nodes %d\n", graph.real_node_count);
    std::printf("padded size %d\n", graph.padded_size());
    std::printf("feature set %s\n", mg::to_string(fset).c_str());
    for (int c = 0; c < graph.features.cols(); ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
        for (int i = 0; i < graph.real_node_count; ++i) {
            double v = graph.features.at(i, c);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        std::printf("feature %d min %.17g mean %.17g max %.17g\n", c, lo,
                    sum / graph.real_node_count, hi);
    }
    if (!a.out.empty()) {
        mg::save_morph_graph(a.out, graph, fset);
        std::printf("wrote %s\n", a.out.c_str());
    }
    return 0;
}

// ---------------------------------------------------------------------- sample

struct SampleArgs {
    std::string mesh, out;
    int count = 0;  // 0 means the default of 64
    int knn = 8;
    std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a) {
    mg::TriMesh mesh = mg::load_mesh(a.mesh);
    int count = a.count == 0 ? 64 : a.count;
    std::vector<mg::Vec3> pts = mg::sample_surface(mesh, count, a.seed);
    mg::PointCloudGraph graph = mg::knn_graph(pts, a.knn);

    mg::Vec3 lo = pts.front(), hi = pts.front();
    for (const mg::Vec3& p : pts) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    std::printf("points %d\n", count);
    std::printf("knn %d\n", a.knn);
    std::printf("edges %zu\n", graph.edges().size());
    std::printf("bbox min %.17g %.17g %.17g\n", lo.x, lo.y, lo.z);
    std::printf("bbox max %.17g %.17g %.17g\n", hi.x, hi.y, hi.z);
    if (!a.out.empty()) {
        mg::save_cloud(a.out, graph);
        std::printf("wrote %s\n", a.out.c_str());
    }
    return 0;
}

// --------------------------------------------------------------- gripper-cloud

struct GripperCloudArgs {
    std::string urdf, mesh_dir, out;
    int count = 1000;
    std::uint64_t seed = 0;
};

int cmd_gripper_cloud(const GripperCloudArgs& a) {
    if (!fs::is_directory(a.mesh_dir))
        throw mg::CorruptFile("mesh directory not found: " + a.mesh_dir);
    mg::KinematicTree tree = mg::load_urdf(a.urdf);
    std::map<std::string, mg::TriMesh> meshes;
    for (const mg::LinkSpec& link : tree.links)
        if (link.mesh_ref)
            meshes[link.name] = mg::load_mesh((fs::path(a.mesh_dir) / *link.mesh_ref).string());
    mg::GripperCloud cloud = mg::assemble_gripper_cloud(tree, meshes, a.count, a.seed);

    std::printf("points %zu\n", cloud.points.size());
    std::printf("links %zu\n", cloud.link_names.size());
    std::vector<int> per_link(cloud.link_names.size(), 0);
    for (int li : cloud.link_of_point) ++per_link[static_cast<std::size_t>(li)];
    for (std::size_t i = 0; i < cloud.link_names.size(); ++i)
        std::printf("link %s points %d\n", cloud.link_names[i].c_str(), per_link[i]);
    if (!a.out.empty()) {
        mg::save_gripper_cloud(a.out, cloud);
        std::printf("wrote %s\n", a.out.c_str());
    }
    return 0;
}

// -------------------------------------------------------------------- make-toy

struct MakeToyArgs {
    std::string dir;
    std::uint64_t seed = 0;
    mg::ToyParams params;
    bool no_grasps = false;
};

int cmd_make_toy(const MakeToyArgs& a) {
    mg::ToyParams p = a.params;
    p.grasps = !a.no_grasps;
    mg::DatasetManifest m = mg::make_toy_dataset(a.dir, a.seed, p);
    std::printf("manifest %s\n", (fs::path(a.dir) / "manifest.json").string().c_str());
    std::printf("grippers %zu\n", m.grippers.size());
    std::printf("objects %zu\n", m.objects.size());
    std::printf("grasp files %zu\n", m.grasp_files.size());
    return 0;
}

// ----------------------------------------------------------------------- train

struct TrainArgs {
    std::string config, run_dir, cache;
    std::string variant, freeze, init_checkpoint;
    std::vector<std::string> holdout_grippers, holdout_objects;
    std::uint64_t seed = 0;
    int epochs = 0, batch_size = 0, checkpoint_every = 0;
    double lr = 0.0;
    CLI::Option *o_variant = nullptr, *o_freeze = nullptr, *o_init = nullptr, *o_seed = nullptr,
                *o_epochs = nullptr, *o_batch = nullptr, *o_every = nullptr, *o_lr = nullptr;
};

int cmd_train(const TrainArgs& a) {
    json j = read_json_file(a.config);
    if (!j.is_object()) throw mg::ConfigMismatch("run config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "manifest" && key != "model" && key != "train")
            throw mg::ConfigMismatch("unknown key '" + key + "' in run config");
    }
    if (!j.contains("manifest")) throw mg::ConfigMismatch("run config missing 'manifest'");

    fs::path manifest_path;
    try {
        manifest_path = j.at("manifest").get<std::string>();
    } catch (const json::exception& e) {
        throw mg::ConfigMismatch(std::string("bad 'manifest' in run config: ") + e.what());
    }
    if (manifest_path.is_relative())
        manifest_path = fs::absolute(fs::path(a.config).parent_path() / manifest_path);

    mg::nn::ModelConfig mcfg =
        j.contains("model") ? mg::nn::ModelConfig::from_json(j.at("model")) : mg::nn::ModelConfig{};
    mg::TrainConfig tcfg =
        j.contains("train") ? mg::TrainConfig::from_json(j.at("train")) : mg::TrainConfig{};

    if (a.o_variant->count()) mcfg.variant = mg::nn::variant_from_string(a.variant);
    if (a.o_freeze->count()) mcfg.freeze_policy = mg::nn::freeze_policy_from_string(a.freeze);
    if (a.o_init->count()) tcfg.init_checkpoint = a.init_checkpoint;
    if (a.o_seed->count()) tcfg.seed = a.seed;
    if (a.o_epochs->count()) tcfg.epochs = a.epochs;
    if (a.o_batch->count()) tcfg.batch_size = a.batch_size;
    if (a.o_every->count()) tcfg.checkpoint_every = a.checkpoint_every;
    if (a.o_lr->count()) tcfg.adam.lr = a.lr;
    for (const std::string& g : a.holdout_grippers) tcfg.holdout_grippers.push_back(g);
    for (const std::string& o : a.holdout_objects) tcfg.holdout_objects.push_back(o);
    mcfg.validate();
    tcfg.validate();

    mg::DatasetManifest manifest = mg::load_manifest(manifest_path.string());
    std::string cache_root = resolve_cache_root(a.cache, manifest.root);

    fs::create_directories(a.run_dir);
    json invocation;
    invocation["manifest"] = manifest_path.string();
    invocation["cache"] = cache_root;
    write_text_file((fs::path(a.run_dir) / "invocation.json").string(), invocation.dump(2) + "\n");

    mg::TrainResult result = mg::train(manifest, mcfg, tcfg, cache_root, a.run_dir);

    std::printf("samples %d\n", result.samples);
    std::printf("steps %d\n", result.steps);
    const mg::EpochLoss& last = result.curve.back();
    std::printf("final epoch %d geometric %.17g contact %.17g total %.17g\n", last.epoch,
                last.geometric, last.contact, last.total);
    std::printf("checkpoint %s\n", result.checkpoint_path.c_str());
    return 0;
}

// --------------------------------------------------------------------- predict

struct PredictArgs {
    std::string checkpoint, object, manifest, gripper, out, cache;
    std::uint64_t seed = 0;
    bool no_fit = false;
};

int cmd_predict(const PredictArgs& a) {
    mg::LoadedModel model = mg::load_model(a.checkpoint);
    mg::DatasetManifest manifest = mg::load_manifest(a.manifest);
    const mg::GripperEntry* entry = manifest.gripper(a.gripper);
    if (!entry)
        throw mg::ConfigMismatch("gripper '" + a.gripper + "' not in manifest " + a.manifest);
    std::string cache_root = resolve_cache_root(a.cache, manifest.root);
    mg::GripperRuntime grip =
        mg::load_gripper_runtime(manifest, *entry, model.config, cache_root, false);
    mg::TriMesh mesh = mg::load_mesh(a.object);
    mg::ContactPrediction pred = mg::predict_contacts(model, mesh, a.seed, grip);

    json out;
    out["gripper"] = a.gripper;
    out["cloud_seed"] = a.seed;
    out["indices"] = pred.indices;
    json coords = json::array();
    for (const mg::Vec3& c : pred.coords) coords.push_back({c.x, c.y, c.z});
    out["coords"] = coords;
    double rms = 0.0;
    if (!a.no_fit) {
        mg::GraspFit fit = mg::fit_grasp(grip, pred.coords);
        json grasp;
        grasp["translation"] = {fit.pose.translation.x, fit.pose.translation.y,
                                fit.pose.translation.z};
        grasp["rotation_wxyz"] = {fit.pose.rotation.w, fit.pose.rotation.x, fit.pose.rotation.y,
                                  fit.pose.rotation.z};
        grasp["joint_angles"] = fit.pose.joint_angles;
        out["grasp"] = grasp;
        out["rms"] = fit.rms;
        out["converged"] = fit.converged;
        rms = fit.rms;
    }

    std::string indices_line = "contacts";
    for (int i : pred.indices) indices_line += " " + std::to_string(i);
    std::printf("%s\n", indices_line.c_str());
    if (!a.no_fit) std::printf("rms %.17g\n", rms);
    std::string text = out.dump(2) + "\n";
    if (!a.out.empty()) {
        write_text_file(a.out, text);
        std::printf("wrote %s\n", a.out.c_str());
    } else {
        std::fputs(text.c_str(), stdout);
    }
    return 0;
}

// ------------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    double h = 1e-5;
    double threshold = 1e-4;
    int samples = 4;
    std::uint64_t seed = 0;
    bool inject_error = false;
    std::string out;
};

mg::nn::Tensor random_tensor(std::vector<int> shape, mg::Rng& rng, double lo, double hi) {
    mg::nn::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Zero-initialized output projections would hide entire gradient paths (both
// analytic and numeric sides read zero), so give them small random values.
void nudge_zero_params(mg::nn::ParamStore& ps, mg::Rng& rng) {
    for (mg::nn::Parameter* p : ps.all()) {
        bool all_zero = true;
        for (std::size_t i = 0; i < p->value.numel() && all_zero; ++i)
            if (p->value[i] != 0.0) all_zero = false;
        if (!all_zero) continue;
        for (std::size_t i = 0; i < p->value.numel(); ++i)
            p->value[i] = rng.uniform(-0.3, 0.3);
    }
}

// Runs check_gradients over a forward builder. The builder must rebuild the
// whole graph on every call so finite differences see fresh parameter values.
mg::nn::GradCheckReport run_check(mg::nn::ParamStore& ps,
                                  const std::function<mg::nn::Var(mg::nn::Tape&)>& forward,
                                  const GradcheckArgs& a, std::uint64_t stream, bool inject) {
    auto loss = [&]() {
        mg::nn::Tape t;
        mg::nn::Var l = forward(t);
        return t.value(l)[0];
    };
    auto grad = [&]() {
        ps.zero_grads();
        mg::nn::Tape t;
        mg::nn::Var l = forward(t);
        t.backward(l);
        if (inject && !ps.all().empty()) ps.all().front()->grad[0] += 0.5;
    };
    mg::Rng pick(mg::Rng::derive(a.seed, 1000 + stream));
    return mg::nn::check_gradients(ps, loss, grad, a.h, pick, a.samples);
}

// Point cloud with a row-normalized knn adjacency, for the end-to-end check.
void random_cloud(int count, int k, mg::Rng& rng, mg::nn::Tensor& points, mg::nn::Tensor& adj) {
    std::vector<mg::Vec3> pts(count);
    points = mg::nn::Tensor::zeros({count, 3});
    for (int i = 0; i < count; ++i) {
        pts[static_cast<std::size_t>(i)] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                            rng.uniform(-1.0, 1.0)};
        points.at(i, 0) = pts[static_cast<std::size_t>(i)].x;
        points.at(i, 1) = pts[static_cast<std::size_t>(i)].y;
        points.at(i, 2) = pts[static_cast<std::size_t>(i)].z;
    }
    mg::PointCloudGraph graph = mg::knn_graph(pts, k);
    adj = mg::nn::normalize_adjacency(mg::nn::adjacency_from_edges(count, graph.edges(), true),
                                      "row");
}

struct ComponentRow {
    std::string name;
    mg::nn::GradCheckReport report;
};

ComponentRow check_component(const std::string& name, const GradcheckArgs& a, bool inject) {
    using namespace mg::nn;
    mg::Rng rng(mg::Rng::derive(a.seed, std::hash<std::string>{}(name)));
    ParamStore ps;
    std::function<Var(Tape&)> forward;

    if (name == "linear") {
        auto w = make_dense(ps, "dense", 5, 3, rng);
        Tensor x = random_tensor({4, 5}, rng, -1.0, 1.0);
        Tensor targets = random_tensor({4, 3}, rng, 0.05, 0.95);
        forward = [&ps, w, x, targets](Tape& t) {
            return bce_with_logits_mean(linear(t, t.leaf(x), w), targets);
        };
    } else if (name == "layer_norm") {
        auto w = make_layer_norm(ps, "ln", 6);
        Tensor x = random_tensor({4, 6}, rng, -1.0, 1.0);
        Tensor targets = random_tensor({4, 6}, rng, 0.05, 0.95);
        forward = [&ps, w, x, targets](Tape& t) {
            Var out = layer_norm_rows(t.leaf(x), t.param(*w.gain), t.param(*w.bias),
                                      kLayerNormEps);
            return bce_with_logits_mean(out, targets);
        };
    } else if (name == "gcn") {
        auto w = make_gcn_encoder(ps, "enc", 4, 6, 2, 5, rng);
        int s = 6;
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i + 1 < s; ++i) edges.push_back({i, i + 1});
        Tensor adj = normalize_adjacency(adjacency_from_edges(s, edges, true), "row");
        Tensor x = random_tensor({s, 4}, rng, -1.0, 1.0);
        Tensor targets = random_tensor({s, 5}, rng, 0.05, 0.95);
        forward = [&ps, w, adj, x, targets](Tape& t) {
            return bce_with_logits_mean(gcn_encode(t, w, adj, t.leaf(x)), targets);
        };
    } else if (name == "attention") {
        auto w = make_attention(ps, "attn", 8, 2, rng);
        nudge_zero_params(ps, rng);
        Tensor q = random_tensor({5, 8}, rng, -1.0, 1.0);
        Tensor kv = random_tensor({4, 8}, rng, -1.0, 1.0);
        Tensor targets = random_tensor({5, 8}, rng, 0.05, 0.95);
        forward = [&ps, w, q, kv, targets](Tape& t) {
            Var out = multi_head_attention(t, w, t.leaf(q), t.leaf(kv), -1, -1);
            return bce_with_logits_mean(out, targets);
        };
    } else if (name == "transformer") {
        auto w = make_transformer(ps, "tf", 8, 2, 16, rng);
        nudge_zero_params(ps, rng);
        Tensor q = random_tensor({5, 8}, rng, -1.0, 1.0);
        Tensor mem = random_tensor({4, 8}, rng, -1.0, 1.0);
        Tensor targets = random_tensor({5, 8}, rng, 0.05, 0.95);
        forward = [&ps, w, q, mem, targets](Tape& t) {
            Var out = transformer_module(t, w, t.leaf(q), -1, t.leaf(mem), -1);
            return bce_with_logits_mean(out, targets);
        };
    } else if (name == "mlp") {
        auto w = make_mlp(ps, "mlp", {6, 7, 5, 2}, rng);
        Tensor x = random_tensor({4, 6}, rng, -1.0, 1.0);
        Tensor targets = random_tensor({4, 2}, rng, 0.05, 0.95);
        forward = [&ps, w, x, targets](Tape& t) {
            return bce_with_logits_mean(mlp_forward(t, w, t.leaf(x)), targets);
        };
    } else if (name == "bce") {
        Parameter& logits = ps.add("logits", random_tensor({4, 3}, rng, -2.0, 2.0));
        Tensor targets = random_tensor({4, 3}, rng, 0.05, 0.95);
        forward = [&logits, targets](Tape& t) {
            return bce_with_logits_mean(t.param(logits), targets);
        };
    } else if (name == "cross_entropy") {
        Parameter& logits = ps.add("logits", random_tensor({1, 10}, rng, -2.0, 2.0));
        forward = [&logits](Tape& t) { return cross_entropy_row(t.param(logits), 3); };
    } else if (name == "end_to_end") {
        ModelConfig cfg;
        cfg.latent = 16;
        cfg.gcn_hidden = 12;
        cfg.gcn_layers = 3;
        cfg.object_points = 32;
        cfg.gripper_points = 16;
        cfg.morph_nodes = 8;
        cfg.keypoints = 2;
        cfg.heads = 4;
        cfg.ff_width = 24;
        cfg.mlp_hidden = 10;
        cfg.downsample = 6;
        cfg.knn = 4;
        auto weights = std::make_shared<ModelWeights>(make_model_weights(ps, cfg, rng));
        nudge_zero_params(ps, rng);

        auto in = std::make_shared<ModelInputs>();
        random_cloud(cfg.object_points, cfg.knn, rng, in->object_points, in->object_adj);
        random_cloud(cfg.gripper_points, cfg.knn, rng, in->gripper_points, in->gripper_adj);
        int real = 6;
        in->morph_features = Tensor::zeros({cfg.morph_nodes, 9});
        for (int i = 0; i < real; ++i)
            for (int c = 0; c < 9; ++c) in->morph_features.at(i, c) = rng.uniform(-0.5, 0.5);
        Tensor raw = Tensor::zeros({cfg.morph_nodes, cfg.morph_nodes});
        for (int i = 0; i < real; ++i) raw.at(i, i) = 1.0;
        for (int i = 0; i + 1 < real; ++i) {
            raw.at(i, i + 1) = 1.0;
            raw.at(i + 1, i) = 1.0;
        }
        in->morph_adj = normalize_adjacency(raw, "row");
        in->morph_real = real;
        in->morph_feature_set = cfg.expected_feature_set();
        for (int i = 0; i < cfg.keypoints; ++i) {
            in->keypoint_point.push_back(
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.gripper_points))));
            in->keypoint_node.push_back(
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(real))));
        }
        auto gt = std::make_shared<std::vector<int>>();
        for (int i = 0; i < cfg.keypoints; ++i)
            gt->push_back(
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.object_points))));
        Tensor maps = Tensor::zeros({cfg.object_points, cfg.keypoints});
        for (int i = 0; i < cfg.keypoints; ++i) {
            maps.at((*gt)[static_cast<std::size_t>(i)], i) = 1.0;
            maps.at(static_cast<int>(
                        rng.uniform_int(static_cast<std::uint64_t>(cfg.object_points))),
                    i) = 1.0;
        }
        forward = [&ps, weights, cfg, in, gt, maps](Tape& t) {
            ModelOutputs out = model_forward(t, *weights, cfg, *in,
                                             PredictMode::teacher_forcing, gt.get());
            Var geo = geometric_embedding_loss(t, out.contact_logits, maps);
            Var ce = predicted_contact_loss(t, out.step_logits, *gt);
            return add(geo, ce);
        };
    } else {
        throw mg::ConfigMismatch("unknown gradcheck component: " + name);
    }

    ComponentRow row;
    row.name = name;
    row.report = run_check(ps, forward, a, std::hash<std::string>{}(name) % 1000, inject);
    return row;
}

int cmd_gradcheck(const GradcheckArgs& a) {
    const std::vector<std::string> components = {"linear",      "layer_norm", "gcn",
                                                 "attention",   "transformer", "mlp",
                                                 "bce",         "cross_entropy", "end_to_end"};
    std::ostringstream report;
    bool failed = false;
    for (const std::string& name : components) {
        // The injected error lands in the first component so the detector
        // can be proven to fire.
        bool inject = a.inject_error && name == components.front();
        ComponentRow row = check_component(name, a, inject);
        bool ok = row.report.max_rel_err < a.threshold;
        failed = failed || !ok;
        char line[256];
        std::snprintf(line, sizeof(line), "%-13s checked %4d  max_rel_err %.3e  worst %s[%zu]  %s\n",
                      row.name.c_str(), row.report.checked, row.report.max_rel_err,
                      row.report.worst_param.c_str(), row.report.worst_index,
                      ok ? "ok" : "FAIL");
        report << line;
    }
    report << (failed ? "gradcheck FAILED" : "gradcheck ok") << " (threshold " << a.threshold
           << ")\n";
    std::fputs(report.str().c_str(), stdout);
    if (!a.out.empty()) write_text_file(a.out, report.str());
    return failed ? 1 : 0;
}

// ------------------------------------------------------------------------ eval

struct EvalArgs {
    std::string metric, manifest, cache;
    std::string format = "rows";
    std::vector<std::string> grippers, objects;
};

int cmd_eval(const EvalArgs& a) {
    mg::DatasetManifest manifest = mg::load_manifest(a.manifest);
    std::string cache_root = resolve_cache_root(a.cache, manifest.root);
    std::vector<mg::GraspRecord> records = mg::load_all_grasps(manifest);

    if (a.metric == "diversity") {
        // Columns: gripper id, joint name (or "mean"), value.
        for (const mg::GripperEntry& ge : manifest.grippers) {
            if (!wanted(a.grippers, ge.id)) continue;
            std::vector<mg::GraspPose> poses;
            for (const mg::GraspRecord& r : records)
                if (r.gripper_id == ge.id && wanted(a.objects, r.object_id))
                    poses.push_back(r.pose);
            if (poses.empty()) continue;
            mg::KinematicTree tree = mg::load_urdf((manifest.root / ge.urdf).string());
            std::vector<std::string> joints = tree.revolute_joint_names();
            mg::DiversityReport rep = mg::diversity_metric(poses);
            for (std::size_t j = 0; j < rep.per_joint.size(); ++j)
                std::printf("%s %s %.17g\n", ge.id.c_str(), joints[j].c_str(), rep.per_joint[j]);
            std::printf("%s mean %.17g\n", ge.id.c_str(), rep.mean);
        }
        return 0;
    }

    // residual. Columns: gripper id, object id, grasp index within the pair, rms.
    std::vector<mg::GraspRecord> kept;
    for (const mg::GraspRecord& r : records)
        if (wanted(a.grippers, r.gripper_id) && wanted(a.objects, r.object_id)) kept.push_back(r);
    std::vector<mg::GraspResidual> rows = mg::grasp_residuals(manifest, kept, cache_root);
    std::map<std::pair<std::string, std::string>, int> counter;
    for (const mg::GraspResidual& row : rows) {
        int idx = counter[{row.gripper_id, row.object_id}]++;
        std::printf("%s %s %d %.17g\n", row.gripper_id.c_str(), row.object_id.c_str(), idx,
                    row.rms);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-embodiment grasp contact prediction pipeline"};
    app.require_subcommand(1);

    MorphCompileArgs mc;
    auto* mc_cmd = app.add_subcommand(
        "morph-compile", "compile a URDF plus link meshes into a morphology graph");
    mc_cmd->add_option("urdf", mc.urdf, "URDF file")->required();
    mc_cmd->add_option("--mesh-dir", mc.mesh_dir, "directory the URDF's mesh references resolve against")
        ->required();
    mc_cmd->add_option("--features", mc.features, "feature set: standard, joints_only, links_only")
        ->check(CLI::IsMember({"standard", "joints_only", "links_only"}));
    mc_cmd->add_option("--padded", mc.padded, "padded node count (default 32)");
    mc_cmd->add_option("--out", mc.out, "write the graph as JSON");

    SampleArgs sa;
    auto* sa_cmd = app.add_subcommand("sample", "sample a surface point cloud from a mesh");
    sa_cmd->add_option("mesh", sa.mesh, "mesh file (.obj or .stl)")->required();
    sa_cmd->add_option("--count", sa.count, "sample count; 0 picks the default of 64");
    sa_cmd->add_option("--knn", sa.knn, "neighbors per point in the graph (default 8)");
    sa_cmd->add_option("--seed", sa.seed, "sampling seed (default 0)");
    sa_cmd->add_option("--out", sa.out, "write the cloud as binary");

    GripperCloudArgs gc;
    auto* gc_cmd = app.add_subcommand(
        "gripper-cloud", "sample a link-attributed cloud of a whole hand at rest");
    gc_cmd->add_option("urdf", gc.urdf, "URDF file")->required();
    gc_cmd->add_option("--mesh-dir", gc.mesh_dir, "directory the URDF's mesh references resolve against")
        ->required();
    gc_cmd->add_option("--count", gc.count, "sample count (default 1000)");
    gc_cmd->add_option("--seed", gc.seed, "sampling seed (default 0)");
    gc_cmd->add_option("--out", gc.out, "write the cloud as binary");

    MakeToyArgs mt;
    auto* mt_cmd = app.add_subcommand(
        "make-toy", "generate the synthetic desk-scale dataset (grippers, objects, grasps)");
    mt_cmd->add_option("dir", mt.dir, "output directory")->required();
    mt_cmd->add_option("--seed", mt.seed, "generation seed (default 0)");
    mt_cmd->add_option("--object-points", mt.params.object_points, "object cloud size (default 256)");
    mt_cmd->add_option("--gripper-points", mt.params.gripper_points, "gripper cloud size (default 128)");
    mt_cmd->add_option("--grasps", mt.params.grasps_per_pair, "grasps per gripper-object pair (default 4)");
    mt_cmd->add_option("--knn", mt.params.knn, "neighbors per point in cached clouds (default 8)");
    mt_cmd->add_flag("--no-grasps", mt.no_grasps, "emit assets only, no grasp records");
    mt_cmd->add_flag("--extra-grippers", mt.params.extra_grippers,
                     "six hand designs instead of three");
    mt_cmd->add_flag("--canonical-grasps", mt.params.canonical_grasps,
                     "fixed per-index approach directions shared by every hand");

    TrainArgs ta;
    auto* ta_cmd = app.add_subcommand("train", "train the contact prediction model");
    ta_cmd->add_option("--config", ta.config,
                       "run config JSON: {\"manifest\": path, \"model\": {...}, \"train\": {...}}; "
                       "a relative manifest path resolves against the config file's directory")
        ->required();
    ta_cmd->add_option("--run-dir", ta.run_dir, "output directory for config echo, loss curve, checkpoints")
        ->required();
    ta_cmd->add_option("--cache", ta.cache,
                       "cache root (default: MORPHGRASP_CACHE, then <manifest dir>/cache)");
    ta.o_variant = ta_cmd->add_option("--variant", ta.variant,
                                      "override model variant: full, point_cloud_only, joints_only, links_only")
                       ->check(CLI::IsMember({"full", "point_cloud_only", "joints_only", "links_only"}));
    ta.o_freeze = ta_cmd->add_option("--freeze-policy", ta.freeze,
                                     "override encoder policy: scratch, finetune, freeze")
                      ->check(CLI::IsMember({"scratch", "finetune", "freeze"}));
    ta.o_init = ta_cmd->add_option("--init-checkpoint", ta.init_checkpoint,
                                   "warm-start weights (required for finetune)");
    ta.o_seed = ta_cmd->add_option("--seed", ta.seed, "override training seed");
    ta.o_epochs = ta_cmd->add_option("--epochs", ta.epochs, "override epoch count");
    ta.o_batch = ta_cmd->add_option("--batch-size", ta.batch_size, "override batch size");
    ta.o_every = ta_cmd->add_option("--checkpoint-every", ta.checkpoint_every,
                                    "extra checkpoint every K epochs");
    ta.o_lr = ta_cmd->add_option("--lr", ta.lr, "override learning rate");
    ta_cmd->add_option("--holdout-gripper", ta.holdout_grippers,
                       "exclude a gripper's grasps from training (repeatable, adds to the config)");
    ta_cmd->add_option("--holdout-object", ta.holdout_objects,
                       "exclude an object's grasps from training (repeatable, adds to the config)");

    PredictArgs pa;
    auto* pa_cmd = app.add_subcommand("predict", "predict contacts for an object and fit a grasp");
    pa_cmd->add_option("--checkpoint", pa.checkpoint, "trained model checkpoint")->required();
    pa_cmd->add_option("--object", pa.object, "object mesh (.obj or .stl)")->required();
    pa_cmd->add_option("--manifest", pa.manifest, "dataset manifest describing the gripper")
        ->required();
    pa_cmd->add_option("--gripper", pa.gripper, "gripper id from the manifest")->required();
    pa_cmd->add_option("--seed", pa.seed, "object cloud sampling seed (default 0)");
    pa_cmd->add_option("--cache", pa.cache,
                       "cache root (default: MORPHGRASP_CACHE, then <manifest dir>/cache)");
    pa_cmd->add_option("--out", pa.out, "write the prediction as JSON (default: print to stdout)");
    pa_cmd->add_flag("--no-fit", pa.no_fit, "skip the inverse-kinematics grasp fit");

    GradcheckArgs ga;
    auto* ga_cmd = app.add_subcommand(
        "gradcheck", "finite-difference check of every layer type plus an end-to-end tiny model");
    ga_cmd->add_option("--step", ga.h, "finite-difference step (default 1e-5)");
    ga_cmd->add_option("--threshold", ga.threshold, "max relative error allowed (default 1e-4)");
    ga_cmd->add_option("--samples", ga.samples, "entries checked per parameter (default 4)");
    ga_cmd->add_option("--seed", ga.seed, "seed for inputs and entry sampling (default 0)");
    ga_cmd->add_flag("--inject-error", ga.inject_error,
                     "corrupt one analytic gradient to prove the detector fires");
    ga_cmd->add_option("--out", ga.out, "also write the report to a file");

    EvalArgs ea;
    auto* ea_cmd = app.add_subcommand("eval", "dataset metrics over recorded grasps");
    ea_cmd->add_option("--metric", ea.metric,
                       "diversity: per-joint angle std, rows '<gripper> <joint> <std>' then "
                       "'<gripper> mean <value>'; residual: keypoint-to-surface RMS, rows "
                       "'<gripper> <object> <index> <rms>'")
        ->required()
        ->check(CLI::IsMember({"diversity", "residual"}));
    ea_cmd->add_option("--manifest", ea.manifest, "dataset manifest")->required();
    ea_cmd->add_option("--cache", ea.cache,
                       "cache root (default: MORPHGRASP_CACHE, then <manifest dir>/cache)");
    ea_cmd->add_option("--format", ea.format, "output format (rows)")
        ->check(CLI::IsMember({"rows"}));
    ea_cmd->add_option("--gripper", ea.grippers, "restrict to a gripper id (repeatable)");
    ea_cmd->add_option("--object", ea.objects, "restrict to an object id (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (mc_cmd->parsed()) return cmd_morph_compile(mc);
        if (sa_cmd->parsed()) return cmd_sample(sa);
        if (gc_cmd->parsed()) return cmd_gripper_cloud(gc);
        if (mt_cmd->parsed()) return cmd_make_toy(mt);
        if (ta_cmd->parsed()) return cmd_train(ta);
        if (pa_cmd->parsed()) return cmd_predict(pa);
        if (ga_cmd->parsed()) return cmd_gradcheck(ga);
        if (ea_cmd->parsed()) return cmd_eval(ea);
    } catch (const mg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
