#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "morphgrasp/errors.hpp"
#include "morphgrasp/pipeline.hpp"
#include "morphgrasp/toy.hpp"

using namespace mg;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "morphgrasp_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

struct ToyEnv {
    fs::path dir;
    DatasetManifest manifest;
    std::string cache;
    bool ready = false;
};

ToyEnv& toy_env() {
    static ToyEnv env;
    if (!env.ready) {
        env.dir = fresh_dir("pipeline_toy");
        ToyParams params;
        params.object_points = 64;
        params.gripper_points = 64;
        params.grasps_per_pair = 2;
        params.knn = 4;
        env.manifest = make_toy_dataset(env.dir.string(), 99, params);
        env.cache = (env.dir / "cache").string();
        env.ready = true;
    }
    return env;
}

nn::ModelConfig tiny_config() {
    nn::ModelConfig cfg;
    cfg.latent = 16;
    cfg.gcn_hidden = 12;
    cfg.gcn_layers = 3;
    cfg.object_points = 64;
    cfg.gripper_points = 64;
    cfg.morph_nodes = 32;
    cfg.keypoints = 6;
    cfg.heads = 4;
    cfg.ff_width = 24;
    cfg.mlp_hidden = 10;
    cfg.downsample = 6;
    cfg.knn = 4;
    return cfg;
}

TrainConfig quick_train() {
    TrainConfig t;
    t.epochs = 3;
    t.batch_size = 4;
    t.adam.lr = 1e-3;
    t.seed = 7;
    t.holdout_grippers = {"quad"};
    t.holdout_objects = {"cylinder"};
    return t;
}

bool tensors_equal(const nn::Tensor& a, const nn::Tensor& b) {
    if (a.shape() != b.shape()) return false;
    for (std::size_t i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("train config round trips and rejects bad input") {
    TrainConfig t;
    t.epochs = 12;
    t.batch_size = 3;
    t.adam.lr = 2e-4;
    t.seed = 41;
    t.w_contact = 0.5;
    t.epsilon = 0.02;
    t.holdout_grippers = {"a", "b"};
    t.checkpoint_every = 5;
    t.init_checkpoint = "prior.bin";

    TrainConfig r = TrainConfig::from_json(t.to_json());
    CHECK(r.epochs == 12);
    CHECK(r.batch_size == 3);
    CHECK(r.adam.lr == 2e-4);
    CHECK(r.seed == 41);
    CHECK(r.w_contact == 0.5);
    CHECK(r.epsilon == 0.02);
    CHECK(r.holdout_grippers == std::vector<std::string>{"a", "b"});
    CHECK(r.checkpoint_every == 5);
    CHECK(r.init_checkpoint == "prior.bin");
    CHECK(r.to_json() == t.to_json());

    nlohmann::json j = t.to_json();
    j["mystery"] = 1;
    CHECK_THROWS_AS(TrainConfig::from_json(j), ConfigMismatch);
    j = t.to_json();
    j["adam"]["momentum"] = 0.9;
    CHECK_THROWS_AS(TrainConfig::from_json(j), ConfigMismatch);
    j = t.to_json();
    j["batch_size"] = 0;
    CHECK_THROWS_AS(TrainConfig::from_json(j), ConfigMismatch);
    j = t.to_json();
    j["epochs"] = "many";
    CHECK_THROWS_AS(TrainConfig::from_json(j), ConfigMismatch);
}

TEST_CASE("training writes a complete run directory and lowers the loss") {
    ToyEnv& env = toy_env();
    fs::path run = fresh_dir("run_main");
    TrainResult res = train(env.manifest, tiny_config(), quick_train(), env.cache, run.string());

    // two grippers x two objects x two grasps survive the holdouts
    CHECK(res.samples == 8);
    CHECK(res.steps == 3 * 2);  // 8 samples in batches of 4, three epochs
    REQUIRE(res.curve.size() == 4);
    for (const EpochLoss& e : res.curve) {
        CHECK(std::isfinite(e.total));
        CHECK(e.geometric > 0.0);
        CHECK(e.contact > 0.0);
    }
    CHECK(res.curve.back().total < res.curve.front().total);

    // loss log mirrors the curve exactly
    std::ifstream log(run / "loss.txt");
    REQUIRE(log.good());
    for (const EpochLoss& e : res.curve) {
        int epoch;
        double geo, ce, total;
        REQUIRE((log >> epoch >> geo >> ce >> total));
        CHECK(epoch == e.epoch);
        CHECK(geo == e.geometric);
        CHECK(ce == e.contact);
        CHECK(total == e.total);
    }

    // effective config echo
    nlohmann::json echo = nlohmann::json::parse(slurp(run / "config.json"));
    CHECK(echo.at("model").at("latent") == 16);
    CHECK(echo.at("train").at("epochs") == 3);
    CHECK(echo.at("train").at("holdout_grippers") == nlohmann::json::array({"quad"}));

    // access log never names holdout ids
    std::string access = slurp(run / "access.log");
    CHECK(access.find("quad") == std::string::npos);
    CHECK(access.find("cylinder") == std::string::npos);
    CHECK(access.find("gripper tripod") != std::string::npos);
    CHECK(access.find("gripper twin") != std::string::npos);
    CHECK(access.find("object sphere") != std::string::npos);
    CHECK(access.find("grasps ") != std::string::npos);

    CHECK(fs::exists(run / "checkpoint.bin"));
    LoadedModel m = load_model((run / "checkpoint.bin").string());
    CHECK(m.config.to_json() == tiny_config().to_json());
    CHECK(m.meta.at("train").at("seed") == 7);
}

TEST_CASE("training is deterministic per seed") {
    ToyEnv& env = toy_env();
    fs::path run_a = fresh_dir("run_det_a");
    fs::path run_b = fresh_dir("run_det_b");
    train(env.manifest, tiny_config(), quick_train(), env.cache, run_a.string());
    train(env.manifest, tiny_config(), quick_train(), env.cache, run_b.string());
    CHECK(slurp(run_a / "checkpoint.bin") == slurp(run_b / "checkpoint.bin"));
    CHECK(slurp(run_a / "loss.txt") == slurp(run_b / "loss.txt"));

    TrainConfig other = quick_train();
    other.seed = 8;
    fs::path run_c = fresh_dir("run_det_c");
    train(env.manifest, tiny_config(), other, env.cache, run_c.string());
    CHECK(slurp(run_a / "loss.txt") != slurp(run_c / "loss.txt"));
}

TEST_CASE("training rejects empty datasets and cold caches") {
    ToyEnv& env = toy_env();
    TrainConfig t = quick_train();
    t.holdout_grippers = {"tripod", "twin", "quad"};
    fs::path run = fresh_dir("run_empty");
    CHECK_THROWS_AS(train(env.manifest, tiny_config(), t, env.cache, run.string()),
                    EmptyDataset);

    fs::path cold = fresh_dir("run_cold_cache");
    CHECK_THROWS_AS(train(env.manifest, tiny_config(), quick_train(), cold.string(),
                          fresh_dir("run_cold").string()),
                    CacheMiss);
}

TEST_CASE("freeze policy pins the cloud encoders during training") {
    ToyEnv& env = toy_env();
    nn::ModelConfig frozen_cfg = tiny_config();
    frozen_cfg.freeze_policy = nn::FreezePolicy::freeze;
    TrainConfig t = quick_train();
    t.epochs = 2;
    fs::path run = fresh_dir("run_freeze");
    TrainResult res = train(env.manifest, frozen_cfg, t, env.cache, run.string());

    LoadedModel trained = load_model(res.checkpoint_path);
    nn::ParamStore reference;
    Rng rng(Rng::derive(t.seed, 0));
    nn::make_model_weights(reference, frozen_cfg, rng);

    bool morph_moved = false;
    for (const nn::Parameter* p : trained.params.all()) {
        const nn::Tensor& init = reference.at(p->name).value;
        bool is_frozen = p->name.rfind("object_enc", 0) == 0 ||
                         p->name.rfind("gripper_enc", 0) == 0;
        if (is_frozen) {
            CHECK(tensors_equal(p->value, init));
        } else if (p->name.rfind("morph_enc", 0) == 0 && !tensors_equal(p->value, init)) {
            morph_moved = true;
        }
    }
    CHECK(morph_moved);
}

TEST_CASE("finetune needs a checkpoint and resumes from it") {
    ToyEnv& env = toy_env();
    nn::ModelConfig cfg = tiny_config();
    cfg.freeze_policy = nn::FreezePolicy::finetune;
    TrainConfig t = quick_train();
    fs::path run = fresh_dir("run_finetune_bad");
    CHECK_THROWS_AS(train(env.manifest, cfg, t, env.cache, run.string()), ConfigMismatch);

    // train scratch first, then continue from its checkpoint
    fs::path base = fresh_dir("run_finetune_base");
    TrainResult first =
        train(env.manifest, tiny_config(), quick_train(), env.cache, base.string());

    nn::ModelConfig resumed_cfg = tiny_config();  // same config, scratch policy
    TrainConfig resume = quick_train();
    resume.epochs = 1;
    resume.init_checkpoint = first.checkpoint_path;
    fs::path cont = fresh_dir("run_finetune_cont");
    TrainResult second = train(env.manifest, resumed_cfg, resume, env.cache, cont.string());
    // warm start: better than the scratch run's starting point
    CHECK(second.curve.front().total < first.curve.front().total);

    // the resumed epoch-0 evaluation matches evaluate_dataset on the same samples
    LoadedModel model = load_model(first.checkpoint_path);
    EvalOptions opts;
    opts.grippers = {"tripod", "twin"};
    opts.objects = {"sphere", "box"};
    std::vector<SampleEval> evals = evaluate_dataset(env.manifest, model, env.cache, opts);
    REQUIRE(evals.size() == 8);
    double mean_total = 0.0;
    for (const SampleEval& ev : evals) mean_total += ev.geometric + ev.contact;
    mean_total /= 8.0;
    CHECK(second.curve.front().total == doctest::Approx(mean_total).epsilon(1e-12));

    // a mismatched architecture is rejected
    nn::ModelConfig widened = tiny_config();
    widened.latent = 20;
    TrainConfig bad = resume;
    fs::path wide = fresh_dir("run_finetune_wide");
    CHECK_THROWS_AS(train(env.manifest, widened, bad, env.cache, wide.string()),
                    ConfigMismatch);
}

TEST_CASE("periodic checkpoints appear at the configured cadence") {
    ToyEnv& env = toy_env();
    TrainConfig t = quick_train();
    t.checkpoint_every = 1;
    fs::path run = fresh_dir("run_snapshots");
    train(env.manifest, tiny_config(), t, env.cache, run.string());
    CHECK(fs::exists(run / "checkpoint_epoch_1.bin"));
    CHECK(fs::exists(run / "checkpoint_epoch_2.bin"));
    CHECK(!fs::exists(run / "checkpoint_epoch_3.bin"));  // the final file covers it
    CHECK(fs::exists(run / "checkpoint.bin"));

    LoadedModel snap = load_model((run / "checkpoint_epoch_1.bin").string());
    CHECK(snap.config.to_json() == tiny_config().to_json());
}

TEST_CASE("evaluation reports losses and predictions per record") {
    ToyEnv& env = toy_env();
    fs::path run = fresh_dir("run_eval");
    TrainResult res = train(env.manifest, tiny_config(), quick_train(), env.cache, run.string());
    LoadedModel model = load_model(res.checkpoint_path);

    EvalOptions all;
    std::vector<SampleEval> evals = evaluate_dataset(env.manifest, model, env.cache, all);
    CHECK(evals.size() == 18);  // every record, holdouts included
    for (const SampleEval& ev : evals) {
        CHECK(ev.geometric > 0.0);
        CHECK(ev.contact > 0.0);
        REQUIRE(ev.predicted.size() == 6);
        REQUIRE(ev.truth.size() == 6);
        CHECK(ev.matches >= 0);
        CHECK(ev.matches <= 6);
        for (int idx : ev.predicted) {
            CHECK(idx >= 0);
            CHECK(idx < 64);
        }
    }

    EvalOptions holdout;
    holdout.grippers = {"quad"};
    std::vector<SampleEval> quad_only = evaluate_dataset(env.manifest, model, env.cache, holdout);
    CHECK(quad_only.size() == 6);  // quad x three objects x two grasps
    for (const SampleEval& ev : quad_only) CHECK(ev.gripper_id == "quad");

    EvalOptions bogus;
    bogus.grippers = {"nonexistent"};
    CHECK_THROWS_AS(evaluate_dataset(env.manifest, model, env.cache, bogus), EmptyDataset);
}

TEST_CASE("contact prediction is deterministic and grasp fitting reaches targets") {
    ToyEnv& env = toy_env();
    fs::path run = fresh_dir("run_predict");
    TrainResult res = train(env.manifest, tiny_config(), quick_train(), env.cache, run.string());
    LoadedModel model = load_model(res.checkpoint_path);

    GripperRuntime gripper = load_gripper_runtime(
        env.manifest, *env.manifest.gripper("tripod"), model.config, env.cache, true);
    TriMesh sphere = load_mesh((env.dir / "objects" / "sphere.obj").string());

    ContactPrediction a = predict_contacts(model, sphere, 1234, gripper);
    ContactPrediction b = predict_contacts(model, sphere, 1234, gripper);
    REQUIRE(a.indices.size() == 6);
    CHECK(a.indices == b.indices);
    for (std::size_t i = 0; i < a.coords.size(); ++i)
        CHECK((a.coords[i] - b.coords[i]).norm() == 0.0);
    ContactPrediction c = predict_contacts(model, sphere, 77, gripper);
    CHECK(c.indices.size() == 6);  // different cloud, still valid indices
    for (int idx : c.indices) CHECK(idx < model.config.object_points);

    // fitting the predicted contacts gives a pose whose keypoints sit nearby
    GraspFit fit = fit_grasp(gripper, a.coords);
    CHECK(std::isfinite(fit.rms));
    CHECK(fit.rms < 0.05);
    auto kp = keypoint_positions(gripper.tree, gripper.keypoint_locals, fit.pose);
    double rms = 0.0;
    for (std::size_t i = 0; i < kp.size(); ++i) rms += (kp[i] - a.coords[i]).squared_norm();
    rms = std::sqrt(rms / static_cast<double>(kp.size()));
    CHECK(rms == doctest::Approx(fit.rms).epsilon(1e-9));

    CHECK_THROWS_AS(fit_grasp(gripper, {a.coords[0]}), ShapeMismatch);
}

TEST_CASE("grasp residuals match a direct recomputation") {
    ToyEnv& env = toy_env();
    std::vector<GraspRecord> records = load_all_grasps(env.manifest);
    std::vector<GraspResidual> residuals = grasp_residuals(env.manifest, records, env.cache);
    REQUIRE(residuals.size() == records.size());

    nn::ModelConfig cfg;
    cfg.gripper_points = 64;
    cfg.keypoints = 6;
    cfg.object_points = 64;
    GripperRuntime g = load_gripper_runtime(env.manifest,
                                            *env.manifest.gripper(records[0].gripper_id), cfg,
                                            env.cache, true);
    ObjectRuntime o = load_object_runtime(env.manifest,
                                          *env.manifest.object(records[0].object_id), cfg,
                                          env.cache, true);
    auto kp = keypoint_positions(g.tree, g.keypoint_locals, records[0].pose);
    double sum = 0.0;
    for (const Vec3& p : kp) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& q : o.graph.points) best = std::min(best, (q - p).norm());
        sum += best * best;
    }
    CHECK(residuals[0].rms ==
          doctest::Approx(std::sqrt(sum / static_cast<double>(kp.size()))).epsilon(1e-12));
    for (const GraspResidual& r : residuals) CHECK(r.rms < 0.03);
}
