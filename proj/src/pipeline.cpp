#include "morphgrasp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "morphgrasp/checkpoint.hpp"
#include "morphgrasp/errors.hpp"
#include "morphgrasp/rng.hpp"

namespace mg {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigMismatch("batch_size must be at least 1");
    if (epochs < 0) throw ConfigMismatch("epochs must be non-negative");
    if (adam.lr <= 0.0) throw ConfigMismatch("learning rate must be positive");
    if (w_geometric < 0.0 || w_contact < 0.0)
        throw ConfigMismatch("loss weights must be non-negative");
    if (epsilon < 0.0) throw ConfigMismatch("epsilon must be non-negative");
    if (checkpoint_every < 0) throw ConfigMismatch("checkpoint_every must be non-negative");
}

json TrainConfig::to_json() const {
    json j;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["adam"] = {{"lr", adam.lr}, {"beta1", adam.beta1}, {"beta2", adam.beta2},
                 {"eps", adam.eps}};
    j["seed"] = seed;
    j["w_geometric"] = w_geometric;
    j["w_contact"] = w_contact;
    j["epsilon"] = epsilon;
    j["holdout_grippers"] = holdout_grippers;
    j["holdout_objects"] = holdout_objects;
    j["checkpoint_every"] = checkpoint_every;
    j["init_checkpoint"] = init_checkpoint;
    return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "epochs") c.epochs = value.get<int>();
            else if (key == "batch_size") c.batch_size = value.get<int>();
            else if (key == "adam") {
                for (const auto& [akey, avalue] : value.items()) {
                    if (akey == "lr") c.adam.lr = avalue.get<double>();
                    else if (akey == "beta1") c.adam.beta1 = avalue.get<double>();
                    else if (akey == "beta2") c.adam.beta2 = avalue.get<double>();
                    else if (akey == "eps") c.adam.eps = avalue.get<double>();
                    else throw ConfigMismatch("unknown key 'adam." + akey + "' in train config");
                }
            } else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "w_geometric") c.w_geometric = value.get<double>();
            else if (key == "w_contact") c.w_contact = value.get<double>();
            else if (key == "epsilon") c.epsilon = value.get<double>();
            else if (key == "holdout_grippers")
                c.holdout_grippers = value.get<std::vector<std::string>>();
            else if (key == "holdout_objects")
                c.holdout_objects = value.get<std::vector<std::string>>();
            else if (key == "checkpoint_every") c.checkpoint_every = value.get<int>();
            else if (key == "init_checkpoint") c.init_checkpoint = value.get<std::string>();
            else throw ConfigMismatch("unknown key '" + key + "' in train config");
        }
    } catch (const json::exception& e) {
        throw ConfigMismatch(std::string("bad train config value: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

struct Sample {
    std::string gripper_id;
    std::string object_id;
    ContactGroundTruth gt;
    const nn::ModelInputs* inputs = nullptr;
};

struct LossTriple {
    double geometric = 0.0;
    double contact = 0.0;
    double total = 0.0;
};

LossTriple sample_losses(nn::Tape& tape, const nn::ModelWeights& w, const nn::ModelConfig& cfg,
                         const Sample& s, const TrainConfig& tcfg, nn::Var* total_var) {
    nn::ModelOutputs out = nn::model_forward(tape, w, cfg, *s.inputs,
                                             nn::PredictMode::teacher_forcing, &s.gt.indices);
    nn::Var geo = nn::geometric_embedding_loss(tape, out.contact_logits, s.gt.maps);
    nn::Var ce = nn::predicted_contact_loss(tape, out.step_logits, s.gt.indices);
    nn::Var total = nn::add_scaled(geo, tcfg.w_geometric, ce, tcfg.w_contact);
    if (total_var) *total_var = total;
    LossTriple v;
    v.geometric = tape.value(geo)[0];
    v.contact = tape.value(ce)[0];
    v.total = tape.value(total)[0];
    return v;
}

void write_loss_line(std::ofstream& f, const EpochLoss& e) {
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g\n", e.epoch, e.geometric, e.contact,
                  e.total);
    f << buf;
    f.flush();
}

}  // namespace

TrainResult train(const DatasetManifest& manifest, const nn::ModelConfig& mcfg,
                  const TrainConfig& tcfg, const std::string& cache_root,
                  const std::string& run_dir) {
    mcfg.validate();
    tcfg.validate();
    fs::create_directories(run_dir);

    {
        json echo;
        echo["model"] = mcfg.to_json();
        echo["train"] = tcfg.to_json();
        std::ofstream f(fs::path(run_dir) / "config.json");
        f << echo.dump(2) << "\n";
    }
    std::ofstream access(fs::path(run_dir) / "access.log");

    std::set<std::string> held_g(tcfg.holdout_grippers.begin(), tcfg.holdout_grippers.end());
    std::set<std::string> held_o(tcfg.holdout_objects.begin(), tcfg.holdout_objects.end());

    // Headers first: holdout grasp files are identified without reading poses.
    std::vector<GraspRecord> records;
    for (const std::string& rel : manifest.grasp_files) {
        std::string path = (manifest.root / rel).string();
        GraspFileHeader head = peek_grasps(path);
        if (held_g.count(head.gripper_id) || held_o.count(head.object_id)) continue;
        GraspFile gf = load_grasps(path);
        access << "grasps " << rel << "\n";
        for (GraspPose& p : gf.poses)
            records.push_back(GraspRecord{gf.gripper_id, gf.object_id, std::move(p)});
    }
    if (records.empty()) throw EmptyDataset("no grasp records left after holdout filtering");

    std::map<std::string, GripperRuntime> grippers;
    std::map<std::string, ObjectRuntime> objects;
    for (const GraspRecord& rec : records) {
        if (!grippers.count(rec.gripper_id)) {
            const GripperEntry* entry = manifest.gripper(rec.gripper_id);
            if (!entry)
                throw ConfigMismatch("grasp references unknown gripper " + rec.gripper_id);
            grippers.emplace(rec.gripper_id,
                             load_gripper_runtime(manifest, *entry, mcfg, cache_root, true));
            access << "gripper " << rec.gripper_id << "\n";
        }
        if (!objects.count(rec.object_id)) {
            const ObjectEntry* entry = manifest.object(rec.object_id);
            if (!entry) throw ConfigMismatch("grasp references unknown object " + rec.object_id);
            objects.emplace(rec.object_id,
                            load_object_runtime(manifest, *entry, mcfg, cache_root, true));
            access << "object " << rec.object_id << "\n";
        }
    }
    access.flush();

    std::map<std::pair<std::string, std::string>, nn::ModelInputs> pair_inputs;
    std::vector<Sample> samples;
    for (const GraspRecord& rec : records) {
        const GripperRuntime& g = grippers.at(rec.gripper_id);
        const ObjectRuntime& o = objects.at(rec.object_id);
        validate_grasp(g.tree, rec);
        auto key = std::make_pair(rec.gripper_id, rec.object_id);
        if (!pair_inputs.count(key)) pair_inputs.emplace(key, make_model_inputs(g, o, mcfg));
        Sample s;
        s.gripper_id = rec.gripper_id;
        s.object_id = rec.object_id;
        s.gt = build_ground_truth(rec.pose, g, o.graph.points, tcfg.epsilon);
        samples.push_back(std::move(s));
    }
    for (Sample& s : samples) s.inputs = &pair_inputs.at({s.gripper_id, s.object_id});

    nn::ParamStore ps;
    Rng init_rng(Rng::derive(tcfg.seed, 0));
    nn::ModelWeights weights = nn::make_model_weights(ps, mcfg, init_rng);
    if (!tcfg.init_checkpoint.empty()) {
        nn::AdamState discarded;
        json meta = nn::load_checkpoint(tcfg.init_checkpoint, ps, discarded);
        if (meta.contains("model") && meta.at("model") != mcfg.to_json())
            throw ConfigMismatch("init checkpoint " + tcfg.init_checkpoint +
                                 " was trained with a different model config");
    } else if (mcfg.freeze_policy == nn::FreezePolicy::finetune) {
        throw ConfigMismatch("freeze_policy finetune requires init_checkpoint");
    }
    nn::apply_freeze_policy(ps, mcfg.freeze_policy);
    nn::AdamState adam;

    json meta;
    meta["model"] = mcfg.to_json();
    meta["train"] = tcfg.to_json();

    std::ofstream loss_log(fs::path(run_dir) / "loss.txt");
    TrainResult result;
    result.samples = static_cast<int>(samples.size());

    auto eval_epoch = [&](int epoch) {
        EpochLoss e;
        e.epoch = epoch;
        for (const Sample& s : samples) {
            nn::Tape tape;
            LossTriple v = sample_losses(tape, weights, mcfg, s, tcfg, nullptr);
            e.geometric += v.geometric;
            e.contact += v.contact;
            e.total += v.total;
        }
        double n = static_cast<double>(samples.size());
        e.geometric /= n;
        e.contact /= n;
        e.total /= n;
        return e;
    };

    EpochLoss before = eval_epoch(0);
    write_loss_line(loss_log, before);
    result.curve.push_back(before);

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::derive(tcfg.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

        EpochLoss e;
        e.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
            std::size_t end = std::min(order.size(), start + tcfg.batch_size);
            double batch_n = static_cast<double>(end - start);
            ps.zero_grads();
            for (std::size_t i = start; i < end; ++i) {
                const Sample& s = samples[order[i]];
                nn::Tape tape;
                nn::Var total;
                LossTriple v = sample_losses(tape, weights, mcfg, s, tcfg, &total);
                tape.backward(nn::scale(total, 1.0 / batch_n));
                e.geometric += v.geometric;
                e.contact += v.contact;
                e.total += v.total;
            }
            nn::adam_step(ps, adam, tcfg.adam);
            ++result.steps;
        }
        double n = static_cast<double>(samples.size());
        e.geometric /= n;
        e.contact /= n;
        e.total /= n;
        write_loss_line(loss_log, e);
        result.curve.push_back(e);

        if (tcfg.checkpoint_every > 0 && epoch % tcfg.checkpoint_every == 0 &&
            epoch != tcfg.epochs) {
            fs::path snap = fs::path(run_dir) / ("checkpoint_epoch_" + std::to_string(epoch) +
                                                 ".bin");
            nn::save_checkpoint(snap.string(), ps, adam, meta);
        }
    }

    fs::path final_path = fs::path(run_dir) / "checkpoint.bin";
    nn::save_checkpoint(final_path.string(), ps, adam, meta);
    result.checkpoint_path = final_path.string();
    return result;
}

LoadedModel load_model(const std::string& checkpoint_path) {
    LoadedModel m;
    m.meta = nn::read_checkpoint_meta(checkpoint_path);
    if (!m.meta.contains("model"))
        throw ConfigMismatch("checkpoint " + checkpoint_path + " carries no model config");
    m.config = nn::ModelConfig::from_json(m.meta.at("model"));
    m.config.validate();
    Rng rng(0);  // placeholder values, overwritten by the checkpoint
    m.weights = nn::make_model_weights(m.params, m.config, rng);
    nn::AdamState discarded;
    nn::load_checkpoint(checkpoint_path, m.params, discarded);
    return m;
}

std::vector<SampleEval> evaluate_dataset(const DatasetManifest& manifest,
                                         const LoadedModel& model, const std::string& cache_root,
                                         const EvalOptions& opts) {
    std::set<std::string> want_g(opts.grippers.begin(), opts.grippers.end());
    std::set<std::string> want_o(opts.objects.begin(), opts.objects.end());
    std::vector<GraspRecord> records;
    for (GraspRecord& rec : load_all_grasps(manifest)) {
        if (!want_g.empty() && !want_g.count(rec.gripper_id)) continue;
        if (!want_o.empty() && !want_o.count(rec.object_id)) continue;
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw EmptyDataset("no grasp records matched the evaluation filter");

    std::map<std::string, GripperRuntime> grippers;
    std::map<std::string, ObjectRuntime> objects;
    std::map<std::pair<std::string, std::string>, nn::ModelInputs> pair_inputs;
    std::vector<SampleEval> out;
    for (const GraspRecord& rec : records) {
        if (!grippers.count(rec.gripper_id)) {
            const GripperEntry* entry = manifest.gripper(rec.gripper_id);
            if (!entry)
                throw ConfigMismatch("grasp references unknown gripper " + rec.gripper_id);
            grippers.emplace(rec.gripper_id,
                             load_gripper_runtime(manifest, *entry, model.config, cache_root,
                                                  false));
        }
        if (!objects.count(rec.object_id)) {
            const ObjectEntry* entry = manifest.object(rec.object_id);
            if (!entry) throw ConfigMismatch("grasp references unknown object " + rec.object_id);
            objects.emplace(rec.object_id, load_object_runtime(manifest, *entry, model.config,
                                                               cache_root, false));
        }
        const GripperRuntime& g = grippers.at(rec.gripper_id);
        const ObjectRuntime& o = objects.at(rec.object_id);
        auto key = std::make_pair(rec.gripper_id, rec.object_id);
        if (!pair_inputs.count(key))
            pair_inputs.emplace(key, make_model_inputs(g, o, model.config));
        const nn::ModelInputs& in = pair_inputs.at(key);

        SampleEval ev;
        ev.gripper_id = rec.gripper_id;
        ev.object_id = rec.object_id;
        ContactGroundTruth gt = build_ground_truth(rec.pose, g, o.graph.points, opts.epsilon);
        ev.truth = gt.indices;
        {
            nn::Tape tape;
            nn::ModelOutputs fwd = nn::model_forward(
                tape, model.weights, model.config, in, nn::PredictMode::teacher_forcing,
                &gt.indices);
            ev.geometric =
                tape.value(nn::geometric_embedding_loss(tape, fwd.contact_logits, gt.maps))[0];
            ev.contact =
                tape.value(nn::predicted_contact_loss(tape, fwd.step_logits, gt.indices))[0];
        }
        {
            nn::Tape tape;
            nn::ModelOutputs fwd = nn::model_forward(tape, model.weights, model.config, in,
                                                     nn::PredictMode::inference);
            ev.predicted = fwd.indices;
        }
        for (std::size_t i = 0; i < ev.predicted.size(); ++i)
            if (ev.predicted[i] == ev.truth[i]) ++ev.matches;
        out.push_back(std::move(ev));
    }
    return out;
}

ContactPrediction predict_contacts(const LoadedModel& model, const TriMesh& object_mesh,
                                   std::uint64_t cloud_seed, const GripperRuntime& gripper) {
    const nn::ModelConfig& cfg = model.config;
    ObjectRuntime object;
    object.graph =
        knn_graph(sample_surface(object_mesh, cfg.object_points, cloud_seed), cfg.knn);
    nn::ModelInputs in = make_model_inputs(gripper, object, cfg);
    nn::Tape tape;
    nn::ModelOutputs fwd =
        nn::model_forward(tape, model.weights, cfg, in, nn::PredictMode::inference);
    ContactPrediction p;
    p.indices = fwd.indices;
    for (int idx : fwd.indices)
        p.coords.push_back(object.graph.points[static_cast<std::size_t>(idx)]);
    return p;
}

GraspFit fit_grasp(const GripperRuntime& gripper, const std::vector<Vec3>& targets) {
    if (targets.size() != gripper.keypoint_locals.size())
        throw ShapeMismatch("fit_grasp got " + std::to_string(targets.size()) +
                            " targets for " + std::to_string(gripper.keypoint_locals.size()) +
                            " keypoints");
    JointConfig rest = rest_pose(gripper.tree);
    std::vector<double> rest_angles;
    for (const std::string& name : gripper.tree.revolute_joint_names())
        rest_angles.push_back(rest.at(name));

    GraspPose at_origin;
    at_origin.joint_angles = rest_angles;
    std::vector<Vec3> kp0 = keypoint_positions(gripper.tree, gripper.keypoint_locals, at_origin);
    Vec3 kp_centroid;
    for (const Vec3& p : kp0) kp_centroid += p;
    kp_centroid = kp_centroid * (1.0 / static_cast<double>(kp0.size()));
    Vec3 target_centroid;
    for (const Vec3& t : targets) target_centroid += t;
    target_centroid = target_centroid * (1.0 / static_cast<double>(targets.size()));

    constexpr double kHalfPi = 1.5707963267948966;
    const Mat3 starts[6] = {Mat3::identity(),       rotation_x(kHalfPi), rotation_x(-kHalfPi),
                            rotation_y(kHalfPi),    rotation_y(-kHalfPi), rotation_x(2 * kHalfPi)};
    GraspFit best;
    best.rms = std::numeric_limits<double>::infinity();
    for (const Mat3& r : starts) {
        GraspPose init;
        init.rotation = Quat::from_matrix(r);
        init.translation = target_centroid - r * kp_centroid;
        init.joint_angles = rest_angles;
        IkResult res = ik_fit(gripper.tree, gripper.keypoint_locals, targets, init);
        if (res.rms < best.rms) {
            best.rms = res.rms;
            best.pose = res.pose;
            best.converged = res.converged;
        }
    }
    return best;
}

std::vector<GraspResidual> grasp_residuals(const DatasetManifest& manifest,
                                           const std::vector<GraspRecord>& records,
                                           const std::string& cache_root) {
    std::map<std::string, GripperRuntime> grippers;
    std::map<std::string, ObjectRuntime> objects;
    std::vector<GraspResidual> out;
    for (const GraspRecord& rec : records) {
        if (!grippers.count(rec.gripper_id)) {
            const GripperEntry* entry = manifest.gripper(rec.gripper_id);
            if (!entry)
                throw ConfigMismatch("grasp references unknown gripper " + rec.gripper_id);
            nn::ModelConfig cfg;
            cfg.gripper_points = entry->cloud_points;
            cfg.keypoints = static_cast<int>(entry->keypoints.size());
            grippers.emplace(rec.gripper_id,
                             load_gripper_runtime(manifest, *entry, cfg, cache_root, false));
        }
        if (!objects.count(rec.object_id)) {
            const ObjectEntry* entry = manifest.object(rec.object_id);
            if (!entry) throw ConfigMismatch("grasp references unknown object " + rec.object_id);
            nn::ModelConfig cfg;
            cfg.object_points = entry->cloud_points;
            objects.emplace(rec.object_id,
                            load_object_runtime(manifest, *entry, cfg, cache_root, false));
        }
        const GripperRuntime& g = grippers.at(rec.gripper_id);
        const ObjectRuntime& o = objects.at(rec.object_id);
        validate_grasp(g.tree, rec);
        std::vector<Vec3> kp = keypoint_positions(g.tree, g.keypoint_locals, rec.pose);
        double sum = 0.0;
        for (const Vec3& p : kp) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : o.graph.points) best = std::min(best, (q - p).squared_norm());
            sum += best;
        }
        GraspResidual r;
        r.gripper_id = rec.gripper_id;
        r.object_id = rec.object_id;
        r.rms = std::sqrt(sum / static_cast<double>(kp.size()));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace mg
