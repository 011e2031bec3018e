#include "morphgrasp/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "morphgrasp/errors.hpp"
#include "morphgrasp/rng.hpp"

namespace mg {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---- meshes ----

TriMesh box_mesh(double x0, double x1, double y0, double y1, double z0, double z1) {
    TriMesh m;
    m.vertices = {{x0, y0, z0}, {x1, y0, z0}, {x1, y1, z0}, {x0, y1, z0},
                  {x0, y0, z1}, {x1, y0, z1}, {x1, y1, z1}, {x0, y1, z1}};
    m.faces = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
               {1, 2, 6}, {1, 6, 5}, {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
    return m;
}

TriMesh icosphere(double radius, int subdivisions) {
    double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},
               {5, 11, 4}, {11, 10, 2}, {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
               {3, 2, 6},  {3, 6, 8},  {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10},
               {8, 6, 7},  {9, 8, 1}};
    for (int pass = 0; pass < subdivisions; ++pass) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 p = (m.vertices[a] + m.vertices[b]) * 0.5;
            int id = static_cast<int>(m.vertices.size());
            m.vertices.push_back(p);
            midpoint[key] = id;
            return id;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& f : m.faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.faces = std::move(next);
    }
    for (Vec3& v : m.vertices) v = v * (radius / v.norm());
    return m;
}

TriMesh cylinder_mesh(double radius, double height, int segments) {
    TriMesh m;
    double h = height / 2.0;
    int bottom_center = 0, top_center = 1;
    m.vertices.push_back({0, 0, -h});
    m.vertices.push_back({0, 0, h});
    for (int i = 0; i < segments; ++i) {
        double a = 2.0 * kPi * i / segments;
        m.vertices.push_back({radius * std::cos(a), radius * std::sin(a), -h});
        m.vertices.push_back({radius * std::cos(a), radius * std::sin(a), h});
    }
    auto bot = [&](int i) { return 2 + 2 * (i % segments); };
    auto top = [&](int i) { return 3 + 2 * (i % segments); };
    for (int i = 0; i < segments; ++i) {
        m.faces.push_back({bottom_center, bot(i + 1), bot(i)});
        m.faces.push_back({top_center, top(i), top(i + 1)});
        m.faces.push_back({bot(i), bot(i + 1), top(i + 1)});
        m.faces.push_back({bot(i), top(i + 1), top(i)});
    }
    return m;
}

// ---- toy gripper family ----

struct ToyGripperSpec {
    std::string id;
    int fingers = 3;
    double palm_half = 0.03;
    double palm_height = 0.018;
    double attach_radius = 0.024;
    std::vector<double> segment_lengths;
    double half_width = 0.007;
};

std::vector<ToyGripperSpec> toy_grippers(bool extra) {
    std::vector<ToyGripperSpec> specs = {
        {"tripod", 3, 0.030, 0.018, 0.024, {0.040, 0.034}, 0.0070},
        {"twin", 2, 0.026, 0.022, 0.020, {0.030, 0.028, 0.026}, 0.0065},
        {"quad", 4, 0.034, 0.016, 0.027, {0.036, 0.030}, 0.0075},
    };
    if (extra) {
        specs.push_back({"trident", 3, 0.028, 0.020, 0.022, {0.050, 0.026}, 0.0060});
        specs.push_back({"duo_long", 2, 0.024, 0.018, 0.019, {0.040, 0.036, 0.032}, 0.0070});
        specs.push_back({"penta", 5, 0.033, 0.017, 0.028, {0.030, 0.024}, 0.0055});
    }
    return specs;
}

std::string segment_mesh_name(int s) { return "seg" + std::to_string(s) + ".obj"; }

void write_gripper_meshes(const ToyGripperSpec& g, const fs::path& mesh_dir) {
    fs::create_directories(mesh_dir);
    save_obj(box_mesh(-g.palm_half, g.palm_half, -g.palm_half, g.palm_half, 0.0, g.palm_height),
             (mesh_dir / "palm.obj").string());
    for (std::size_t s = 0; s < g.segment_lengths.size(); ++s) {
        double w = g.half_width * std::pow(0.88, static_cast<double>(s));
        save_obj(box_mesh(0.0, g.segment_lengths[s], -w, w, -w, w),
                 (mesh_dir / segment_mesh_name(static_cast<int>(s))).string());
    }
}

std::string finger_link(int finger, int segment) {
    return "f" + std::to_string(finger) + "_l" + std::to_string(segment);
}

std::string gripper_urdf(const ToyGripperSpec& g) {
    std::ostringstream o;
    o << "<?xml version=\"1.0\"?>\n<robot name=\"" << g.id << "\">\n";
    auto link = [&](const std::string& name, const std::string& mesh) {
        o << "  <link name=\"" << name << "\">\n"
          << "    <visual>\n      <geometry>\n        <mesh filename=\"" << mesh << "\"/>\n"
          << "      </geometry>\n    </visual>\n  </link>\n";
    };
    link("palm", "palm.obj");
    for (int f = 0; f < g.fingers; ++f)
        for (std::size_t s = 0; s < g.segment_lengths.size(); ++s)
            link(finger_link(f, static_cast<int>(s)), segment_mesh_name(static_cast<int>(s)));
    for (int f = 0; f < g.fingers; ++f) {
        double theta = 2.0 * kPi * f / g.fingers;
        for (std::size_t s = 0; s < g.segment_lengths.size(); ++s) {
            std::string parent = s == 0 ? "palm" : finger_link(f, static_cast<int>(s) - 1);
            std::string child = finger_link(f, static_cast<int>(s));
            std::string xyz, rpy;
            if (s == 0) {
                xyz = fmt(g.attach_radius * std::cos(theta)) + " " +
                      fmt(g.attach_radius * std::sin(theta)) + " " + fmt(g.palm_height);
                rpy = "0 " + fmt(-kPi / 2.0) + " " + fmt(theta);
            } else {
                xyz = fmt(g.segment_lengths[s - 1]) + " 0 0";
                rpy = "0 0 0";
            }
            double hi = s == 0 ? 1.5 : 1.3;
            o << "  <joint name=\"j_" << child << "\" type=\"revolute\">\n"
              << "    <parent link=\"" << parent << "\"/>\n"
              << "    <child link=\"" << child << "\"/>\n"
              << "    <origin xyz=\"" << xyz << "\" rpy=\"" << rpy << "\"/>\n"
              << "    <axis xyz=\"0 -1 0\"/>\n"
              << "    <limit lower=\"0\" upper=\"" << fmt(hi) << "\"/>\n"
              << "  </joint>\n";
        }
    }
    o << "</robot>\n";
    return o.str();
}

// Six distinct keypoint links: fingertips first, then the palm, then earlier
// segments until six links are covered.
std::vector<std::string> keypoint_link_order(const ToyGripperSpec& g) {
    std::vector<std::string> order;
    int segs = static_cast<int>(g.segment_lengths.size());
    for (int f = 0; f < g.fingers; ++f) order.push_back(finger_link(f, segs - 1));
    order.push_back("palm");
    for (int s = segs - 2; s >= 0; --s)
        for (int f = 0; f < g.fingers; ++f) order.push_back(finger_link(f, s));
    if (order.size() < 6)
        throw ConfigMismatch("toy gripper " + g.id + " has too few links for 6 keypoints");
    order.resize(6);
    return order;
}

bool covers_links(const GripperCloud& cloud, const std::vector<std::string>& links) {
    for (const std::string& link : links) {
        bool hit = false;
        for (std::size_t p = 0; p < cloud.points.size() && !hit; ++p)
            hit = cloud.link_names[static_cast<std::size_t>(cloud.link_of_point[p])] == link;
        if (!hit) return false;
    }
    return true;
}

// Finger links take the sampled point farthest along the segment (the tip);
// the palm takes the point nearest its top center.
std::vector<KeypointEntry> pick_keypoints(const ToyGripperSpec& g, const KinematicTree& tree,
                                          const GripperCloud& cloud) {
    std::vector<std::string> order = keypoint_link_order(g);
    auto fk = forward_kinematics(tree, Transform{}, rest_pose(tree));
    std::vector<KeypointEntry> out;
    for (const std::string& link : order) {
        Transform inv = fk.at(link).inverse();
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < cloud.points.size(); ++p) {
            if (cloud.link_names[static_cast<std::size_t>(cloud.link_of_point[p])] != link)
                continue;
            Vec3 local = inv.apply(cloud.points[p]);
            double score;
            if (link == "palm") {
                Vec3 d = local - Vec3{0, 0, g.palm_height};
                score = -d.norm();
            } else {
                score = local.x;
            }
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(p);
            }
        }
        if (best < 0)
            throw ConfigMismatch("toy gripper " + g.id + " sampled no points on link " + link);
        out.push_back(KeypointEntry{best, link});
    }
    return out;
}

// Rotation whose third column is `z`, with a roll of `psi` about it.
Mat3 frame_toward(const Vec3& z_axis, double psi) {
    Vec3 z = z_axis.normalized();
    Vec3 pick = std::abs(z.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 x = (pick - z * pick.dot(z)).normalized();
    Vec3 y = z.cross(x);
    Mat3 r;
    r.set_col(0, x);
    r.set_col(1, y);
    r.set_col(2, z);
    return r * rotation_z(psi);
}

struct GripperGen {
    ToyGripperSpec spec;
    KinematicTree tree;
    GripperCloud cloud;
    std::vector<KeypointEntry> keypoints;
    std::vector<KeypointLocal> locals;
};

}  // namespace

DatasetManifest make_toy_dataset(const std::string& dir, std::uint64_t seed,
                                 const ToyParams& params) {
    if (params.object_points < 16 || params.gripper_points < 32)
        throw ConfigMismatch("toy dataset needs at least 16 object / 32 gripper samples");
    fs::path root(dir);
    fs::create_directories(root / "grippers");
    fs::create_directories(root / "objects");
    fs::create_directories(root / "grasps");
    fs::create_directories(root / "cache" / "clouds");
    fs::create_directories(root / "cache" / "morph");

    DatasetManifest m;
    m.root = fs::absolute(root);

    // ---- grippers ----
    std::vector<GripperGen> gens;
    int gi = 0;
    for (const ToyGripperSpec& spec : toy_grippers(params.extra_grippers)) {
        fs::path mesh_dir = root / "grippers" / ("meshes_" + spec.id);
        write_gripper_meshes(spec, mesh_dir);
        std::string urdf_text = gripper_urdf(spec);
        {
            std::ofstream f(root / "grippers" / (spec.id + ".urdf"));
            f << urdf_text;
        }
        GripperGen gen;
        gen.spec = spec;
        gen.tree = parse_urdf(urdf_text);

        std::map<std::string, TriMesh> meshes;
        for (const LinkSpec& link : gen.tree.links)
            if (link.mesh_ref) meshes[link.name] = load_mesh((mesh_dir / *link.mesh_ref).string());
        // resample with a derived seed until every keypoint link holds a point
        std::vector<std::string> needed = keypoint_link_order(spec);
        std::uint64_t cloud_seed = 0;
        for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
            cloud_seed =
                Rng::derive(seed, 10 + static_cast<std::uint64_t>(gi) + 1000 * attempt);
            gen.cloud =
                assemble_gripper_cloud(gen.tree, meshes, params.gripper_points, cloud_seed);
            if (covers_links(gen.cloud, needed)) break;
        }
        gen.keypoints = pick_keypoints(spec, gen.tree, gen.cloud);

        auto fk = forward_kinematics(gen.tree, Transform{}, rest_pose(gen.tree));
        for (const KeypointEntry& kp : gen.keypoints)
            gen.locals.push_back(KeypointLocal{
                kp.link_name,
                fk.at(kp.link_name).inverse().apply(
                    gen.cloud.points[static_cast<std::size_t>(kp.point_index)])});

        save_gripper_cloud((root / "cache" / "clouds" / ("gripper_" + spec.id + ".bin")).string(),
                           gen.cloud);
        auto summaries = link_summaries_from_meshes(gen.tree, mesh_dir.string());
        for (MorphFeatureSet fset : {MorphFeatureSet::standard, MorphFeatureSet::joints_only,
                                      MorphFeatureSet::links_only}) {
            MorphologyGraph graph = build_morphology_graph(gen.tree, summaries, fset, 32);
            save_morph_graph(
                (root / "cache" / "morph" / (spec.id + "_" + to_string(fset) + ".json")).string(),
                graph, fset);
        }

        GripperEntry entry;
        entry.id = spec.id;
        entry.urdf = "grippers/" + spec.id + ".urdf";
        entry.mesh_dir = "grippers/meshes_" + spec.id;
        entry.keypoints = gen.keypoints;
        entry.cloud_points = params.gripper_points;
        entry.cloud_seed = cloud_seed;
        m.grippers.push_back(entry);
        gens.push_back(std::move(gen));
        ++gi;
    }

    // ---- objects ----
    struct ObjectGen {
        std::string id;
        std::vector<Vec3> points;
    };
    std::vector<ObjectGen> objs;
    std::vector<std::pair<std::string, TriMesh>> object_meshes = {
        {"sphere", icosphere(0.045, 2)},
        {"box", box_mesh(-0.0425, 0.0425, -0.0325, 0.0325, -0.025, 0.025)},
        {"cylinder", cylinder_mesh(0.032, 0.09, 24)},
    };
    int oi = 0;
    for (auto& [id, mesh] : object_meshes) {
        save_obj(mesh, (root / "objects" / (id + ".obj")).string());
        std::uint64_t cloud_seed = Rng::derive(seed, 20 + static_cast<std::uint64_t>(oi));
        ObjectGen og;
        og.id = id;
        og.points = sample_surface(mesh, params.object_points, cloud_seed);
        save_cloud((root / "cache" / "clouds" / ("object_" + id + ".bin")).string(),
                   knn_graph(og.points, params.knn));

        ObjectEntry entry;
        entry.id = id;
        entry.mesh = "objects/" + id + ".obj";
        entry.cloud_points = params.object_points;
        entry.cloud_seed = cloud_seed;
        m.objects.push_back(entry);
        objs.push_back(std::move(og));
        ++oi;
    }

    // ---- grasps: seed a pose around the object, aim each keypoint at its
    // nearest surface sample, and refine with inverse kinematics ----
    if (params.grasps) {
        for (std::size_t gidx = 0; gidx < gens.size(); ++gidx) {
            const GripperGen& gen = gens[gidx];
            double reach = gen.spec.palm_height;
            for (double L : gen.spec.segment_lengths) reach += L;
            for (std::size_t odx = 0; odx < objs.size(); ++odx) {
                const ObjectGen& obj = objs[odx];
                GraspFile gf;
                gf.gripper_id = gen.spec.id;
                gf.object_id = obj.id;
                gf.dof = gen.tree.dof();
                Rng rng(Rng::derive(seed, 1000 + 100 * gidx + 10 * odx));
                for (int k = 0; k < params.grasps_per_pair; ++k) {
                    GraspPose best_pose;
                    double best_rms = std::numeric_limits<double>::infinity();
                    int attempts = params.canonical_grasps ? 1 : 6;
                    for (int attempt = 0; attempt < attempts; ++attempt) {
                        double zc, phi, psi;
                        if (params.canonical_grasps) {
                            // Fibonacci-sphere direction per grasp index,
                            // identical for every hand.
                            zc = 1.0 - (2.0 * k + 1.0) / params.grasps_per_pair;
                            phi = 2.39996322972865332 * k;
                            psi = 0.4 * k;
                        } else {
                            zc = rng.uniform(-1.0, 1.0);
                            phi = rng.uniform(0.0, 2.0 * kPi);
                            psi = rng.uniform(0.0, 2.0 * kPi);
                        }
                        double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
                        Vec3 dir{rr * std::cos(phi), rr * std::sin(phi), zc};
                        double dist = gen.spec.palm_height + 0.62 * reach;

                        GraspPose init;
                        init.translation = dir * dist;
                        init.rotation = Quat::from_matrix(frame_toward(dir * -1.0, psi));
                        JointConfig rest = rest_pose(gen.tree);
                        for (const std::string& name : gen.tree.revolute_joint_names())
                            init.joint_angles.push_back(
                                rest.at(name) +
                                (params.canonical_grasps ? 0.0
                                                         : rng.uniform(-0.25, 0.25)));

                        std::vector<Vec3> kp =
                            keypoint_positions(gen.tree, gen.locals, init);
                        std::vector<Vec3> targets;
                        for (const Vec3& p : kp) {
                            int best = 0;
                            double bd = std::numeric_limits<double>::infinity();
                            for (std::size_t v = 0; v < obj.points.size(); ++v) {
                                Vec3 d = obj.points[v] - p;
                                double d2 = d.dot(d);
                                if (d2 < bd) {
                                    bd = d2;
                                    best = static_cast<int>(v);
                                }
                            }
                            targets.push_back(obj.points[static_cast<std::size_t>(best)]);
                        }
                        IkParams ik;
                        ik.max_iterations = 200;
                        IkResult res = ik_fit(gen.tree, gen.locals, targets, init, ik);
                        if (res.rms < best_rms) {
                            best_rms = res.rms;
                            best_pose = res.pose;
                        }
                        if (best_rms < 0.004) break;
                    }
                    gf.poses.push_back(best_pose);
                }
                std::string rel = "grasps/" + gen.spec.id + "_" + obj.id + ".bin";
                save_grasps((root / rel).string(), gf);
                m.grasp_files.push_back(rel);
            }
        }
    }

    save_manifest((root / "manifest.json").string(), m);
    return m;
}

}  // namespace mg
