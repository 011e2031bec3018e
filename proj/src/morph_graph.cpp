#include "morphgrasp/morph_graph.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "morphgrasp/errors.hpp"
#include "morphgrasp/obb.hpp"

namespace mg {

using nlohmann::json;

MorphFeatureSet morph_feature_set_from_string(const std::string& s) {
    if (s == "standard") return MorphFeatureSet::standard;
    if (s == "joints_only") return MorphFeatureSet::joints_only;
    if (s == "links_only") return MorphFeatureSet::links_only;
    throw ConfigMismatch("unknown morphology feature set: " + s);
}

std::string to_string(MorphFeatureSet fs) {
    switch (fs) {
        case MorphFeatureSet::standard: return "standard";
        case MorphFeatureSet::joints_only: return "joints_only";
        case MorphFeatureSet::links_only: return "links_only";
    }
    return "standard";
}

std::map<std::string, LinkGeom> link_summaries_from_meshes(const KinematicTree& tree,
                                                           const std::string& mesh_root) {
    auto fk = forward_kinematics(tree, Transform{}, rest_pose(tree));
    std::map<std::string, LinkGeom> out;
    for (const LinkSpec& link : tree.links) {
        if (!link.mesh_ref) continue;
        std::filesystem::path p = std::filesystem::path(mesh_root) / *link.mesh_ref;
        TriMesh mesh = load_mesh(p.string());
        auto [com, size] = link_summary(mesh, fk.at(link.name).compose(link.visual_origin));
        out[link.name] = LinkGeom{com, size};
    }
    return out;
}

MorphologyGraph build_morphology_graph(const KinematicTree& tree,
                                       const std::map<std::string, LinkGeom>& summaries,
                                       MorphFeatureSet feature_set, int padded_size) {
    int real = static_cast<int>(tree.links.size());
    if (real > padded_size)
        throw TooManyLinks(std::to_string(real) + " links exceed the padded graph size " +
                           std::to_string(padded_size));

    MorphologyGraph g;
    g.real_node_count = real;
    g.feature_set = feature_set;
    g.features = nn::Tensor::zeros({padded_size, 9});
    g.adjacency = nn::Tensor::zeros({padded_size, padded_size});
    for (int i = 0; i < real; ++i) g.link_index[tree.links[i].name] = i;

    std::map<std::string, Transform> fk;
    if (feature_set == MorphFeatureSet::links_only)
        fk = forward_kinematics(tree, Transform{}, rest_pose(tree));

    for (int i = 0; i < real; ++i) {
        const std::string& name = tree.links[i].name;
        const JointSpec* parent = tree.parent_joint(name);
        LinkGeom geom;
        auto git = summaries.find(name);
        if (git != summaries.end()) geom = git->second;

        double row[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
        switch (feature_set) {
            case MorphFeatureSet::standard: {
                if (parent) {
                    row[0] = parent->origin_xyz.x;
                    row[1] = parent->origin_xyz.y;
                    row[2] = parent->origin_xyz.z;
                }
                row[3] = geom.com.x;
                row[4] = geom.com.y;
                row[5] = geom.com.z;
                row[6] = geom.size.x;
                row[7] = geom.size.y;
                row[8] = geom.size.z;
                break;
            }
            case MorphFeatureSet::joints_only: {
                if (parent) {
                    row[0] = parent->origin_xyz.x;
                    row[1] = parent->origin_xyz.y;
                    row[2] = parent->origin_xyz.z;
                    if (parent->kind == JointKind::revolute) {
                        row[3] = parent->axis.x;
                        row[4] = parent->axis.y;
                        row[5] = parent->axis.z;
                        row[6] = parent->limit_lower;
                        row[7] = parent->limit_upper;
                    }
                }
                break;  // column 8 stays zero: 8 real columns padded to the shared width
            }
            case MorphFeatureSet::links_only: {
                Vec3 origin = fk.at(name).t;
                row[0] = origin.x;
                row[1] = origin.y;
                row[2] = origin.z;
                row[3] = geom.com.x;
                row[4] = geom.com.y;
                row[5] = geom.com.z;
                row[6] = geom.size.x;
                row[7] = geom.size.y;
                row[8] = geom.size.z;
                break;
            }
        }
        for (int c = 0; c < 9; ++c) g.features.at(i, c) = row[c];
    }

    for (int i = 0; i < real; ++i) g.adjacency.at(i, i) = 1.0;
    for (const JointSpec& j : tree.joints) {
        int a = g.link_index.at(j.parent_link);
        int b = g.link_index.at(j.child_link);
        g.adjacency.at(a, b) = 1.0;
        g.adjacency.at(b, a) = 1.0;
    }
    return g;
}

std::string morph_graph_to_json(const MorphologyGraph& g, MorphFeatureSet feature_set) {
    json j;
    j["schema"] = "morph-graph/1";
    j["feature_set"] = to_string(feature_set);
    j["padded_size"] = g.padded_size();
    j["real_node_count"] = g.real_node_count;
    j["link_index"] = json::object();
    for (const auto& [name, idx] : g.link_index) j["link_index"][name] = idx;
    json rows = json::array();
    for (int i = 0; i < g.real_node_count; ++i) {
        json row = json::array();
        for (int c = 0; c < 9; ++c) row.push_back(g.features.at(i, c));
        rows.push_back(row);
    }
    j["features"] = rows;
    json edges = json::array();
    for (int i = 0; i < g.real_node_count; ++i)
        for (int c = i; c < g.real_node_count; ++c)
            if (g.adjacency.at(i, c) != 0.0) edges.push_back(json::array({i, c}));
    j["edges"] = edges;
    return j.dump(2) + "\n";
}

MorphologyGraph morph_graph_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptFile(std::string("bad morphology graph JSON: ") + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != "morph-graph/1")
            throw CorruptFile("unsupported morphology graph schema");
        MorphologyGraph g;
        g.feature_set = morph_feature_set_from_string(j.at("feature_set").get<std::string>());
        int padded = j.at("padded_size").get<int>();
        g.real_node_count = j.at("real_node_count").get<int>();
        if (g.real_node_count < 0 || g.real_node_count > padded)
            throw CorruptFile("real_node_count outside padded size");
        g.features = nn::Tensor::zeros({padded, 9});
        g.adjacency = nn::Tensor::zeros({padded, padded});
        const json& rows = j.at("features");
        if (static_cast<int>(rows.size()) != g.real_node_count)
            throw CorruptFile("feature row count mismatch");
        for (int i = 0; i < g.real_node_count; ++i) {
            if (rows[i].size() != 9) throw CorruptFile("feature row width mismatch");
            for (int c = 0; c < 9; ++c) g.features.at(i, c) = rows[i][c].get<double>();
        }
        for (const auto& e : j.at("edges")) {
            int a = e.at(0).get<int>();
            int b = e.at(1).get<int>();
            if (a < 0 || b < 0 || a >= g.real_node_count || b >= g.real_node_count)
                throw CorruptFile("edge outside real node range");
            g.adjacency.at(a, b) = 1.0;
            g.adjacency.at(b, a) = 1.0;
        }
        for (const auto& [name, idx] : j.at("link_index").items())
            g.link_index[name] = idx.get<int>();
        return g;
    } catch (const json::exception& e) {
        throw CorruptFile(std::string("morphology graph JSON missing fields: ") + e.what());
    }
}

void save_morph_graph(const std::string& path, const MorphologyGraph& g,
                      MorphFeatureSet feature_set) {
    std::ofstream f(path);
    if (!f) throw CorruptFile("cannot write morphology graph: " + path);
    f << morph_graph_to_json(g, feature_set);
}

MorphologyGraph load_morph_graph(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CacheMiss("no morphology graph at " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return morph_graph_from_json(ss.str());
}

}  // namespace mg
