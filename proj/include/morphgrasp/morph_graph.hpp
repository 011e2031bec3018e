#pragma once

#include <map>
#include <string>

#include "morphgrasp/tensor.hpp"
#include "morphgrasp/urdf.hpp"

namespace mg {

// Which 9 columns each node carries. "standard" is joint offset + link COM +
// link size; the other two are ablation variants (joint-centric and
// link-centric features respectively).
enum class MorphFeatureSet { standard, joints_only, links_only };

MorphFeatureSet morph_feature_set_from_string(const std::string& s);
std::string to_string(MorphFeatureSet fs);

// Per-link geometry summary in world frame at the canonical rest pose. Links
// without meshes keep zero COM/size.
struct LinkGeom {
    Vec3 com{0, 0, 0};
    Vec3 size{0, 0, 0};
};

struct MorphologyGraph {
    nn::Tensor features;   // [padded, 9], rows >= real_node_count all zero
    nn::Tensor adjacency;  // [padded, padded] binary symmetric, self loops on real rows
    int real_node_count = 0;
    std::map<std::string, int> link_index;  // link name -> node row
    MorphFeatureSet feature_set = MorphFeatureSet::standard;
    int padded_size() const { return features.rows(); }
};

// Loads each link's mesh (mesh_ref resolved against mesh_root), places it at
// the canonical rest pose (identity root, mid-limit joints) and summarizes it
// as the oriented-bounding-box center and extents in world frame.
std::map<std::string, LinkGeom> link_summaries_from_meshes(const KinematicTree& tree,
                                                           const std::string& mesh_root);

// Nodes are links in document order; edges are joints. Feature layout:
//   standard:    [joint offset, com, size]
//   joints_only: [joint offset, joint axis, limit lo, limit hi, 0]
//   links_only:  [rest-pose world origin, com, size]
// The root link's offset is zero; every other link carries its parent joint's
// origin translation.
MorphologyGraph build_morphology_graph(const KinematicTree& tree,
                                       const std::map<std::string, LinkGeom>& summaries,
                                       MorphFeatureSet feature_set, int padded_size = 32);

// Deterministic JSON round trip (sorted keys, real rows only, edge list with
// i <= j); used for cache files and golden comparisons.
std::string morph_graph_to_json(const MorphologyGraph& g, MorphFeatureSet feature_set);
MorphologyGraph morph_graph_from_json(const std::string& text);
void save_morph_graph(const std::string& path, const MorphologyGraph& g,
                      MorphFeatureSet feature_set);
MorphologyGraph load_morph_graph(const std::string& path);

}  // namespace mg
