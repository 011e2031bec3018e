#include "morphgrasp/urdf.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "morphgrasp/errors.hpp"

namespace mg {

namespace pt = boost::property_tree;

int KinematicTree::link_index(const std::string& name) const {
    for (std::size_t i = 0; i < links.size(); ++i)
        if (links[i].name == name) return static_cast<int>(i);
    return -1;
}

const LinkSpec& KinematicTree::link(const std::string& name) const {
    int i = link_index(name);
    if (i < 0) throw UnknownLinkReference("no link named '" + name + "'");
    return links[i];
}

const JointSpec* KinematicTree::parent_joint(const std::string& child_link) const {
    for (const JointSpec& j : joints)
        if (j.child_link == child_link) return &j;
    return nullptr;
}

std::vector<std::string> KinematicTree::revolute_joint_names() const {
    std::vector<std::string> out;
    for (const JointSpec& j : joints)
        if (j.kind == JointKind::revolute) out.push_back(j.name);
    return out;
}

int KinematicTree::dof() const { return static_cast<int>(revolute_joint_names().size()); }

namespace {

Vec3 parse_vec3(const std::string& text, const std::string& where) {
    std::istringstream ss(text);
    Vec3 v;
    if (!(ss >> v.x >> v.y >> v.z))
        throw MalformedXml("cannot parse 3-vector '" + text + "' in " + where);
    std::string rest;
    if (ss >> rest) throw MalformedXml("trailing content in 3-vector '" + text + "' in " + where);
    return v;
}

Vec3 attr_vec3(const pt::ptree& node, const std::string& path, Vec3 fallback,
               const std::string& where) {
    auto s = node.get_optional<std::string>(path);
    if (!s) return fallback;
    return parse_vec3(*s, where);
}

LinkSpec parse_link(const pt::ptree& node) {
    LinkSpec link;
    auto name = node.get_optional<std::string>("<xmlattr>.name");
    if (!name || name->empty()) throw MalformedXml("link without a name attribute");
    link.name = *name;
    // Prefer visual geometry; fall back to collision when no visual exists.
    for (const char* section : {"visual", "collision"}) {
        auto sec = node.get_child_optional(section);
        if (!sec) continue;
        auto mesh = sec->get_optional<std::string>("geometry.mesh.<xmlattr>.filename");
        if (mesh) link.mesh_ref = *mesh;
        Vec3 xyz = attr_vec3(*sec, "origin.<xmlattr>.xyz", {0, 0, 0}, "link " + link.name);
        Vec3 rpy = attr_vec3(*sec, "origin.<xmlattr>.rpy", {0, 0, 0}, "link " + link.name);
        link.visual_origin = Transform{rotation_rpy(rpy.x, rpy.y, rpy.z), xyz};
        break;
    }
    return link;
}

JointSpec parse_joint(const pt::ptree& node, int order) {
    JointSpec j;
    j.chain_order = order;
    auto name = node.get_optional<std::string>("<xmlattr>.name");
    if (!name || name->empty()) throw MalformedXml("joint without a name attribute");
    j.name = *name;
    auto type = node.get_optional<std::string>("<xmlattr>.type");
    if (!type) throw MalformedXml("joint '" + j.name + "' missing type attribute");
    if (*type == "revolute")
        j.kind = JointKind::revolute;
    else if (*type == "fixed")
        j.kind = JointKind::fixed;
    else
        throw UnsupportedJointKind("joint '" + j.name + "' has unsupported type '" + *type + "'");

    auto parent = node.get_optional<std::string>("parent.<xmlattr>.link");
    auto child = node.get_optional<std::string>("child.<xmlattr>.link");
    if (!parent || !child)
        throw MalformedXml("joint '" + j.name + "' missing parent or child element");
    j.parent_link = *parent;
    j.child_link = *child;

    j.origin_xyz = attr_vec3(node, "origin.<xmlattr>.xyz", {0, 0, 0}, "joint " + j.name);
    j.origin_rpy = attr_vec3(node, "origin.<xmlattr>.rpy", {0, 0, 0}, "joint " + j.name);

    if (j.kind == JointKind::revolute) {
        j.axis = attr_vec3(node, "axis.<xmlattr>.xyz", {1, 0, 0}, "joint " + j.name);
        double n = j.axis.norm();
        if (n < 1e-12)
            throw MalformedXml("revolute joint '" + j.name + "' has a zero axis");
        j.axis = j.axis * (1.0 / n);
        auto limit = node.get_child_optional("limit");
        if (!limit)
            throw MalformedXml("revolute joint '" + j.name + "' missing limit element");
        j.limit_lower = limit->get<double>("<xmlattr>.lower", 0.0);
        j.limit_upper = limit->get<double>("<xmlattr>.upper", 0.0);
        if (j.limit_lower > j.limit_upper)
            throw MalformedXml("joint '" + j.name + "' limits out of order");
    }
    return j;
}

}  // namespace

KinematicTree parse_urdf(const std::string& xml_text) {
    pt::ptree doc;
    try {
        std::istringstream ss(xml_text);
        pt::read_xml(ss, doc);
    } catch (const pt::xml_parser_error& e) {
        throw MalformedXml(std::string("XML parse failure: ") + e.what());
    }
    auto robot = doc.get_child_optional("robot");
    if (!robot) throw MalformedXml("no <robot> element");

    KinematicTree tree;
    int order = 0;
    for (const auto& [tag, node] : *robot) {
        if (tag == "link")
            tree.links.push_back(parse_link(node));
        else if (tag == "joint")
            tree.joints.push_back(parse_joint(node, order++));
    }
    if (tree.links.empty()) throw MalformedXml("URDF declares no links");

    std::set<std::string> names;
    for (const LinkSpec& l : tree.links)
        if (!names.insert(l.name).second)
            throw MalformedXml("duplicate link name '" + l.name + "'");

    std::set<std::string> children;
    for (const JointSpec& j : tree.joints) {
        if (!names.count(j.parent_link))
            throw UnknownLinkReference("joint '" + j.name + "' parent '" + j.parent_link +
                                       "' is not a declared link");
        if (!names.count(j.child_link))
            throw UnknownLinkReference("joint '" + j.name + "' child '" + j.child_link +
                                       "' is not a declared link");
        if (j.parent_link == j.child_link)
            throw CycleDetected("joint '" + j.name + "' connects link '" + j.parent_link +
                                "' to itself");
        if (!children.insert(j.child_link).second)
            throw CycleDetected("link '" + j.child_link + "' has multiple parent joints");
    }

    std::vector<std::string> roots;
    for (const LinkSpec& l : tree.links)
        if (!children.count(l.name)) roots.push_back(l.name);
    if (roots.size() != 1)
        throw CycleDetected("joints do not form a single tree (" + std::to_string(roots.size()) +
                            " root links)");
    tree.root_link = roots[0];

    // Everything must be reachable from the root, otherwise a cycle is hiding
    // in the unreachable part.
    std::set<std::string> reached{tree.root_link};
    bool grew = true;
    while (grew) {
        grew = false;
        for (const JointSpec& j : tree.joints)
            if (reached.count(j.parent_link) && reached.insert(j.child_link).second) grew = true;
    }
    if (reached.size() != tree.links.size())
        throw CycleDetected("kinematic graph contains a cycle or disconnected component");
    return tree;
}

KinematicTree load_urdf(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MalformedXml("cannot open URDF file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_urdf(ss.str());
}

JointConfig rest_pose(const KinematicTree& tree) {
    JointConfig cfg;
    for (const JointSpec& j : tree.joints)
        if (j.kind == JointKind::revolute)
            cfg[j.name] = 0.5 * (j.limit_lower + j.limit_upper);
    return cfg;
}

std::map<std::string, Transform> forward_kinematics(const KinematicTree& tree,
                                                    const Transform& root_transform,
                                                    const JointConfig& config) {
    std::map<std::string, Transform> out;
    out[tree.root_link] = root_transform;
    // children appear after parents under repeated sweeps; the tree invariant
    // bounds the sweep count by the tree depth
    std::size_t placed = 1;
    while (placed < tree.links.size()) {
        std::size_t before = placed;
        for (const JointSpec& j : tree.joints) {
            auto pit = out.find(j.parent_link);
            if (pit == out.end() || out.count(j.child_link)) continue;
            Transform origin{rotation_rpy(j.origin_rpy.x, j.origin_rpy.y, j.origin_rpy.z),
                             j.origin_xyz};
            Transform local = origin;
            if (j.kind == JointKind::revolute) {
                auto ait = config.find(j.name);
                if (ait == config.end())
                    throw MissingJointAngle("no angle for revolute joint '" + j.name + "'");
                local = origin.compose(
                    Transform{rotation_axis_angle(j.axis, ait->second), Vec3{0, 0, 0}});
            }
            out[j.child_link] = pit->second.compose(local);
            ++placed;
        }
        if (placed == before) break;  // unreachable links; parse_urdf prevents this
    }
    return out;
}

}  // namespace mg
