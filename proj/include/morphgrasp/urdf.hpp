#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morphgrasp/geom.hpp"

namespace mg {

enum class JointKind { revolute, fixed };

struct JointSpec {
    std::string name;
    JointKind kind = JointKind::fixed;
    std::string parent_link;
    std::string child_link;
    Vec3 origin_xyz{0, 0, 0};
    Vec3 origin_rpy{0, 0, 0};
    Vec3 axis{1, 0, 0};       // unit length, revolute only
    double limit_lower = 0.0;  // revolute only
    double limit_upper = 0.0;
    int chain_order = 0;  // position in document order
};

struct LinkSpec {
    std::string name;
    std::optional<std::string> mesh_ref;
    Transform visual_origin;  // mesh placement within the link frame
};

// Angles for revolute joints, keyed by joint name.
using JointConfig = std::map<std::string, double>;

struct KinematicTree {
    std::vector<LinkSpec> links;    // document order
    std::vector<JointSpec> joints;  // document order
    std::string root_link;

    int link_index(const std::string& name) const;  // -1 when absent
    const LinkSpec& link(const std::string& name) const;
    const JointSpec* parent_joint(const std::string& child_link) const;
    std::vector<std::string> revolute_joint_names() const;  // document order
    int dof() const;
};

// Parses URDF text. Only revolute and fixed joints are accepted; the joint set
// must form a single tree over declared links.
KinematicTree parse_urdf(const std::string& xml_text);
KinematicTree load_urdf(const std::string& path);

// Every revolute joint at the midpoint of its limits.
JointConfig rest_pose(const KinematicTree& tree);

// World transform per link: child = parent * joint_origin * rotation(axis, angle).
std::map<std::string, Transform> forward_kinematics(const KinematicTree& tree,
                                                    const Transform& root_transform,
                                                    const JointConfig& config);

}  // namespace mg
