#pragma once

#include <cstdint>
#include <vector>

#include "morphgrasp/ik.hpp"
#include "morphgrasp/rng.hpp"
#include "morphgrasp/urdf.hpp"

namespace mgtest {

// Two opposed two-segment fingers on a floating base; no meshes needed.
inline const char* kPincerUrdf = R"(<?xml version="1.0"?>
<robot name="pincer">
  <link name="base"/>
  <link name="a0"/><link name="a1"/>
  <link name="b0"/><link name="b1"/>
  <joint name="ja0" type="revolute">
    <parent link="base"/><child link="a0"/>
    <origin xyz="0.02 0 0.01" rpy="0 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="-1.2" upper="1.2"/>
  </joint>
  <joint name="ja1" type="revolute">
    <parent link="a0"/><child link="a1"/>
    <origin xyz="0.04 0 0" rpy="0 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="-1.4" upper="1.4"/>
  </joint>
  <joint name="jb0" type="revolute">
    <parent link="base"/><child link="b0"/>
    <origin xyz="-0.02 0 0.01" rpy="0 0 3.141592653589793"/>
    <axis xyz="0 1 0"/>
    <limit lower="-1.2" upper="1.2"/>
  </joint>
  <joint name="jb1" type="revolute">
    <parent link="b0"/><child link="b1"/>
    <origin xyz="0.04 0 0" rpy="0 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="-1.4" upper="1.4"/>
  </joint>
</robot>
)";

inline std::vector<mg::KeypointLocal> pincer_keypoints() {
    return {
        {"a0", {0.03, 0.005, 0.0}},  {"a1", {0.035, 0.0, 0.004}},
        {"b0", {0.03, -0.005, 0.0}}, {"b1", {0.035, 0.0, 0.004}},
        {"base", {0.0, 0.01, -0.005}},
    };
}

inline mg::GraspPose pincer_gt_pose() {
    mg::GraspPose p;
    p.translation = {0.03, -0.02, 0.05};
    p.rotation = mg::Quat::from_axis_angle({0.3, -0.2, 0.45});
    p.joint_angles = {0.4, 0.6, -0.3, 0.5};
    return p;
}

// Shift within 0.01 m, tilt within ~0.1 rad, joints within 0.1 rad of `gt`.
inline mg::GraspPose perturbed(const mg::GraspPose& gt, std::uint64_t seed) {
    mg::Rng rng(seed);
    mg::GraspPose p = gt;
    p.translation += mg::Vec3{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01),
                              rng.uniform(-0.01, 0.01)};
    mg::Vec3 w{rng.uniform(-0.06, 0.06), rng.uniform(-0.06, 0.06), rng.uniform(-0.06, 0.06)};
    p.rotation = mg::Quat::from_axis_angle(w) * gt.rotation;
    for (double& q : p.joint_angles) q += rng.uniform(-0.1, 0.1);
    return p;
}

}  // namespace mgtest
