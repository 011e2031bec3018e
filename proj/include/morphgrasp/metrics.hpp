#pragma once

#include <vector>

#include "morphgrasp/ik.hpp"

namespace mg {

struct DiversityReport {
    std::vector<double> per_joint;  // population standard deviation of each joint angle
    double mean = 0.0;              // average across joints
};

// Population (not sample) standard deviation of joint angles across grasps of
// one gripper. Order of the grasp list does not matter.
DiversityReport diversity_metric(const std::vector<GraspPose>& grasps);

}  // namespace mg
