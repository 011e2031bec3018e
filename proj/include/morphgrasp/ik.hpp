#pragma once

#include <string>
#include <vector>

#include "morphgrasp/urdf.hpp"

namespace mg {

// Root pose plus revolute joint angles (document order of the tree's revolute
// joints). The rotation quaternion is kept unit-norm with w >= 0.
struct GraspPose {
    Vec3 translation{0, 0, 0};
    Quat rotation;
    std::vector<double> joint_angles;
};

// A point riding on a link: `local` is expressed in the link frame, so forward
// kinematics moves it rigidly with the link.
struct KeypointLocal {
    std::string link;
    Vec3 local;
};

struct IkParams {
    double lambda0 = 1e-3;        // initial damping
    int max_iterations = 500;
    double step_tolerance = 1e-8; // accepted-step norm that counts as converged
    double fd_step = 1e-6;        // Jacobian finite-difference step
};

struct IkResult {
    GraspPose pose;
    double rms = 0.0;        // root-mean-square keypoint-to-target distance
    int iterations = 0;
    bool converged = false;
};

// World positions of the keypoints at a pose.
std::vector<Vec3> keypoint_positions(const KinematicTree& tree,
                                     const std::vector<KeypointLocal>& keypoints,
                                     const GraspPose& pose);

// Damped least-squares fit of root translation, root rotation (axis-angle
// increments), and joint angles so the keypoints reach `targets`. Joint angles
// are clamped to their limits after every accepted step; cost over accepted
// iterations is monotone non-increasing. Damping grows tenfold on rejection
// and shrinks on acceptance.
IkResult ik_fit(const KinematicTree& tree, const std::vector<KeypointLocal>& keypoints,
                const std::vector<Vec3>& targets, const GraspPose& init,
                const IkParams& params = {});

}  // namespace mg
