#include "morphgrasp/metrics.hpp"

#include <cmath>

#include "morphgrasp/errors.hpp"

namespace mg {

DiversityReport diversity_metric(const std::vector<GraspPose>& grasps) {
    if (grasps.size() < 2)
        throw TooFewGrasps("diversity needs at least 2 grasps, got " +
                           std::to_string(grasps.size()));
    std::size_t dof = grasps.front().joint_angles.size();
    for (const GraspPose& g : grasps)
        if (g.joint_angles.size() != dof)
            throw ShapeMismatch("grasps disagree on joint count: " + std::to_string(dof) +
                                " vs " + std::to_string(g.joint_angles.size()));

    DiversityReport rep;
    double n = static_cast<double>(grasps.size());
    for (std::size_t j = 0; j < dof; ++j) {
        double mean = 0.0;
        for (const GraspPose& g : grasps) mean += g.joint_angles[j];
        mean /= n;
        double var = 0.0;
        for (const GraspPose& g : grasps) {
            double d = g.joint_angles[j] - mean;
            var += d * d;
        }
        rep.per_joint.push_back(std::sqrt(var / n));
    }
    if (!rep.per_joint.empty()) {
        for (double s : rep.per_joint) rep.mean += s;
        rep.mean /= static_cast<double>(rep.per_joint.size());
    }
    return rep;
}

}  // namespace mg
