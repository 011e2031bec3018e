#include "morphgrasp/ik.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "morphgrasp/errors.hpp"

namespace mg {

namespace {

struct Limits {
    std::vector<double> lo, hi;
};

Limits joint_limits(const KinematicTree& tree) {
    Limits lim;
    for (const std::string& name : tree.revolute_joint_names())
        for (const JointSpec& j : tree.joints)
            if (j.name == name) {
                lim.lo.push_back(j.limit_lower);
                lim.hi.push_back(j.limit_upper);
            }
    return lim;
}

void clamp_joints(std::vector<double>& q, const Limits& lim) {
    for (std::size_t i = 0; i < q.size(); ++i)
        q[i] = std::clamp(q[i], lim.lo[i], lim.hi[i]);
}

// Optimization state: translation, rotation matrix, joint angles.
struct PoseState {
    Vec3 t;
    Mat3 r;
    std::vector<double> q;
};

PoseState apply_step(const PoseState& x, const Eigen::VectorXd& delta, const Limits& lim) {
    PoseState out = x;
    out.t = x.t + Vec3{delta[0], delta[1], delta[2]};
    Vec3 w{delta[3], delta[4], delta[5]};
    double angle = w.norm();
    if (angle > 0.0) out.r = rotation_axis_angle(w, angle) * x.r;
    for (std::size_t i = 0; i < out.q.size(); ++i) out.q[i] += delta[6 + static_cast<int>(i)];
    clamp_joints(out.q, lim);
    return out;
}

}  // namespace

std::vector<Vec3> keypoint_positions(const KinematicTree& tree,
                                     const std::vector<KeypointLocal>& keypoints,
                                     const GraspPose& pose) {
    std::vector<std::string> names = tree.revolute_joint_names();
    if (pose.joint_angles.size() != names.size())
        throw MissingJointAngle("pose carries " + std::to_string(pose.joint_angles.size()) +
                                " joint angles, tree has " + std::to_string(names.size()));
    JointConfig cfg;
    for (std::size_t i = 0; i < names.size(); ++i) cfg[names[i]] = pose.joint_angles[i];
    Transform root{pose.rotation.normalized().to_matrix(), pose.translation};
    auto fk = forward_kinematics(tree, root, cfg);
    std::vector<Vec3> out;
    out.reserve(keypoints.size());
    for (const KeypointLocal& kp : keypoints) {
        auto it = fk.find(kp.link);
        if (it == fk.end()) throw UnknownLink("keypoint on unknown link " + kp.link);
        out.push_back(it->second.apply(kp.local));
    }
    return out;
}

namespace {

std::vector<Vec3> state_positions(const KinematicTree& tree,
                                  const std::vector<KeypointLocal>& keypoints,
                                  const PoseState& x) {
    std::vector<std::string> names = tree.revolute_joint_names();
    JointConfig cfg;
    for (std::size_t i = 0; i < names.size(); ++i) cfg[names[i]] = x.q[i];
    auto fk = forward_kinematics(tree, Transform{x.r, x.t}, cfg);
    std::vector<Vec3> out;
    out.reserve(keypoints.size());
    for (const KeypointLocal& kp : keypoints) {
        auto it = fk.find(kp.link);
        if (it == fk.end()) throw UnknownLink("keypoint on unknown link " + kp.link);
        out.push_back(it->second.apply(kp.local));
    }
    return out;
}

Eigen::VectorXd residual_of(const KinematicTree& tree, const std::vector<KeypointLocal>& keypoints,
                            const std::vector<Vec3>& targets, const PoseState& x) {
    std::vector<Vec3> pos = state_positions(tree, keypoints, x);
    Eigen::VectorXd r(3 * static_cast<int>(pos.size()));
    for (std::size_t i = 0; i < pos.size(); ++i) {
        Vec3 d = pos[i] - targets[i];
        r[3 * static_cast<int>(i) + 0] = d.x;
        r[3 * static_cast<int>(i) + 1] = d.y;
        r[3 * static_cast<int>(i) + 2] = d.z;
    }
    return r;
}

// Probes ignore joint limits; steps are clamped only once accepted.
PoseState perturb(const PoseState& x, int param, double h) {
    PoseState out = x;
    if (param < 3) {
        Vec3 t = x.t;
        (param == 0 ? t.x : param == 1 ? t.y : t.z) += h;
        out.t = t;
    } else if (param < 6) {
        Vec3 axis{param == 3 ? 1.0 : 0.0, param == 4 ? 1.0 : 0.0, param == 5 ? 1.0 : 0.0};
        out.r = rotation_axis_angle(axis, h) * x.r;
    } else {
        out.q[static_cast<std::size_t>(param - 6)] += h;
    }
    return out;
}

}  // namespace

IkResult ik_fit(const KinematicTree& tree, const std::vector<KeypointLocal>& keypoints,
                const std::vector<Vec3>& targets, const GraspPose& init,
                const IkParams& params) {
    if (keypoints.empty() || keypoints.size() != targets.size())
        throw ShapeMismatch("ik_fit needs one target per keypoint");
    for (const Vec3& t : targets)
        if (!std::isfinite(t.x) || !std::isfinite(t.y) || !std::isfinite(t.z))
            throw DivergedNaN("ik_fit target is not finite");

    int dof = tree.dof();
    if (static_cast<int>(init.joint_angles.size()) != dof)
        throw MissingJointAngle("ik_fit init carries " +
                                std::to_string(init.joint_angles.size()) + " angles, tree has " +
                                std::to_string(dof));
    Limits lim = joint_limits(tree);

    PoseState x{init.translation, init.rotation.normalized().to_matrix(), init.joint_angles};
    clamp_joints(x.q, lim);

    int n_params = 6 + dof;
    Eigen::VectorXd r = residual_of(tree, keypoints, targets, x);
    double cost = r.squaredNorm();
    if (!std::isfinite(cost)) throw DivergedNaN("ik_fit initial residual is not finite");

    double lambda = params.lambda0;
    int iter = 0;
    bool converged = false;
    for (; iter < params.max_iterations; ++iter) {
        Eigen::MatrixXd jac(r.size(), n_params);
        for (int p = 0; p < n_params; ++p) {
            Eigen::VectorXd rp = residual_of(tree, keypoints, targets, perturb(x, p, params.fd_step));
            Eigen::VectorXd rm =
                residual_of(tree, keypoints, targets, perturb(x, p, -params.fd_step));
            jac.col(p) = (rp - rm) / (2.0 * params.fd_step);
        }

        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd jtr = jac.transpose() * r;

        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            for (int d = 0; d < n_params; ++d) damped(d, d) += lambda * lambda;
            Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            PoseState cand = apply_step(x, delta, lim);
            Eigen::VectorXd rc = residual_of(tree, keypoints, targets, cand);
            double cand_cost = rc.squaredNorm();
            if (!std::isfinite(cand_cost)) throw DivergedNaN("ik_fit produced a non-finite cost");
            if (cand_cost < cost) {
                x = cand;
                r = rc;
                cost = cand_cost;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (delta.norm() < params.step_tolerance) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted || converged) {
            if (!accepted) converged = true;  // no improving direction left
            ++iter;
            break;
        }
    }

    IkResult out;
    out.pose.translation = x.t;
    Quat q = Quat::from_matrix(x.r).normalized();
    if (q.w < 0) {
        q.w = -q.w;
        q.x = -q.x;
        q.y = -q.y;
        q.z = -q.z;
    }
    out.pose.rotation = q;
    out.pose.joint_angles = x.q;
    out.rms = std::sqrt(cost / static_cast<double>(keypoints.size()));
    out.iterations = iter;
    out.converged = converged;
    return out;
}

}  // namespace mg
