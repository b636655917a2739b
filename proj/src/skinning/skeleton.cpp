// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/skinning.hpp"

namespace meshsplat {

PosedSkeleton pose_skeleton(std::span<const Joint> joints, std::span<const float> theta,
                            const RigidTransform& root) {
    if (joints.empty()) throw DimensionError("skeleton has no joints");
    if (theta.size() != 3 * (joints.size() - 1)) {
        throw DimensionError("theta has " + std::to_string(theta.size()) + " values, expected " +
                             std::to_string(3 * (joints.size() - 1)));
    }
    const std::size_t nj = joints.size();
    // Rotations are chained as quaternions so long chains stay orthonormal.
    std::vector<Quat> world_q(nj);
    std::vector<Vec3> world_t(nj);
    std::vector<Quat> rest_q(nj);
    std::vector<Vec3> rest_t(nj);
    for (std::size_t j = 0; j < nj; ++j) {
        rest_q[j] = quat_from_wxyz(joints[j].rest_rotation).normalized();
        rest_t[j] = joints[j].rest_translation.cast<double>();
    }

    const Quat root_q = Quat(root.rotation).normalized();
    world_q[0] = (root_q * rest_q[0]).normalized();
    world_t[0] = root.rotation * rest_t[0] + root.translation;
    for (std::size_t j = 1; j < nj; ++j) {
        const auto p = std::size_t(joints[j].parent);
        const Quat parent_inv = rest_q[p].conjugate();
        const Quat local_q = parent_inv * rest_q[j];
        const Vec3 local_t = parent_inv * (rest_t[j] - rest_t[p]);
        const Vec3 aa(theta[3 * (j - 1)], theta[3 * (j - 1) + 1], theta[3 * (j - 1) + 2]);
        const double angle = aa.norm();
        const Quat pose_q = angle < 1e-12 ? Quat::Identity() : Quat(Eigen::AngleAxisd(angle, aa / angle));
        world_q[j] = (world_q[p] * local_q * pose_q).normalized();
        world_t[j] = world_q[p] * local_t + world_t[p];
    }

    PosedSkeleton skel;
    skel.world.resize(nj);
    skel.skinning.resize(nj);
    for (std::size_t j = 0; j < nj; ++j) {
        skel.world[j] = {world_q[j].toRotationMatrix(), world_t[j]};
        const Quat skin_q = (world_q[j] * rest_q[j].conjugate()).normalized();
        skel.skinning[j] = {skin_q.toRotationMatrix(), world_t[j] - skin_q * rest_t[j]};
    }
    return skel;
}

PosedSkeleton pose_skeleton(const RiggedTemplate& tpl, const FrameInput& frame) {
    return pose_skeleton(tpl.joints, frame.theta, frame.root());
}

}  // namespace meshsplat
