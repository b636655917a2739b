// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/skinning.hpp"

#include <Eigen/SVD>
#include <limits>

namespace meshsplat {

BlendedTransform blend(const SkinWeights& w, const PosedSkeleton& skel) {
    BlendedTransform out;
    for (int k = 0; k < kMaxInfluences; ++k) {
        const auto j = w.joint[k];
        if (j < 0) continue;
        const double wk = w.weight[k];
        out.linear += wk * skel.skinning[std::size_t(j)].rotation;
        out.offset += wk * skel.skinning[std::size_t(j)].translation;
    }
    return out;
}

std::vector<Vec3> lbs_forward(std::span<const Vec3> canonical, std::span<const SkinWeights> weights,
                              const PosedSkeleton& skel) {
    if (canonical.size() != weights.size()) throw DimensionError("point and weight counts differ");
    std::vector<Vec3> out(canonical.size());
    parallel_for(canonical.size(), 2048, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const BlendedTransform a = blend(weights[i], skel);
            out[i] = a.linear * canonical[i] + a.offset;
        }
    });
    return out;
}

std::vector<Vec3> lbs_forward(const RiggedTemplate& tpl, const PosedSkeleton& skel,
                              std::span<const Vec3> delta) {
    const std::size_t nv = tpl.vertices.size();
    if (!delta.empty() && delta.size() != nv) {
        throw DimensionError("delta has " + std::to_string(delta.size()) + " rows, template has " +
                             std::to_string(nv) + " vertices");
    }
    std::vector<Vec3> canonical(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        canonical[i] = tpl.vertices[i].cast<double>();
        if (!delta.empty()) canonical[i] += delta[i];
    }
    return lbs_forward(canonical, tpl.skin, skel);
}

std::vector<Vec3> lbs_backward(const RiggedTemplate& tpl, const PosedSkeleton& skel,
                               std::span<const Vec3> grad_posed) {
    if (grad_posed.size() != tpl.vertices.size()) throw DimensionError("gradient count != vertex count");
    std::vector<Vec3> out(grad_posed.size());
    for (std::size_t i = 0; i < grad_posed.size(); ++i) {
        out[i] = blend(tpl.skin[i], skel).linear.transpose() * grad_posed[i];
    }
    return out;
}

InverseSkinResult lbs_inverse(const PosedSkeleton& skel, std::span<const Vec3> posed,
                              std::span<const SkinWeights> weights, double max_condition) {
    if (posed.size() != weights.size()) throw DimensionError("point and weight counts differ");
    InverseSkinResult res;
    res.points.resize(posed.size());
    res.singular.assign(posed.size(), 0);
    res.condition.resize(posed.size());
    for (std::size_t i = 0; i < posed.size(); ++i) {
        const BlendedTransform a = blend(weights[i], skel);
        Eigen::JacobiSVD<Mat3> svd(a.linear, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vec3 sv = svd.singularValues();
        const double cond = sv[2] > 0.0 ? sv[0] / sv[2] : std::numeric_limits<double>::infinity();
        res.condition[i] = cond;
        if (!(cond <= max_condition)) {
            res.singular[i] = 1;
            // Least-squares estimate on the well-conditioned subspace.
            Vec3 inv_sv = Vec3::Zero();
            for (int k = 0; k < 3; ++k) {
                if (sv[k] > sv[0] / max_condition) inv_sv[k] = 1.0 / sv[k];
            }
            res.points[i] = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose() *
                            (posed[i] - a.offset);
        } else {
            res.points[i] = a.linear.partialPivLu().solve(posed[i] - a.offset);
        }
    }
    return res;
}

InverseSkinResult lbs_inverse(const RiggedTemplate& tpl, const PosedSkeleton& skel,
                              std::span<const Vec3> posed, double max_condition) {
    return lbs_inverse(skel, posed, tpl.skin, max_condition);
}

}  // namespace meshsplat
