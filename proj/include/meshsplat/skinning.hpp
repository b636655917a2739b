// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Forward kinematics, linear blend skinning (forward and inverse), skin
// weight transfer and the clothed-template builder.
#pragma once

#include "meshsplat/assets.hpp"

#include <span>
#include <vector>

namespace meshsplat {

struct PosedSkeleton {
    std::vector<RigidTransform> world;     // joint frames in world space
    std::vector<RigidTransform> skinning;  // world * rest^-1, canonical -> posed
};

/// Root: world = frame.root * rest_root. Child j: world = world_parent *
/// (rest_parent^-1 * rest_j) * rot(theta_j). Hence skinning[root] == frame.root.
PosedSkeleton pose_skeleton(const RiggedTemplate& tpl, const FrameInput& frame);
PosedSkeleton pose_skeleton(std::span<const Joint> joints, std::span<const float> theta,
                            const RigidTransform& root);

/// Blended affine map sum_j w_j * skinning_j.
struct BlendedTransform {
    Mat3 linear = Mat3::Zero();
    Vec3 offset = Vec3::Zero();
};
BlendedTransform blend(const SkinWeights& w, const PosedSkeleton& skel);

/// v_i = sum_j w_ij T_j (vbar_i + delta_i). `delta` may be empty.
std::vector<Vec3> lbs_forward(const RiggedTemplate& tpl, const PosedSkeleton& skel,
                              std::span<const Vec3> delta = {});
std::vector<Vec3> lbs_forward(std::span<const Vec3> canonical, std::span<const SkinWeights> weights,
                              const PosedSkeleton& skel);

/// Pulls posed-space gradients back to canonical offsets: g_i -> A_i^T g_i.
std::vector<Vec3> lbs_backward(const RiggedTemplate& tpl, const PosedSkeleton& skel,
                               std::span<const Vec3> grad_posed);

struct InverseSkinResult {
    std::vector<Vec3> points;
    std::vector<std::uint8_t> singular;  // 1 where cond(A) > max_condition
    std::vector<double> condition;
};

InverseSkinResult lbs_inverse(const PosedSkeleton& skel, std::span<const Vec3> posed,
                              std::span<const SkinWeights> weights, double max_condition = 1e6);
InverseSkinResult lbs_inverse(const RiggedTemplate& tpl, const PosedSkeleton& skel,
                              std::span<const Vec3> posed, double max_condition = 1e6);

struct ClosestHit {
    std::uint32_t face = 0;
    Vec3 point = Vec3::Zero();
    Vec3 barycentric = Vec3::Zero();  // weights of the face's three corners
    double distance = 0.0;
};

/// Bounding-volume hierarchy over triangles for closest-point queries.
class TriangleBvh {
public:
    TriangleBvh(std::span<const Vec3> vertices, std::span<const Face> faces);
    ClosestHit closest(const Vec3& query) const;

private:
    struct Node {
        Vec3 lo, hi;
        std::uint32_t first = 0, count = 0;  // leaf range into order_
        std::uint32_t left = 0, right = 0;   // children when count == 0
    };
    std::uint32_t build(std::uint32_t first, std::uint32_t count);

    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

/// Closest point on triangle (a, b, c); barycentric weights per corner.
ClosestHit closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct TransferOptions {
    double max_distance = 0.05;  // m
    int smoothing_passes = 1;
    double smoothing_strength = 0.5;
};

/// Garment vertex farther than the distance band from the body surface.
class TransferBandError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Closest-triangle barycentric transfer followed by Laplacian smoothing over
/// the garment edge graph. `body_vertices` must be in the garment's pose.
std::vector<SkinWeights> transfer_skin_weights(std::span<const Vec3> body_vertices,
                                               std::span<const Face> body_faces,
                                               std::span<const SkinWeights> body_weights,
                                               const TriangleMesh& garment,
                                               const TransferOptions& options = {});
std::vector<SkinWeights> transfer_skin_weights(const RiggedTemplate& body, const TriangleMesh& garment,
                                               const TransferOptions& options = {});

struct ClothingComponent {
    TriangleMesh mesh;  // in the reference pose
    ComponentLabel label = ComponentLabel::cloth;
    Vec3f color = Vec3f(0.2f, 0.3f, 0.8f);
};

/// Transfers weights in the reference pose, inverse-skins each component back
/// to the canonical pose and appends it to the body template.
RiggedTemplate build_clothed_template(const RiggedTemplate& body,
                                      const std::vector<ClothingComponent>& components,
                                      const FrameInput& ref_frame, const TransferOptions& options = {});

}  // namespace meshsplat
