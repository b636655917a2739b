// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/gstexture.hpp"

namespace meshsplat {

TriangleFrame triangle_frame(const Vec3& v1, const Vec3& v2, const Vec3& v3, const Vec2& uv,
                             std::size_t face_index) {
    const Vec3 cross = (v2 - v1).cross(v3 - v1);
    const double area = 0.5 * cross.norm();
    if (!(area > 1e-12)) {
        throw ValidationError("triangle " + std::to_string(face_index) + " is degenerate (area " +
                                  std::to_string(area) + " m^2)",
                              {face_index});
    }
    const Vec3 n = cross.normalized();
    const Vec3 q = (0.5 * (v2 + v3) - v1).normalized();
    if (std::abs(n.dot(q)) > 0.99) {
        throw ValidationError("triangle " + std::to_string(face_index) + " has a median parallel to its normal",
                              {face_index});
    }
    return triangle_frame_unchecked<double>(v1, v2, v3, uv[0], uv[1]);
}

}  // namespace meshsplat
