// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/deform.hpp"

namespace meshsplat {

std::vector<Vec3> blend_shape_apply(std::span<const float> shapes, std::size_t gaussians, const VecX& coeffs) {
    const std::size_t n = std::size_t(coeffs.size());
    if (shapes.size() != gaussians * 3 * n) throw DimensionError("blend shape matrix size mismatch");
    std::vector<Vec3> out(gaussians);
    for (std::size_t g = 0; g < gaussians; ++g) {
        const float* m = shapes.data() + g * 3 * n;
        Vec3 d = Vec3::Zero();
        for (int r = 0; r < 3; ++r)
            for (std::size_t k = 0; k < n; ++k) d[r] += double(m[r * n + k]) * coeffs[Eigen::Index(k)];
        out[g] = d;
    }
    return out;
}

VecX blend_shape_backward(std::span<const float> shapes, const VecX& coeffs, std::span<const Vec3> grad,
                          std::span<double> grad_shapes) {
    const std::size_t n = std::size_t(coeffs.size());
    if (shapes.size() != grad.size() * 3 * n || grad_shapes.size() != shapes.size()) {
        throw DimensionError("blend shape gradient size mismatch");
    }
    VecX d_coeffs = VecX::Zero(Eigen::Index(n));
    for (std::size_t g = 0; g < grad.size(); ++g) {
        const float* m = shapes.data() + g * 3 * n;
        double* dm = grad_shapes.data() + g * 3 * n;
        for (int r = 0; r < 3; ++r) {
            const double gr = grad[g][r];
            if (gr == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) {
                dm[r * n + k] += gr * coeffs[Eigen::Index(k)];
                d_coeffs[Eigen::Index(k)] += gr * double(m[r * n + k]);
            }
        }
    }
    return d_coeffs;
}

}  // namespace meshsplat
