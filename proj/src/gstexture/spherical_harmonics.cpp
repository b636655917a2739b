// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/gstexture.hpp"

namespace meshsplat {

namespace {
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                           0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                           -0.4570457994644658, 1.445305721320277, -0.5900435899266435};
}  // namespace

void sh_basis(std::uint32_t degree, const Vec3& dir, double* out) {
    if (degree > 3) throw Error(ErrorCode::invalid_argument, "sh degree must be in [0,3]");
    const double x = dir[0], y = dir[1], z = dir[2];
    out[0] = kC0;
    if (degree < 1) return;
    out[1] = -kC1 * y;
    out[2] = kC1 * z;
    out[3] = -kC1 * x;
    if (degree < 2) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = kC2[0] * x * y;
    out[5] = kC2[1] * y * z;
    out[6] = kC2[2] * (2.0 * zz - xx - yy);
    out[7] = kC2[3] * x * z;
    out[8] = kC2[4] * (xx - yy);
    if (degree < 3) return;
    out[9] = kC3[0] * y * (3.0 * xx - yy);
    out[10] = kC3[1] * x * y * z;
    out[11] = kC3[2] * y * (4.0 * zz - xx - yy);
    out[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = kC3[4] * x * (4.0 * zz - xx - yy);
    out[14] = kC3[5] * z * (xx - yy);
    out[15] = kC3[6] * x * (xx - 3.0 * yy);
}

Vec3 sh_eval_raw(std::uint32_t degree, const float* coeffs, const Vec3& dir) {
    double basis[16];
    sh_basis(degree, dir, basis);
    Vec3 c = Vec3::Zero();
    const std::size_t n = sh_basis_count(degree);
    for (std::size_t k = 0; k < n; ++k) {
        c[0] += basis[k] * coeffs[k * 3];
        c[1] += basis[k] * coeffs[k * 3 + 1];
        c[2] += basis[k] * coeffs[k * 3 + 2];
    }
    return c;
}

Vec3 sh_eval(std::uint32_t degree, const float* coeffs, const Vec3& dir) {
    return sh_eval_raw(degree, coeffs, dir) + Vec3::Constant(0.5);
}

Vec3 sh_dc_from_color(const Vec3& rgb) { return (rgb - Vec3::Constant(0.5)) / kC0; }

}  // namespace meshsplat
