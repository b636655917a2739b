// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Gaussians bound to mesh triangles: triangle frames, local -> world
// attribute transforms, spherical-harmonic color and texture initialization.
#pragma once

#include "meshsplat/assets.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace meshsplat {

/// Frame of a triangle at a barycentric point. Columns of R are
/// [n, q, n x q]; n is the unit normal, q points from v1 to the midpoint of v2 v3.
template <typename S>
struct TriangleFrameT {
    Eigen::Matrix<S, 3, 1> p;
    Eigen::Matrix<S, 3, 3> R;
    S e;
    Eigen::Matrix<S, 3, 1> n;
};
using TriangleFrame = TriangleFrameT<double>;

/// Unchecked frame evaluation. Generic in the scalar so the same code runs
/// under automatic differentiation.
template <typename S>
TriangleFrameT<S> triangle_frame_unchecked(const Eigen::Matrix<S, 3, 1>& v1, const Eigen::Matrix<S, 3, 1>& v2,
                                           const Eigen::Matrix<S, 3, 1>& v3, double u, double v) {
    using std::sqrt;
    using V = Eigen::Matrix<S, 3, 1>;
    TriangleFrameT<S> f;
    f.p = v1 * S(u) + v2 * S(v) + v3 * S(1.0 - u - v);
    V n = (v1 - v2).cross(v3 - v1);
    n /= sqrt(n.squaredNorm());
    V q = (v2 + v3) * S(0.5) - v1;
    q -= n * n.dot(q);  // exact in-plane component; removes rounding drift
    q /= sqrt(q.squaredNorm());
    f.n = n;
    f.R.col(0) = n;
    f.R.col(1) = q;
    f.R.col(2) = n.cross(q);
    f.e = (sqrt((v1 - v2).squaredNorm()) + sqrt((v2 - v3).squaredNorm()) + sqrt((v1 - v3).squaredNorm())) / S(3.0);
    return f;
}

/// Throws ValidationError naming `face_index` for triangles with area
/// <= 1e-12 m^2 or with |n . q| > 0.99 before re-orthogonalization.
TriangleFrame triangle_frame(const Vec3& v1, const Vec3& v2, const Vec3& v3, const Vec2& uv,
                             std::size_t face_index = 0);

/// Number of real SH basis functions for a degree.
constexpr std::size_t sh_basis_count(std::uint32_t degree) { return std::size_t(degree + 1) * (degree + 1); }

/// Real SH basis values (degree <= 3) at a unit direction, standard
/// splatting sign and ordering conventions.
void sh_basis(std::uint32_t degree, const Vec3& dir, double* out);

/// Color before the DC offset and clamp: sum_k basis_k * coeff_k per channel.
/// `coeffs` is coefficient-major (k * 3 + channel).
Vec3 sh_eval_raw(std::uint32_t degree, const float* coeffs, const Vec3& dir);

/// sh_eval_raw + 0.5 (unclamped).
Vec3 sh_eval(std::uint32_t degree, const float* coeffs, const Vec3& dir);

/// DC coefficient that reproduces `rgb` for a DC-only block.
Vec3 sh_dc_from_color(const Vec3& rgb);

/// World-space Gaussian ready for rasterization.
struct WorldGaussian {
    Vec3 mean = Vec3::Zero();
    Quat rotation = Quat::Identity();
    Vec3 scale = Vec3::Ones();
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();
    Vec3 semantic = Vec3::Zero();
    Vec3 normal = Vec3::UnitX();  // first column of the world rotation

    Mat3 covariance() const;
};

/// Local record of one Gaussian, decoded from a texture.
struct LocalGaussian {
    double gamma = 0.0;
    Quat rotation = Quat::Identity();
    Vec3 log_scale = Vec3::Zero();
    double opacity_logit = 0.0;
    std::uint32_t sh_degree = 0;
    const float* sh = nullptr;
};

LocalGaussian local_gaussian(const GaussianTexture& tex, std::size_t g);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// u_w = p + R (gamma e_x + delta_u), r_w = R r, s_w = e exp(log_s),
/// c_w = clamp(SH(sh, R^T d) + 0.5 + delta_c, 0, 1).
WorldGaussian local_to_world(const LocalGaussian& g, const TriangleFrame& frame, const Vec3& view_dir,
                             const Vec3& delta_u = Vec3::Zero(), const Vec3& delta_c = Vec3::Zero());

/// Where color is evaluated from.
struct ViewPoint {
    bool directional = false;   // orthographic: fixed direction
    Vec3 origin = Vec3::Zero();  // perspective: camera center
    Vec3 direction = Vec3::UnitZ();

    static ViewPoint from_camera(const Camera& cam);
    Vec3 toward(const Vec3& point) const;
};

/// Per-Gaussian optional residuals and labels for world_gaussians.
struct GaussianResiduals {
    std::span<const Vec3> delta_u;   // empty or one per Gaussian
    std::span<const Vec3> delta_c;   // empty or one per Gaussian
    std::span<const Vec3> semantic;  // empty or one per Gaussian
};

/// Transforms every Gaussian of `tex` onto the mesh given by `vertices`.
/// Frames are validated; a degenerate parent triangle raises an error.
std::vector<WorldGaussian> world_gaussians(std::span<const Vec3> vertices, std::span<const Face> faces,
                                           const GaussianTexture& tex, const ViewPoint& view,
                                           const GaussianResiduals& residuals = {});

/// Uniform per-triangle counts in [k_min, k_max], area-uniform barycentric
/// samples, gamma 0, identity rotation, scale (0.01, 1, 1), opacity 0.5,
/// mid-gray color.
GaussianTexture init_texture(const RiggedTemplate& tpl, std::uint32_t k_min, std::uint32_t k_max,
                             std::uint64_t seed, std::uint32_t sh_degree = 2);

/// Sets DC terms from the parent triangle's interpolated segmentation color
/// and zeroes higher orders.
void paint_from_segmentation(GaussianTexture& tex, const RiggedTemplate& tpl);

/// Interpolates a per-vertex attribute at every Gaussian's barycentric point.
std::vector<Vec3> interpolate_vertex_attribute(std::span<const Face> faces, const GaussianTexture& tex,
                                               std::span<const Vec3> attribute);

}  // namespace meshsplat
