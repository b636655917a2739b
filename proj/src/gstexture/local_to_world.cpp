// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/gstexture.hpp"

#include <algorithm>

namespace meshsplat {

Mat3 WorldGaussian::covariance() const {
    const Mat3 M = rotation.toRotationMatrix() * scale.asDiagonal();
    return M * M.transpose();
}

LocalGaussian local_gaussian(const GaussianTexture& tex, std::size_t g) {
    LocalGaussian l;
    l.gamma = tex.gamma[g];
    l.rotation = quat_from_wxyz(tex.rotation[g]).normalized();
    l.log_scale = tex.log_scale[g].cast<double>();
    l.opacity_logit = tex.opacity_logit[g];
    l.sh_degree = tex.sh_degree;
    l.sh = tex.sh_of(g);
    return l;
}

WorldGaussian local_to_world(const LocalGaussian& g, const TriangleFrame& frame, const Vec3& view_dir,
                             const Vec3& delta_u, const Vec3& delta_c) {
    WorldGaussian w;
    w.mean = frame.p + frame.R * (Vec3(g.gamma, 0.0, 0.0) + delta_u);
    const Mat3 rot = frame.R * g.rotation.toRotationMatrix();
    w.rotation = Quat(rot).normalized();
    w.normal = rot.col(0);
    w.scale = frame.e * g.log_scale.array().exp().matrix();
    w.opacity = sigmoid(g.opacity_logit);
    const Vec3 c = sh_eval(g.sh_degree, g.sh, frame.R.transpose() * view_dir) + delta_c;
    w.color = c.cwiseMax(0.0).cwiseMin(1.0);
    return w;
}

ViewPoint ViewPoint::from_camera(const Camera& cam) {
    ViewPoint v;
    v.directional = cam.orthographic();
    v.origin = cam.center();
    v.direction = cam.forward();
    return v;
}

Vec3 ViewPoint::toward(const Vec3& point) const {
    if (directional) return direction;
    const Vec3 d = point - origin;
    const double len = d.norm();
    return len > 0.0 ? Vec3(d / len) : direction;
}

std::vector<WorldGaussian> world_gaussians(std::span<const Vec3> vertices, std::span<const Face> faces,
                                           const GaussianTexture& tex, const ViewPoint& view,
                                           const GaussianResiduals& residuals) {
    const std::size_t n = tex.size();
    auto check = [&](std::span<const Vec3> s, const char* what) {
        if (!s.empty() && s.size() != n) {
            throw DimensionError(std::string(what) + " has " + std::to_string(s.size()) + " entries for " +
                                 std::to_string(n) + " gaussians");
        }
    };
    check(residuals.delta_u, "delta_u");
    check(residuals.delta_c, "delta_c");
    check(residuals.semantic, "semantic");
    for (std::size_t g = 0; g < n; ++g) {
        if (tex.face[g] >= faces.size()) {
            throw ValidationError("gaussian " + std::to_string(g) + " binds to a missing face", {g});
        }
    }
    std::vector<WorldGaussian> out(n);
    parallel_for(n, 4096, [&](std::size_t begin, std::size_t end) {
        for (std::size_t g = begin; g < end; ++g) {
            const Face& f = faces[tex.face[g]];
            const TriangleFrame frame = triangle_frame(vertices[f[0]], vertices[f[1]], vertices[f[2]],
                                                       tex.uv[g].cast<double>(), tex.face[g]);
            const Vec3 du = residuals.delta_u.empty() ? Vec3::Zero() : residuals.delta_u[g];
            const Vec3 dc = residuals.delta_c.empty() ? Vec3::Zero() : residuals.delta_c[g];
            // The view direction depends on the final mean.
            const Vec3 mean = frame.p + frame.R * (Vec3(double(tex.gamma[g]), 0.0, 0.0) + du);
            out[g] = local_to_world(local_gaussian(tex, g), frame, view.toward(mean), du, dc);
            if (!residuals.semantic.empty()) out[g].semantic = residuals.semantic[g];
        }
    });
    return out;
}

std::vector<Vec3> interpolate_vertex_attribute(std::span<const Face> faces, const GaussianTexture& tex,
                                               std::span<const Vec3> attribute) {
    std::vector<Vec3> out(tex.size());
    for (std::size_t g = 0; g < tex.size(); ++g) {
        const Face& f = faces[tex.face[g]];
        const double u = tex.uv[g][0], v = tex.uv[g][1];
        out[g] = u * attribute[f[0]] + v * attribute[f[1]] + (1.0 - u - v) * attribute[f[2]];
    }
    return out;
}

}  // namespace meshsplat
