// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"

#include <cmath>

namespace meshsplat {

std::vector<Vec3> semantic_labels(const RiggedTemplate& tpl, double tau) {
    if (!(tau > 0.0)) throw Error(ErrorCode::invalid_argument, "tau must be positive");
    std::vector<Vec3> out(tpl.vertices.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Vec3 v = tpl.vertices[i].cast<double>();
        out[i] = tpl.segmentation_colors[i].cast<double>() + Vec3(std::sin(tau * v.x()), std::sin(tau * v.y()),
                                                                   std::sin(tau * v.z()));
    }
    return out;
}

std::vector<Vec3> gaussian_semantic_labels(const RiggedTemplate& tpl, const GaussianTexture& tex, double tau) {
    return interpolate_vertex_attribute(tpl.faces, tex, semantic_labels(tpl, tau));
}

MeshSemantic render_mesh_semantic(std::span<const Vec3> posed, std::span<const Face> faces,
                                  std::span<const Vec3> labels, const Camera& cam) {
    if (labels.size() != posed.size()) throw DimensionError("semantic labels do not match the vertex count");
    const MeshRaster raster = rasterize_perspective(posed, faces, cam);
    const MapImage img = apply_raster(raster, labels);
    MeshSemantic out;
    const std::size_t n = img.values.size();
    out.values.assign(n * 3, 0.0);
    out.covered = img.mask;
    for (std::size_t p = 0; p < n; ++p)
        for (int c = 0; c < 3; ++c) out.values[p * 3 + c] = img.values[p][c];
    return out;
}

LossResult loss_semantic(std::span<const double> gaussian_semantic, std::span<const double> gaussian_alpha,
                         const MeshSemantic& mesh) {
    const std::size_t n = gaussian_alpha.size();
    if (gaussian_semantic.size() != n * 3 || mesh.values.size() != n * 3 || mesh.covered.size() != n) {
        throw DimensionError("semantic loss: image sizes differ");
    }
    LossResult r;
    r.grad.assign(n * 3, 0.0);
    std::size_t count = 0;
    for (std::size_t p = 0; p < n; ++p) count += (mesh.covered[p] || gaussian_alpha[p] > 0.0) ? 1 : 0;
    if (count == 0) return r;
    const double inv = 1.0 / double(count);
    for (std::size_t p = 0; p < n; ++p) {
        if (!(mesh.covered[p] || gaussian_alpha[p] > 0.0)) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = gaussian_semantic[p * 3 + c] - mesh.values[p * 3 + c];
            r.value += std::abs(d);
            r.grad[p * 3 + c] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv;
        }
    }
    r.value *= inv;
    return r;
}

}  // namespace meshsplat
