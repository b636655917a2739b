// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/gstexture.hpp"

#include <cmath>

namespace meshsplat {

GaussianTexture init_texture(const RiggedTemplate& tpl, std::uint32_t k_min, std::uint32_t k_max,
                             std::uint64_t seed, std::uint32_t sh_degree) {
    if (k_min > k_max) throw Error(ErrorCode::invalid_argument, "k_min must be <= k_max");
    if (sh_degree > 3) throw Error(ErrorCode::invalid_argument, "sh degree must be in [0,3]");
    Rng rng(seed);
    GaussianTexture tex;
    tex.sh_degree = sh_degree;
    const float log_thin = std::log(0.01f);
    for (std::uint32_t f = 0; f < tpl.faces.size(); ++f) {
        const int k = rng.uniform_int(int(k_min), int(k_max));
        for (int i = 0; i < k; ++i) {
            // Area-uniform sample: (1 - sqrt(r1), sqrt(r1) (1 - r2), sqrt(r1) r2).
            const double s = std::sqrt(rng.uniform());
            const double r2 = rng.uniform();
            tex.face.push_back(f);
            tex.uv.emplace_back(float(1.0 - s), float(s * (1.0 - r2)));
        }
    }
    const std::size_t n = tex.face.size();
    tex.gamma.assign(n, 0.0f);
    tex.rotation.assign(n, Vec4f(1, 0, 0, 0));
    tex.log_scale.assign(n, Vec3f(log_thin, 0.0f, 0.0f));
    tex.opacity_logit.assign(n, 0.0f);
    tex.sh.assign(n * tex.sh_stride(), 0.0f);
    return tex;
}

void paint_from_segmentation(GaussianTexture& tex, const RiggedTemplate& tpl) {
    std::vector<Vec3> colors(tpl.vertices.size());
    for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = tpl.segmentation_colors[i].cast<double>();
    const auto per_gaussian = interpolate_vertex_attribute(tpl.faces, tex, colors);
    for (std::size_t g = 0; g < tex.size(); ++g) {
        float* sh = tex.sh_of(g);
        std::fill(sh, sh + tex.sh_stride(), 0.0f);
        const Vec3 dc = sh_dc_from_color(per_gaussian[g]);
        for (int c = 0; c < 3; ++c) sh[c] = float(dc[c]);
    }
}

}  // namespace meshsplat
