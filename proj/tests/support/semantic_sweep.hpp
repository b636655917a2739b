// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// One isotropic Gaussian slid horizontally across an equilateral triangle
// that carries the same semantic label.
#pragma once

#include "meshsplat/train.hpp"

#include <vector>

namespace sweep {

using namespace meshsplat;

struct Sample {
    double offset_px = 0.0;
    double loss = 0.0;
    double analytic = 0.0;  // d loss / d offset (per pixel of offset)
    double numeric = 0.0;
};

struct Setup {
    Camera cam = Camera::look_at(Vec3(0, -3, 0), Vec3(0, 0, 0), Vec3(0, 0, 1), 40.0, 96, 96);
    double px_per_m = 0.0;
    double sigma_px = 3.0;
    Vec3 label = Vec3(0.9, 0.4, -0.3);
    std::vector<Vec3> tri;
    std::vector<Face> faces{{0, 1, 2}};

    Setup() {
        px_per_m = cam.fx / 3.0;
        const double side = 4.0 * sigma_px / px_per_m;
        const double h = side * std::sqrt(3.0) / 2.0;
        tri = {Vec3(-side / 2, 0, -h / 3), Vec3(0, 0, 2 * h / 3), Vec3(side / 2, 0, -h / 3)};
    }

    WorldGaussian gaussian(double offset_px) const {
        WorldGaussian g;
        g.mean = Vec3(offset_px / px_per_m, 0, 0);
        g.scale = Vec3::Constant(sigma_px / px_per_m);
        g.opacity = 0.95;
        g.color = Vec3::Constant(0.5);
        g.semantic = label;
        return g;
    }

    LossResult loss(double offset_px, RenderTarget* out = nullptr) const {
        const std::vector<WorldGaussian> gs{gaussian(offset_px)};
        RenderOptions o;
        o.semantic = true;
        RenderTarget rt = render(gs, cam, o);
        const std::vector<Vec3> labels(3, label);
        const MeshSemantic mesh = render_mesh_semantic(tri, faces, labels, cam);
        LossResult r = loss_semantic(rt.semantic, rt.alpha, mesh);
        if (out) *out = std::move(rt);
        return r;
    }

    Sample sample(double offset_px, double h_px = 1e-3) const {
        Sample s;
        s.offset_px = offset_px;
        const LossResult r = loss(offset_px);
        s.loss = r.value;
        RenderOptions o;
        o.semantic = true;
        RenderGradients up;
        up.semantic = r.grad;
        const std::vector<WorldGaussian> gs{gaussian(offset_px)};
        const SplatGradients g = render_backward(gs, cam, o, up);
        s.analytic = g.mean3d[0].x() / px_per_m;
        s.numeric = (loss(offset_px + h_px).value - loss(offset_px - h_px).value) / (2.0 * h_px);
        return s;
    }
};

/// Offsets in (0, 2 sigma], ascending.
inline std::vector<Sample> run(const Setup& s, int count = 10) {
    std::vector<Sample> out;
    for (int k = 1; k <= count; ++k) out.push_back(s.sample(2.0 * s.sigma_px * k / count));
    return out;
}

}  // namespace sweep
