// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/splat.hpp"
#include "splat/tiles.hpp"

#include <algorithm>

namespace meshsplat {

namespace {

struct Entry {
    Vec3 color = Vec3::Zero(), normal = Vec3::Zero(), semantic = Vec3::Zero();
    double opacity = 0.0;
    Vec2 mean2d = Vec2::Zero();
};

Vec3 read3(const std::vector<double>& v, std::size_t pix) {
    return v.empty() ? Vec3::Zero() : Vec3(v[pix * 3], v[pix * 3 + 1], v[pix * 3 + 2]);
}

double read1(const std::vector<double>& v, std::size_t pix) { return v.empty() ? 0.0 : v[pix]; }

void check_size(const std::vector<double>& v, std::size_t expected, const char* name) {
    if (!v.empty() && v.size() != expected) {
        throw DimensionError(std::string("upstream ") + name + " gradient has the wrong size");
    }
}

}  // namespace

SplatGradients render_projected_backward(std::span<const WorldGaussian> gaussians,
                                         std::span<const ProjectedGaussian> projected, const Camera& cam,
                                         const RenderOptions& options, const RenderGradients& up) {
    validate(cam);
    const std::size_t np = std::size_t(cam.width) * cam.height;
    check_size(up.color, np * 3, "color");
    check_size(up.alpha, np, "alpha");
    check_size(up.normal, np * 3, "normal");
    check_size(up.depth, np, "depth");
    check_size(up.semantic, np * 3, "semantic");

    const auto order = sort_by_depth(projected, cam.near, cam.far, options.sort);
    const detail::TileBins bins = detail::bin_tiles(projected, order, cam.width, cam.height);
    const std::size_t tiles = std::size_t(bins.tiles_x) * bins.tiles_y;

    // One slot per (tile, list position); reduced serially in tile order so
    // the result does not depend on the thread count.
    std::vector<Entry> slots(bins.items.size());
    parallel_for(tiles, 1, [&](std::size_t begin, std::size_t end) {
        std::vector<detail::Contribution> contribs;
        std::vector<std::uint32_t> slot_of;
        for (std::size_t t = begin; t < end; ++t) {
            const std::uint32_t tx = std::uint32_t(t % bins.tiles_x), ty = std::uint32_t(t / bins.tiles_x);
            const std::uint32_t first = bins.offsets[t];
            const std::uint32_t* list = bins.items.data() + first;
            const std::size_t count = bins.offsets[t + 1] - first;
            if (count == 0) continue;
            const std::uint32_t x_end = std::min(cam.width, (tx + 1) * kTileSize);
            const std::uint32_t y_end = std::min(cam.height, (ty + 1) * kTileSize);
            for (std::uint32_t y = ty * kTileSize; y < y_end; ++y) {
                for (std::uint32_t x = tx * kTileSize; x < x_end; ++x) {
                    const std::size_t pix = std::size_t(y) * cam.width + x;
                    const Vec3 gc = read3(up.color, pix), gn = read3(up.normal, pix), gs = read3(up.semantic, pix);
                    const double ga = read1(up.alpha, pix), gz = read1(up.depth, pix);
                    contribs.clear();
                    slot_of.clear();
                    std::size_t pos = 0;
                    detail::composite_pixel(gaussians, projected, list, count, Vec2(x + 0.5, y + 0.5),
                                            [&](const detail::Contribution& k) {
                                                while (list[pos] != k.gaussian) ++pos;
                                                contribs.push_back(k);
                                                slot_of.push_back(first + std::uint32_t(pos));
                                            });
                    // Suffix sums of what lies behind each contributor.
                    Vec3 sc = Vec3::Zero(), sn = Vec3::Zero(), ss = Vec3::Zero();
                    double sa = 0.0, sz = 0.0;
                    for (std::size_t k = contribs.size(); k-- > 0;) {
                        const detail::Contribution& c = contribs[k];
                        const WorldGaussian& g = gaussians[c.gaussian];
                        const ProjectedGaussian& p = projected[c.gaussian];
                        const double w = c.alpha * c.transmittance;
                        Entry& e = slots[slot_of[k]];
                        e.color += w * gc;
                        e.normal += w * gn;
                        e.semantic += w * gs;
                        double d_alpha = 0.0;
                        if (options.color) d_alpha += gc.dot(g.color - sc);
                        if (options.normal) d_alpha += gn.dot(g.normal - sn);
                        if (options.semantic) d_alpha += gs.dot(g.semantic - ss);
                        if (options.depth) d_alpha += gz * (p.depth - sz);
                        d_alpha += ga * (1.0 - sa);
                        d_alpha *= c.transmittance;

                        sc = c.alpha * g.color + (1.0 - c.alpha) * sc;
                        sn = c.alpha * g.normal + (1.0 - c.alpha) * sn;
                        ss = c.alpha * g.semantic + (1.0 - c.alpha) * ss;
                        sz = c.alpha * p.depth + (1.0 - c.alpha) * sz;
                        sa = c.alpha + (1.0 - c.alpha) * sa;

                        if (c.clamped) continue;
                        e.opacity += d_alpha * c.falloff;
                        const double d_falloff = d_alpha * g.opacity;
                        // dG/dmean = G * conic * (pixel - mean)
                        e.mean2d += d_falloff * c.falloff * (p.conic * c.offset);
                    }
                }
            }
        }
    });

    const std::size_t n = gaussians.size();
    SplatGradients out;
    out.color.assign(n, Vec3::Zero());
    out.normal.assign(n, Vec3::Zero());
    out.semantic.assign(n, Vec3::Zero());
    out.opacity.assign(n, 0.0);
    out.mean2d.assign(n, Vec2::Zero());
    out.mean3d.assign(n, Vec3::Zero());
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const std::uint32_t g = bins.items[s];
        out.color[g] += slots[s].color;
        out.normal[g] += slots[s].normal;
        out.semantic[g] += slots[s].semantic;
        out.opacity[g] += slots[s].opacity;
        out.mean2d[g] += slots[s].mean2d;
    }
    for (std::size_t g = 0; g < n; ++g) {
        if (projected[g].visible) out.mean3d[g] = projected[g].mean_jacobian.transpose() * out.mean2d[g];
    }
    return out;
}

SplatGradients render_backward(std::span<const WorldGaussian> gaussians, const Camera& cam,
                               const RenderOptions& options, const RenderGradients& upstream) {
    const auto projected = project_gaussians(gaussians, cam);
    return render_projected_backward(gaussians, projected, cam, options, upstream);
}

}  // namespace meshsplat
