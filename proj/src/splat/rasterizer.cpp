// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/splat.hpp"
#include "splat/tiles.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>

namespace meshsplat {

namespace {

bool finite(const WorldGaussian& g) {
    return g.mean.allFinite() && g.scale.allFinite() && g.rotation.coeffs().allFinite() &&
           std::isfinite(g.opacity) && g.color.allFinite() && g.normal.allFinite() && g.semantic.allFinite();
}

}  // namespace

std::vector<ProjectedGaussian> project_gaussians(std::span<const WorldGaussian> gaussians, const Camera& cam) {
    const RigidTransform w2c = cam.world_to_camera();
    const double near = cam.near, far = cam.far;
    std::vector<ProjectedGaussian> out(gaussians.size());
    parallel_for(gaussians.size(), 4096, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const WorldGaussian& g = gaussians[i];
            if (!finite(g)) {
                throw ValidationError("gaussian " + std::to_string(i) + " has non-finite attributes", {i});
            }
            ProjectedGaussian& p = out[i];
            const Vec3 t = w2c.apply(g.mean);
            p.depth = t[2];
            if (!(t[2] > near && t[2] <= far)) continue;
            const Eigen::Matrix<double, 2, 3> J = cam.projection_jacobian(t);
            const Eigen::Matrix<double, 2, 3> JW = J * w2c.rotation;
            Mat2 cov = JW * g.covariance() * JW.transpose();
            cov = 0.5 * (cov + cov.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Mat2> eig(cov);
            Vec2 lambda = eig.eigenvalues().cwiseMax(kMinEigenvalue);
            const Mat2& V = eig.eigenvectors();
            p.cov = V * lambda.asDiagonal() * V.transpose();
            p.conic = V * lambda.cwiseInverse().asDiagonal() * V.transpose();
            p.radius = kCutoffSigma * std::sqrt(lambda.maxCoeff());
            p.mean = cam.project(t);
            p.mean_jacobian = JW;
            p.visible = p.mean.allFinite();
        }
    });
    return out;
}

namespace detail {

TileBins bin_tiles(std::span<const ProjectedGaussian> projected, std::span<const std::uint32_t> order,
                   std::uint32_t width, std::uint32_t height) {
    TileBins bins;
    bins.tiles_x = (width + kTileSize - 1) / kTileSize;
    bins.tiles_y = (height + kTileSize - 1) / kTileSize;
    const std::size_t tiles = std::size_t(bins.tiles_x) * bins.tiles_y;

    struct Rect { int x0, x1, y0, y1; };
    std::vector<Rect> rects(order.size());
    std::vector<std::uint32_t> counts(tiles + 1, 0);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const ProjectedGaussian& p = projected[order[k]];
        Rect r{0, -1, 0, -1};
        const double x_lo = p.mean[0] - p.radius, x_hi = p.mean[0] + p.radius;
        const double y_lo = p.mean[1] - p.radius, y_hi = p.mean[1] + p.radius;
        if (x_hi >= 0.0 && y_hi >= 0.0 && x_lo < width && y_lo < height) {
            r.x0 = std::max(0, int(std::floor(x_lo / kTileSize)));
            r.x1 = std::min(int(bins.tiles_x) - 1, int(std::floor(x_hi / kTileSize)));
            r.y0 = std::max(0, int(std::floor(y_lo / kTileSize)));
            r.y1 = std::min(int(bins.tiles_y) - 1, int(std::floor(y_hi / kTileSize)));
        }
        rects[k] = r;
        for (int ty = r.y0; ty <= r.y1; ++ty)
            for (int tx = r.x0; tx <= r.x1; ++tx) counts[std::size_t(ty) * bins.tiles_x + tx + 1]++;
    }
    bins.offsets.resize(tiles + 1);
    bins.offsets[0] = 0;
    for (std::size_t t = 0; t < tiles; ++t) bins.offsets[t + 1] = bins.offsets[t] + counts[t + 1];
    bins.items.resize(bins.offsets[tiles]);
    std::vector<std::uint32_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Rect& r = rects[k];
        for (int ty = r.y0; ty <= r.y1; ++ty)
            for (int tx = r.x0; tx <= r.x1; ++tx) bins.items[cursor[std::size_t(ty) * bins.tiles_x + tx]++] = order[k];
    }
    return bins;
}

}  // namespace detail

RenderTarget render_projected(std::span<const WorldGaussian> gaussians,
                              std::span<const ProjectedGaussian> projected, const Camera& cam,
                              const RenderOptions& options, RenderStats* stats) {
    validate(cam);
    using Clock = std::chrono::steady_clock;
    auto ms_since = [](Clock::time_point t) { return std::chrono::duration<double, std::milli>(Clock::now() - t).count(); };
    RenderTarget rt;
    rt.width = cam.width;
    rt.height = cam.height;
    const std::size_t np = rt.pixels();
    rt.alpha.assign(np, 0.0);
    if (options.color) rt.color.assign(np * 3, 0.0);
    if (options.normal) rt.normal.assign(np * 3, 0.0);
    if (options.depth) rt.depth.assign(np, 0.0);
    if (options.semantic) rt.semantic.assign(np * 3, 0.0);

    auto t0 = Clock::now();
    const auto order = sort_by_depth(projected, cam.near, cam.far, options.sort);
    if (stats) {
        stats->sort_ms = ms_since(t0);
        stats->visible = order.size();
        t0 = Clock::now();
    }
    const detail::TileBins bins = detail::bin_tiles(projected, order, rt.width, rt.height);
    const std::size_t tiles = std::size_t(bins.tiles_x) * bins.tiles_y;
    if (stats) {
        stats->bin_ms = ms_since(t0);
        stats->tile_entries = bins.items.size();
        t0 = Clock::now();
    }

    parallel_for(tiles, 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            const std::uint32_t tx = std::uint32_t(t % bins.tiles_x), ty = std::uint32_t(t / bins.tiles_x);
            const std::uint32_t* list = bins.items.data() + bins.offsets[t];
            const std::size_t count = bins.offsets[t + 1] - bins.offsets[t];
            if (count == 0) continue;
            const std::uint32_t x_end = std::min(rt.width, (tx + 1) * kTileSize);
            const std::uint32_t y_end = std::min(rt.height, (ty + 1) * kTileSize);
            for (std::uint32_t y = ty * kTileSize; y < y_end; ++y) {
                for (std::uint32_t x = tx * kTileSize; x < x_end; ++x) {
                    const std::size_t pix = std::size_t(y) * rt.width + x;
                    Vec3 c = Vec3::Zero(), n = Vec3::Zero(), s = Vec3::Zero();
                    double a = 0.0, z = 0.0;
                    detail::composite_pixel(gaussians, projected, list, count, Vec2(x + 0.5, y + 0.5),
                                            [&](const detail::Contribution& k) {
                                                const double w = k.alpha * k.transmittance;
                                                const WorldGaussian& g = gaussians[k.gaussian];
                                                a += w;
                                                c += w * g.color;
                                                n += w * g.normal;
                                                s += w * g.semantic;
                                                z += w * projected[k.gaussian].depth;
                                            });
                    rt.alpha[pix] = a;
                    for (int ch = 0; ch < 3; ++ch) {
                        if (options.color) rt.color[pix * 3 + ch] = c[ch];
                        if (options.normal) rt.normal[pix * 3 + ch] = n[ch];
                        if (options.semantic) rt.semantic[pix * 3 + ch] = s[ch];
                    }
                    if (options.depth) rt.depth[pix] = z;
                }
            }
        }
    });
    if (stats) stats->raster_ms = ms_since(t0);
    return rt;
}

RenderTarget render(std::span<const WorldGaussian> gaussians, const Camera& cam, const RenderOptions& options,
                    RenderStats* stats) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto projected = project_gaussians(gaussians, cam);
    const double project_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    RenderTarget rt = render_projected(gaussians, projected, cam, options, stats);
    if (stats) stats->project_ms = project_ms;
    return rt;
}

}  // namespace meshsplat
