// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Tile binning shared by the forward and backward splatting passes.
#pragma once

#include "meshsplat/splat.hpp"

namespace meshsplat::detail {

struct TileBins {
    std::uint32_t tiles_x = 0, tiles_y = 0;
    std::vector<std::uint32_t> offsets;  // tiles + 1 prefix sums
    std::vector<std::uint32_t> items;    // Gaussian indices, front to back per tile
};

/// Counting sort of the depth-ordered Gaussians into 16x16 tiles; each
/// tile's list inherits the global order.
TileBins bin_tiles(std::span<const ProjectedGaussian> projected, std::span<const std::uint32_t> order,
                   std::uint32_t width, std::uint32_t height);

struct Contribution {
    std::uint32_t gaussian;
    double alpha;        // after clamping
    double transmittance;  // T before this Gaussian
    double falloff;      // G
    bool clamped;        // alpha hit kMaxAlpha
    Vec2 offset;         // pixel center - mean
};

/// Visits the contributing Gaussians of one pixel front to back, applying
/// the footprint cutoff, alpha threshold and early termination.
template <typename Visit>
void composite_pixel(std::span<const WorldGaussian> gaussians, std::span<const ProjectedGaussian> projected,
                     const std::uint32_t* list, std::size_t count, const Vec2& pixel, Visit&& visit) {
    double T = 1.0;
    for (std::size_t k = 0; k < count; ++k) {
        const std::uint32_t g = list[k];
        const ProjectedGaussian& p = projected[g];
        const Vec2 d = pixel - p.mean;
        const double m2 = d.dot(p.conic * d);
        if (m2 > kCutoffSigma * kCutoffSigma) continue;
        const double G = std::exp(-0.5 * m2);
        double a = gaussians[g].opacity * G;
        const bool clamped = a > kMaxAlpha;
        if (clamped) a = kMaxAlpha;
        if (a < kMinAlpha) continue;
        visit(Contribution{g, a, T, G, clamped, d});
        T *= 1.0 - a;
        if (T < kMinTransmittance) break;
    }
}

}  // namespace meshsplat::detail
