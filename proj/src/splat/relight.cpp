// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/splat.hpp"

#include <algorithm>

namespace meshsplat {

std::vector<double> relight(std::span<const double> color, std::span<const double> normal, const Light& light) {
    if (color.size() != normal.size() || color.size() % 3 != 0) {
        throw DimensionError("relight needs color and normal images of the same size");
    }
    const Vec3 l = light.direction.normalized();
    std::vector<double> out(color.size());
    for (std::size_t p = 0; p < color.size() / 3; ++p) {
        Vec3 n(normal[p * 3], normal[p * 3 + 1], normal[p * 3 + 2]);
        const double len = n.norm();
        const double ndotl = len > 0.0 ? std::max(0.0, n.dot(l) / len) : 0.0;
        for (int c = 0; c < 3; ++c) {
            const double shade = light.ambient[c] + light.intensity[c] * ndotl;
            out[p * 3 + c] = std::clamp(color[p * 3 + c] * shade, 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace meshsplat
