// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/splat.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace meshsplat {

std::uint16_t quantize_depth(double depth, double near, double far) {
    const double x = std::floor((depth - near) / (far - near) * 65535.0);
    return std::uint16_t(std::clamp(x, 0.0, 65535.0));
}

std::vector<std::uint32_t> sort_by_depth(std::span<const double> depths, double near, double far,
                                         SortMode mode) {
    if (!(near < far)) throw Error(ErrorCode::invalid_argument, "sort requires near < far");
    // (key, index) packed into one integer: ties fall back to index order.
    std::vector<std::uint64_t> keys;
    keys.reserve(depths.size());
    for (std::size_t i = 0; i < depths.size(); ++i) {
        const double z = depths[i];
        if (!(z > near && z <= far)) continue;
        std::uint64_t key;
        if (mode == SortMode::quant_u16) {
            key = quantize_depth(z, near, far);
        } else {
            // Order-preserving map of IEEE floats onto unsigned integers.
            const float f = float(z);
            std::uint32_t bits;
            std::memcpy(&bits, &f, sizeof bits);
            key = (bits & 0x80000000u) ? ~bits : (bits | 0x80000000u);
        }
        keys.push_back((key << 32) | std::uint64_t(i));
    }
    std::sort(keys.begin(), keys.end());
    std::vector<std::uint32_t> order(keys.size());
    for (std::size_t k = 0; k < keys.size(); ++k) order[k] = std::uint32_t(keys[k] & 0xffffffffu);
    return order;
}

std::vector<std::uint32_t> sort_by_depth(std::span<const ProjectedGaussian> projected, double near, double far,
                                         SortMode mode) {
    std::vector<double> depths(projected.size());
    for (std::size_t i = 0; i < projected.size(); ++i) {
        // Invisible entries get a depth outside (near, far] and are dropped.
        depths[i] = projected[i].visible ? projected[i].depth : near;
    }
    return sort_by_depth(depths, near, far, mode);
}

}  // namespace meshsplat
