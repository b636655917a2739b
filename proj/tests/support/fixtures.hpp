// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Small hand-built assets shared by the suites.
#pragma once

#include "meshsplat/train.hpp"

#include <filesystem>
#include <string>

namespace fixture {

using namespace meshsplat;

/// Single-joint template over a regular grid in the x/z plane.
inline RiggedTemplate grid_template(std::uint32_t nx, std::uint32_t nz, double size = 1.0) {
    RiggedTemplate t;
    t.joints.push_back(Joint{});
    for (std::uint32_t j = 0; j <= nz; ++j)
        for (std::uint32_t i = 0; i <= nx; ++i)
            t.vertices.push_back(Vec3f(float(size * i / nx - size / 2), 0.0f, float(size * j / nz)));
    for (std::uint32_t j = 0; j < nz; ++j) {
        for (std::uint32_t i = 0; i < nx; ++i) {
            const std::uint32_t a = j * (nx + 1) + i, b = a + 1, c = a + nx + 1, d = c + 1;
            t.faces.push_back({a, b, d});
            t.faces.push_back({a, d, c});
        }
    }
    const std::size_t n = t.vertices.size();
    t.skin.assign(n, SkinWeights::single(0));
    t.labels.assign(n, ComponentLabel::body);
    t.segmentation_colors.assign(n, Vec3f(0.8f, 0.6f, 0.5f));
    t.cloth_mask.assign(n, 0);
    return t;
}

inline RiggedTemplate small_rig(bool cloth = true, std::uint64_t seed = 1) {
    CapsuleRigConfig c;
    c.cloth = cloth;
    c.seed = seed;
    c.radial_segments = 12;
    c.rings_per_bone = 2;
    return make_capsule_rig(c);
}

/// Fresh scratch directory under the system temp dir.
inline std::string scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("meshsplat_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return a.size() == b.size() ? m : 1e300;
}

}  // namespace fixture
