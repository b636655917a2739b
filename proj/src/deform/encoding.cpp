// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/deform.hpp"

#include <cmath>

namespace meshsplat {

void positional_encode(const Vec3& v, std::uint32_t levels, double* out) {
    for (int a = 0; a < 3; ++a) out[a] = v[a];
    double freq = M_PI;
    for (std::uint32_t k = 0; k < levels; ++k) {
        double* block = out + 3 + 6 * k;
        for (int a = 0; a < 3; ++a) {
            block[a] = std::sin(freq * v[a]);
            block[3 + a] = std::cos(freq * v[a]);
        }
        freq *= 2.0;
    }
}

VecX positional_encode(const Vec3& v, std::uint32_t levels) {
    VecX out(encoding_dim(levels));
    positional_encode(v, levels, out.data());
    return out;
}

MatX encode_vertices(std::span<const Vec3> canonical, std::uint32_t levels) {
    MatX out(encoding_dim(levels), canonical.size());
    for (std::size_t i = 0; i < canonical.size(); ++i) positional_encode(canonical[i], levels, out.col(i).data());
    return out;
}

}  // namespace meshsplat
