// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace meshsplat {

namespace {

void round_half(Mlp& mlp) {
    for (auto& l : mlp.layers) {
        for (float& w : l.weight) w = float(Eigen::half(w));
        for (float& b : l.bias) b = float(Eigen::half(b));
    }
}

}  // namespace

StudentBundle quantize_bundle(const StudentBundle& bundle) {
    validate(bundle);
    StudentBundle q = bundle;
    for (Mlp* m : {&q.body, &q.cloth, &q.head_map, &q.body_map}) round_half(*m);
    q.half_precision = true;
    return q;
}

QuantizeReport measure_quantization(const StudentBundle& full, const StudentBundle& quantized, std::size_t samples,
                                    std::uint64_t seed) {
    const StudentConfig& c = full.config;
    if (quantized.config.input_dim() != c.input_dim() || quantized.config.coeff_dim() != c.coeff_dim()) {
        throw DimensionError("bundles have different shapes");
    }
    Rng rng(seed);
    double max_diff = 0.0, max_ref = 0.0;
    const std::size_t chunk = 100;
    for (std::size_t done = 0; done < samples; done += chunk) {
        const std::size_t n = std::min(chunk, samples - done);
        std::vector<Vec3> pts(n);
        for (auto& p : pts) p = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        VecX code(c.theta_dim + c.embedding_dim);
        for (Eigen::Index k = 0; k < code.size(); ++k) code[k] = rng.uniform(-1, 1);
        const MatX enc = encode_vertices(pts, c.pe_levels);
        auto compare = [&](const MatX& a, const MatX& b) {
            max_diff = std::max(max_diff, (a - b).cwiseAbs().maxCoeff());
            max_ref = std::max(max_ref, a.cwiseAbs().maxCoeff());
        };
        compare(mlp_forward(full.body, enc, code), mlp_forward(quantized.body, enc, code));
        compare(mlp_forward(full.cloth, enc, code), mlp_forward(quantized.cloth, enc, code));
        VecX eps(std::max<std::uint32_t>(c.expression_dim, 1)), theta(std::max<std::uint32_t>(c.theta_dim, 1));
        for (Eigen::Index k = 0; k < eps.size(); ++k) eps[k] = rng.uniform(-1, 1);
        for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = rng.uniform(-1, 1);
        compare(mlp_forward(full.head_map, MatX(0, 1), eps), mlp_forward(quantized.head_map, MatX(0, 1), eps));
        compare(mlp_forward(full.body_map, MatX(0, 1), theta), mlp_forward(quantized.body_map, MatX(0, 1), theta));
    }
    QuantizeReport r;
    r.samples = samples;
    r.max_rel_deviation = max_ref > 0.0 ? max_diff / max_ref : (max_diff > 0.0 ? INFINITY : 0.0);
    r.within_bound = r.max_rel_deviation < kQuantizeBound;
    return r;
}

}  // namespace meshsplat
