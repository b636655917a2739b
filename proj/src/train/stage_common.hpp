// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Plumbing shared by the bake and finetune loops.
#pragma once

#include "meshsplat/train.hpp"

#include <chrono>
#include <cmath>

namespace meshsplat::detail {

/// Double master copy of a parameter group plus its optimizer state.
struct Group {
    std::vector<double> value, grad;
    Adam adam;
    bool frozen = false;
    double base_lr = 0.0;

    void init(std::vector<double> v, double lr, bool freeze) {
        base_lr = lr;
        value = std::move(v);
        grad.assign(value.size(), 0.0);
        adam = Adam(value.size(), AdamConfig{lr});
        frozen = freeze;
    }
    void zero() { std::fill(grad.begin(), grad.end(), 0.0); }
    void add(std::span<const double> g, double scale, std::size_t offset = 0) {
        for (std::size_t i = 0; i < g.size(); ++i) grad[offset + i] += scale * g[i];
    }
    /// `scale` multiplies the initial learning rate for this step.
    void step(double scale = 1.0) {
        if (frozen || value.empty()) return;
        adam.set_lr(base_lr * scale);
        adam.step(value, grad);
    }
};

/// Exponential decay from 1 at the first iteration to `final_ratio` at the last.
inline double lr_scale(double final_ratio, std::uint32_t it, std::uint32_t iterations) {
    if (iterations <= 1 || final_ratio == 1.0) return 1.0;
    return std::pow(final_ratio, double(it - 1) / double(iterations - 1));
}

inline std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

inline void add_terms(LossTerms& acc, const LossTerms& t, double s) {
    acc.l1 += s * t.l1;
    acc.dssim += s * t.dssim;
    acc.normal += s * t.normal;
    acc.nonrigid += s * t.nonrigid;
    acc.semantic += s * t.semantic;
    acc.total += s * t.total;
    acc.mask_disagreement += s * t.mask_disagreement;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<double> to_doubles(std::span<const float> v) { return {v.begin(), v.end()}; }

inline void to_floats(std::span<const double> v, std::vector<float>& out) {
    out.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = float(v[i]);
}

}  // namespace meshsplat::detail
