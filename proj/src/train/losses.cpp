// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"

#include <cmath>

namespace meshsplat {

namespace {
double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
}  // namespace

void validate(const LossWeights& w) {
    for (double v : {w.ssim, w.lpips, w.normal, w.nonrigid, w.semantic}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("loss weights must be finite and nonnegative");
    }
}

LossResult loss_l1(std::span<const double> pred, std::span<const double> gt) {
    if (pred.size() != gt.size()) throw DimensionError("l1: prediction and target sizes differ");
    LossResult r;
    r.grad.assign(pred.size(), 0.0);
    if (pred.empty()) return r;
    const double inv = 1.0 / double(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        r.value += std::abs(d);
        r.grad[i] = sign(d) * inv;
    }
    r.value *= inv;
    return r;
}

LossResult loss_normal(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask) {
    if (pred.size() != gt.size() || pred.size() != mask.size() * 3) {
        throw DimensionError("normal loss: image sizes differ");
    }
    LossResult r;
    r.grad.assign(pred.size(), 0.0);
    std::size_t valid = 0;
    for (auto m : mask) valid += m ? 1 : 0;
    if (valid == 0) return r;
    const double inv = 1.0 / (3.0 * double(valid));
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = pred[p * 3 + c] - gt[p * 3 + c];
            r.value += std::abs(d);
            r.grad[p * 3 + c] = sign(d) * inv;
        }
    }
    r.value *= inv;
    return r;
}

namespace {

double side_loss(const MapImage& s, const MapImage& t, std::vector<Vec3>& grad, std::size_t& disagree) {
    if (s.width != t.width || s.height != t.height) throw DimensionError("non-rigid loss: map resolutions differ");
    const std::size_t n = std::size_t(s.width) * s.height;
    grad.assign(n, Vec3::Zero());
    std::size_t valid = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (s.mask[p] && t.mask[p]) ++valid;
        if (bool(s.mask[p]) != bool(t.mask[p])) ++disagree;
    }
    if (valid == 0) return 0.0;
    const double inv = 1.0 / double(valid);
    double sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        if (!(s.mask[p] && t.mask[p])) continue;
        for (int c = 0; c < 3; ++c) {
            const double d = double(s.values[p][c]) - double(t.values[p][c]);
            sum += std::abs(d);
            grad[p][c] = sign(d) * inv;
        }
    }
    return sum * inv;
}

}  // namespace

NonrigidLoss loss_nonrigid(const DeformationMap& student, const DeformationMap& teacher) {
    NonrigidLoss r;
    std::size_t disagree = 0;
    r.front = side_loss(student.front, teacher.front, r.grad_front, disagree);
    r.back = side_loss(student.back, teacher.back, r.grad_back, disagree);
    r.value = r.front + r.back;
    const std::size_t total = r.grad_front.size() + r.grad_back.size();
    r.mask_disagreement = total ? double(disagree) / double(total) : 0.0;
    r.warning = r.mask_disagreement > 0.2;
    return r;
}

std::vector<Vec3> nonrigid_vertex_grad(const MapRasters& rasters, const NonrigidLoss& loss, std::size_t vertex_count) {
    std::vector<Vec3> g = apply_raster_transpose(rasters.front, loss.grad_front, vertex_count);
    const std::vector<Vec3> b = apply_raster_transpose(rasters.back, loss.grad_back, vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) g[i] += b[i];
    return g;
}

}  // namespace meshsplat
