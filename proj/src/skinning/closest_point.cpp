// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/skinning.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace meshsplat {

// Region-based closest point (Ericson, Real-Time Collision Detection 5.1.5).
ClosestHit closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    ClosestHit hit;
    auto finish = [&](double wa, double wb, double wc) {
        hit.barycentric = Vec3(wa, wb, wc);
        hit.point = wa * a + wb * b + wc * c;
        hit.distance = (p - hit.point).norm();
        return hit;
    };
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return finish(1, 0, 0);
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return finish(0, 1, 0);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return finish(1 - v, v, 0);
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return finish(0, 0, 1);
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return finish(1 - w, 0, w);
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return finish(0, 1 - w, w);
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return finish(1 - v - w, v, w);
}

TriangleBvh::TriangleBvh(std::span<const Vec3> vertices, std::span<const Face> faces)
    : vertices_(vertices.begin(), vertices.end()), faces_(faces.begin(), faces.end()) {
    if (faces_.empty()) throw ValidationError("closest-point query over an empty mesh");
    order_.resize(faces_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * faces_.size());
    build(0, std::uint32_t(faces_.size()));
}

std::uint32_t TriangleBvh::build(std::uint32_t first, std::uint32_t count) {
    const auto index = std::uint32_t(nodes_.size());
    nodes_.push_back({});
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = -lo;
    Vec3 clo = lo, chi = hi;
    for (std::uint32_t k = first; k < first + count; ++k) {
        const Face& f = faces_[order_[k]];
        Vec3 centroid = Vec3::Zero();
        for (auto v : f) {
            lo = lo.cwiseMin(vertices_[v]);
            hi = hi.cwiseMax(vertices_[v]);
            centroid += vertices_[v] / 3.0;
        }
        clo = clo.cwiseMin(centroid);
        chi = chi.cwiseMax(centroid);
    }
    nodes_[index].lo = lo;
    nodes_[index].hi = hi;
    if (count <= 4) {
        nodes_[index].first = first;
        nodes_[index].count = count;
        return index;
    }
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const std::uint32_t mid = first + count / 2;
    auto centroid_of = [&](std::uint32_t f) {
        const Face& face = faces_[f];
        return vertices_[face[0]][axis] + vertices_[face[1]][axis] + vertices_[face[2]][axis];
    };
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = centroid_of(a), cb = centroid_of(b);
                         return ca < cb || (ca == cb && a < b);
                     });
    const std::uint32_t left = build(first, mid - first);
    const std::uint32_t right = build(mid, first + count - mid);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
}

ClosestHit TriangleBvh::closest(const Vec3& query) const {
    auto box_distance = [&](const Node& n) {
        const Vec3 d = (n.lo - query).cwiseMax(query - n.hi).cwiseMax(Vec3::Zero());
        return d.norm();
    };
    ClosestHit best;
    best.distance = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        if (box_distance(n) > best.distance) continue;
        if (n.count > 0) {
            for (std::uint32_t k = n.first; k < n.first + n.count; ++k) {
                const std::uint32_t f = order_[k];
                const Face& face = faces_[f];
                ClosestHit hit = closest_point_on_triangle(query, vertices_[face[0]], vertices_[face[1]],
                                                           vertices_[face[2]]);
                // Ties resolve to the lowest face index for determinism.
                if (hit.distance < best.distance || (hit.distance == best.distance && f < best.face)) {
                    hit.face = f;
                    best = hit;
                }
            }
            continue;
        }
        const double dl = box_distance(nodes_[n.left]);
        const double dr = box_distance(nodes_[n.right]);
        if (dl < dr) {
            stack.push_back(n.right);
            stack.push_back(n.left);
        } else {
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
    }
    return best;
}

}  // namespace meshsplat
