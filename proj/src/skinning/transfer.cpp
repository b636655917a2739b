// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/skinning.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace meshsplat {

std::vector<SkinWeights> transfer_skin_weights(std::span<const Vec3> body_vertices,
                                               std::span<const Face> body_faces,
                                               std::span<const SkinWeights> body_weights,
                                               const TriangleMesh& garment,
                                               const TransferOptions& options) {
    if (body_weights.size() != body_vertices.size()) {
        throw DimensionError("body weight count != body vertex count");
    }
    int joint_count = 0;
    for (const auto& row : body_weights) {
        for (auto j : row.joint) joint_count = std::max(joint_count, j + 1);
    }

    const TriangleBvh bvh(body_vertices, body_faces);
    const std::size_t ng = garment.vertices.size();
    std::vector<Eigen::VectorXd> dense(ng, Eigen::VectorXd::Zero(joint_count));
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < ng; ++i) {
        const ClosestHit hit = bvh.closest(garment.vertices[i].cast<double>());
        if (hit.distance > options.max_distance) {
            outside.push_back(i);
            continue;
        }
        const Face& f = body_faces[hit.face];
        for (int c = 0; c < 3; ++c) {
            const SkinWeights& row = body_weights[f[c]];
            for (int k = 0; k < kMaxInfluences; ++k) {
                if (row.joint[k] >= 0) dense[i][row.joint[k]] += hit.barycentric[c] * row.weight[k];
            }
        }
    }
    if (!outside.empty()) {
        std::ostringstream msg;
        msg << outside.size() << " garment vertices lie farther than " << options.max_distance
            << " m from the body surface: ";
        for (std::size_t k = 0; k < outside.size() && k < 16; ++k) msg << (k ? "," : "") << outside[k];
        if (outside.size() > 16) msg << ",...";
        throw TransferBandError(msg.str(), outside);
    }

    if (options.smoothing_passes > 0 && !garment.faces.empty()) {
        std::vector<std::set<std::uint32_t>> neighbours(ng);
        for (const Face& f : garment.faces) {
            for (int a = 0; a < 3; ++a) {
                neighbours[f[a]].insert(f[(a + 1) % 3]);
                neighbours[f[(a + 1) % 3]].insert(f[a]);
            }
        }
        const double alpha = options.smoothing_strength;
        for (int pass = 0; pass < options.smoothing_passes; ++pass) {
            std::vector<Eigen::VectorXd> next = dense;
            for (std::size_t i = 0; i < ng; ++i) {
                if (neighbours[i].empty()) continue;
                Eigen::VectorXd mean = Eigen::VectorXd::Zero(joint_count);
                for (auto n : neighbours[i]) mean += dense[n];
                mean /= double(neighbours[i].size());
                next[i] = (1.0 - alpha) * dense[i] + alpha * mean;
            }
            dense.swap(next);
        }
    }

    std::vector<SkinWeights> out(ng);
    for (std::size_t i = 0; i < ng; ++i) {
        std::vector<std::pair<std::int32_t, double>> entries;
        for (int j = 0; j < joint_count; ++j) {
            if (dense[i][j] > 0.0) entries.emplace_back(j, dense[i][j]);
        }
        out[i] = make_skin_row(std::move(entries));
    }
    return out;
}

std::vector<SkinWeights> transfer_skin_weights(const RiggedTemplate& body, const TriangleMesh& garment,
                                               const TransferOptions& options) {
    std::vector<Vec3> verts(body.vertices.size());
    for (std::size_t i = 0; i < verts.size(); ++i) verts[i] = body.vertices[i].cast<double>();
    return transfer_skin_weights(verts, body.faces, body.skin, garment, options);
}

}  // namespace meshsplat
