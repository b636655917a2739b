// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/skinning.hpp"

#include <sstream>

namespace meshsplat {

RiggedTemplate build_clothed_template(const RiggedTemplate& body,
                                      const std::vector<ClothingComponent>& components,
                                      const FrameInput& ref_frame, const TransferOptions& options) {
    validate(body);
    if (components.empty()) {
        return body;
    }
    validate(ref_frame, body);
    const PosedSkeleton skel = pose_skeleton(body, ref_frame);
    const std::vector<Vec3> posed_body = lbs_forward(body, skel);

    RiggedTemplate out = body;
    for (std::size_t c = 0; c < components.size(); ++c) {
        const ClothingComponent& comp = components[c];
        const auto weights = transfer_skin_weights(posed_body, body.faces, body.skin, comp.mesh, options);

        std::vector<Vec3> posed(comp.mesh.vertices.size());
        for (std::size_t i = 0; i < posed.size(); ++i) posed[i] = comp.mesh.vertices[i].cast<double>();
        const InverseSkinResult canon = lbs_inverse(skel, posed, weights);
        for (std::size_t i = 0; i < posed.size(); ++i) {
            if (canon.singular[i]) {
                std::ostringstream msg;
                msg << "component " << c << " vertex " << i
                    << " has a singular blended skinning matrix (condition " << canon.condition[i] << ")";
                throw ValidationError(msg.str(), {i});
            }
        }

        const auto base = std::uint32_t(out.vertices.size());
        for (std::size_t i = 0; i < posed.size(); ++i) {
            out.vertices.push_back(canon.points[i].cast<float>());
            out.skin.push_back(weights[i]);
            out.labels.push_back(comp.label);
            out.segmentation_colors.push_back(comp.color);
            out.cloth_mask.push_back(comp.label == ComponentLabel::cloth ? 1 : 0);
        }
        for (const Face& f : comp.mesh.faces) {
            out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
        }
    }

    // Expression channels only move body vertices; components get zero rows.
    const std::size_t nv_body = body.vertices.size();
    const std::size_t nv = out.vertices.size();
    std::vector<float> basis(std::size_t(out.expression_count) * nv * 3, 0.0f);
    for (std::uint32_t e = 0; e < out.expression_count; ++e) {
        std::copy_n(body.expression_basis.begin() + std::ptrdiff_t(e * nv_body * 3), nv_body * 3,
                    basis.begin() + std::ptrdiff_t(e * nv * 3));
    }
    out.expression_basis = std::move(basis);
    validate(out);
    return out;
}

}  // namespace meshsplat
