// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/deform.hpp"

namespace meshsplat {

std::vector<Vec3> expression_canonical(const RiggedTemplate& tpl, std::span<const float> epsilon) {
    const std::size_t nv = tpl.vertices.size();
    if (!epsilon.empty() && epsilon.size() != tpl.expression_count) {
        throw DimensionError("epsilon has " + std::to_string(epsilon.size()) + " values, template has " +
                             std::to_string(tpl.expression_count) + " expression channels");
    }
    std::vector<Vec3> out(nv);
    for (std::size_t i = 0; i < nv; ++i) out[i] = tpl.vertices[i].cast<double>();
    for (std::size_t c = 0; c < epsilon.size(); ++c) {
        const double w = epsilon[c];
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < nv; ++i) out[i] += w * tpl.expression_delta(c, i).cast<double>();
    }
    return out;
}

FrameState animate_frame(const RiggedTemplate& tpl, const GaussianTexture& tex, const StudentBundle* bundle,
                         const FrameInput& input, const Camera& cam, const AnimateOptions& options) {
    FrameInput frame = input;
    if (bundle && options.frame_index) {
        const auto z = bundle->embedding(*options.frame_index);
        frame.z.assign(z.begin(), z.end());
    }
    const std::size_t nv = tpl.vertices.size();
    if (!options.extra_delta.empty() && options.extra_delta.size() != nv) {
        throw DimensionError("extra delta has " + std::to_string(options.extra_delta.size()) + " rows, template has " +
                             std::to_string(nv) + " vertices");
    }
    if (!options.semantic.empty() && options.semantic.size() != tex.size()) {
        throw DimensionError("semantic labels do not match the gaussian count");
    }

    FrameState st;
    st.canonical = expression_canonical(tpl, frame.epsilon);
    st.deformed = st.canonical;
    if (bundle && options.use_student) {
        st.student_delta = student_deform(*bundle, tpl, frame);
        for (std::size_t i = 0; i < nv; ++i) st.deformed[i] += st.student_delta[i];
    }
    for (std::size_t i = 0; i < options.extra_delta.size(); ++i) st.deformed[i] += options.extra_delta[i];

    st.skeleton = pose_skeleton(tpl, frame);
    st.posed = lbs_forward(st.deformed, tpl.skin, st.skeleton);

    GaussianResiduals res;
    if (bundle && options.use_blend_shapes) {
        st.coeffs = blend_coeffs(*bundle, frame);
        st.delta_u = blend_shape_apply(bundle->position_shapes, tex.size(), st.coeffs);
        st.delta_c = blend_shape_apply(bundle->color_shapes, tex.size(), st.coeffs);
        res.delta_u = st.delta_u;
        res.delta_c = st.delta_c;
    }
    res.semantic = options.semantic;
    st.gaussians = world_gaussians(st.posed, tpl.faces, tex, ViewPoint::from_camera(cam), res);
    if (options.render_image) st.target = render(st.gaussians, cam, options.render);
    return st;
}

}  // namespace meshsplat
