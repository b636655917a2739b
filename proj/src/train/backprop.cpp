// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"

#include <unsupported/Eigen/AutoDiff>

namespace meshsplat {

namespace {

using Ad = Eigen::AutoDiffScalar<Eigen::Matrix<double, 9, 1>>;
using AdVec = Eigen::Matrix<Ad, 3, 1>;

// d mean / d (v1, v2, v3) for mean = p + R (gamma e_x + delta_u).
Eigen::Matrix<double, 3, 9> mean_jacobian(const Vec3& a, const Vec3& b, const Vec3& c, double u, double v,
                                          double gamma, const Vec3& du) {
    AdVec v1, v2, v3;
    for (int k = 0; k < 3; ++k) {
        v1[k] = Ad(a[k], 9, k);
        v2[k] = Ad(b[k], 9, 3 + k);
        v3[k] = Ad(c[k], 9, 6 + k);
    }
    const TriangleFrameT<Ad> f = triangle_frame_unchecked<Ad>(v1, v2, v3, u, v);
    const AdVec local(Ad(gamma + du.x()), Ad(du.y()), Ad(du.z()));
    const AdVec m = f.p + f.R * local;
    Eigen::Matrix<double, 3, 9> J;
    for (int r = 0; r < 3; ++r) J.row(r) = m[r].derivatives().transpose();
    return J;
}


}  // namespace

StepResult train_step(const StepContext& ctx, const FrameInput& frame_in, std::size_t embedding_row,
                      const Camera& cam, const FrameTargets& targets, bool need_grad) {
    if (!ctx.tpl || !ctx.tex) throw Error(ErrorCode::invalid_argument, "train_step needs a template and a texture");
    const RiggedTemplate& tpl = *ctx.tpl;
    const GaussianTexture& tex = *ctx.tex;
    const StudentBundle* bundle = ctx.bundle;
    const LossWeights& lw = ctx.weights;
    const std::size_t nv = tpl.vertices.size(), ng = tex.size();
    const std::size_t np = std::size_t(cam.width) * cam.height;

    FrameInput frame = frame_in;
    if (bundle && bundle->config.embedding_dim > 0) {
        const auto z = bundle->embedding(embedding_row);
        frame.z.assign(z.begin(), z.end());
    }

    // Forward, in the same order as animate_frame.
    StepResult res;
    std::vector<Vec3> deformed = expression_canonical(tpl, frame.epsilon);
    StudentTape tape;
    if (bundle) {
        tape = student_forward(*bundle, tpl, frame);
        for (std::size_t i = 0; i < nv; ++i) deformed[i] += tape.delta[i];
        res.student_delta = tape.delta;
    }
    if (!ctx.extra_delta.empty()) {
        if (ctx.extra_delta.size() != nv) throw DimensionError("extra delta size != vertex count");
        for (std::size_t i = 0; i < nv; ++i) deformed[i] += ctx.extra_delta[i];
    }
    const PosedSkeleton skel = pose_skeleton(tpl, frame);
    const std::vector<Vec3> posed = lbs_forward(deformed, tpl.skin, skel);

    CoeffTape ctape;
    std::vector<Vec3> du, dc;
    if (bundle) {
        ctape = blend_coeffs_forward(*bundle, frame);
        du = blend_shape_apply(bundle->position_shapes, ng, ctape.coeffs);
        dc = blend_shape_apply(bundle->color_shapes, ng, ctape.coeffs);
    }
    auto add_extra = [&](std::vector<Vec3>& dst, std::span<const Vec3> extra) {
        if (extra.empty()) return;
        if (extra.size() != ng) throw DimensionError("per-gaussian offset size != gaussian count");
        if (dst.empty()) dst.assign(ng, Vec3::Zero());
        for (std::size_t g = 0; g < ng; ++g) dst[g] += extra[g];
    };
    add_extra(du, ctx.extra_delta_u);
    add_extra(dc, ctx.extra_delta_c);

    GaussianResiduals residuals{du, dc, ctx.gaussian_labels};
    const ViewPoint view = ViewPoint::from_camera(cam);
    const std::vector<WorldGaussian> gaussians = world_gaussians(posed, tpl.faces, tex, view, residuals);

    const bool use_normal = !targets.normal.empty() && lw.normal > 0.0;
    const bool use_sem = lw.semantic > 0.0 && !ctx.vertex_labels.empty() && !ctx.gaussian_labels.empty() &&
                         !cam.orthographic();
    RenderOptions ropt;
    ropt.normal = use_normal;
    ropt.semantic = use_sem;
    res.target = render(gaussians, cam, ropt);
    const RenderTarget& rt = res.target;

    // Losses.
    LossTerms& L = res.loss;
    RenderGradients up;
    if (!targets.color.empty()) {
        if (targets.color.size() != np * 3) throw DimensionError("color target size != camera resolution");
        LossResult l1 = loss_l1(rt.color, targets.color);
        L.l1 = l1.value;
        up.color = std::move(l1.grad);
        if (lw.ssim > 0.0) {
            const LossResult d = loss_dssim(rt.color, targets.color, cam.width, cam.height, 3);
            L.dssim = d.value;
            for (std::size_t i = 0; i < up.color.size(); ++i) up.color[i] += lw.ssim * d.grad[i];
        }
    }
    if (use_normal) {
        if (targets.alpha.size() != np) throw DimensionError("alpha target size != camera resolution");
        std::vector<std::uint8_t> mask(np);
        for (std::size_t p = 0; p < np; ++p) mask[p] = targets.alpha[p] >= 0.5 ? 1 : 0;
        LossResult n = loss_normal(rt.normal, targets.normal, mask);
        L.normal = n.value;
        for (auto& g : n.grad) g *= lw.normal;
        up.normal = std::move(n.grad);
    }
    NonrigidLoss nonrigid;
    const bool have_maps = bundle && targets.maps && ctx.rasters;
    if (have_maps) {
        nonrigid = loss_nonrigid(rasterize_mesh_maps(*ctx.rasters, tape.delta), *targets.maps);
        L.nonrigid = nonrigid.value;
        L.mask_disagreement = nonrigid.mask_disagreement;
    }
    if (use_sem) {
        std::vector<Vec3> ref = expression_canonical(tpl, frame.epsilon);
        if (!ctx.extra_delta.empty())
            for (std::size_t i = 0; i < nv; ++i) ref[i] += ctx.extra_delta[i];
        const MeshSemantic mesh = render_mesh_semantic(lbs_forward(ref, tpl.skin, skel), tpl.faces, ctx.vertex_labels, cam);
        LossResult s = loss_semantic(rt.semantic, rt.alpha, mesh);
        L.semantic = s.value;
        for (auto& g : s.grad) g *= lw.semantic;
        up.semantic = std::move(s.grad);
    }
    L.total = L.l1 + lw.ssim * L.dssim + lw.normal * L.normal + lw.nonrigid * L.nonrigid + lw.semantic * L.semantic;

    const StepSwitches& sw = ctx.switches;
    if (!need_grad || !(sw.student || sw.texture || sw.blend_shapes)) return res;
    if (sw.student || sw.blend_shapes) {
        if (!bundle) throw Error(ErrorCode::invalid_argument, "student gradients need a bundle");
    }

    // Splat backward restricted to color, opacity and mean. The semantic
    // term only reaches the means.
    std::vector<double> up_semantic = std::move(up.semantic);
    up.semantic.clear();
    RenderOptions photo = ropt;
    photo.semantic = false;
    SplatGradients sg = render_backward(gaussians, cam, photo, up);
    if (use_sem) {
        RenderGradients su;
        su.semantic = std::move(up_semantic);
        const SplatGradients ss = render_backward(gaussians, cam, ropt, su);
        for (std::size_t g = 0; g < ng; ++g) sg.mean3d[g] += ss.mean3d[g];
    }

    StepGradients& G = res.grad;
    if (sw.texture) {
        G.opacity_logit.assign(ng, 0.0);
        G.sh.assign(tex.sh.size(), 0.0);
        G.gamma.assign(ng, 0.0);
    }
    std::vector<Vec3> g_du(sw.blend_shapes ? ng : 0, Vec3::Zero()), g_dc(sw.blend_shapes ? ng : 0, Vec3::Zero());
    std::vector<Vec3> g_posed(sw.student ? nv : 0, Vec3::Zero());
    const std::size_t nb = sh_basis_count(tex.sh_degree);
    std::vector<double> basis(nb);
    for (std::size_t g = 0; g < ng; ++g) {
        const Vec3& g3 = sg.mean3d[g];
        const Vec3& gc_raw = sg.color[g];
        const double go = sg.opacity[g];
        if (g3.isZero(0.0) && gc_raw.isZero(0.0) && go == 0.0) continue;
        const Face& f = tpl.faces[tex.face[g]];
        const Vec2 uv = tex.uv[g].cast<double>();
        const TriangleFrame fr = triangle_frame(posed[f[0]], posed[f[1]], posed[f[2]], uv, tex.face[g]);
        const Vec3 dug = du.empty() ? Vec3::Zero() : du[g];
        const Vec3 dcg = dc.empty() ? Vec3::Zero() : dc[g];

        // The view direction and R^T d are held fixed.
        const Vec3 local_dir = fr.R.transpose() * view.toward(gaussians[g].mean);
        const Vec3 raw = sh_eval(tex.sh_degree, tex.sh_of(g), local_dir) + dcg;
        Vec3 gc = Vec3::Zero();
        for (int c = 0; c < 3; ++c) gc[c] = (raw[c] > 0.0 && raw[c] < 1.0) ? gc_raw[c] : 0.0;

        if (sw.texture) {
            const double o = gaussians[g].opacity;
            G.opacity_logit[g] = go * o * (1.0 - o);
            sh_basis(tex.sh_degree, local_dir, basis.data());
            double* gs = G.sh.data() + g * tex.sh_stride();
            for (std::size_t k = 0; k < nb; ++k)
                for (int c = 0; c < 3; ++c) gs[k * 3 + c] = basis[k] * gc[c];
            G.gamma[g] = fr.n.dot(g3);
        }
        if (sw.blend_shapes) {
            g_du[g] = fr.R.transpose() * g3;
            g_dc[g] = gc;
        }
        if (sw.student && !g3.isZero(0.0)) {
            const auto J = mean_jacobian(posed[f[0]], posed[f[1]], posed[f[2]], uv[0], uv[1], tex.gamma[g], dug);
            const Eigen::Matrix<double, 9, 1> gv = J.transpose() * g3;
            for (int k = 0; k < 3; ++k) g_posed[f[k]] += gv.segment<3>(3 * k);
        }
    }

    if (sw.student) {
        G.delta = lbs_backward(tpl, skel, g_posed);
        if (have_maps && lw.nonrigid > 0.0) {
            const std::vector<Vec3> gn = nonrigid_vertex_grad(*ctx.rasters, nonrigid, nv);
            for (std::size_t i = 0; i < nv; ++i) G.delta[i] += lw.nonrigid * gn[i];
        }
        G.body = MlpGrad::zeros_like(bundle->body);
        G.cloth = MlpGrad::zeros_like(bundle->cloth);
        const VecX gcode = student_backward(*bundle, tape, G.delta, G.body, G.cloth);
        const std::uint32_t td = bundle->config.theta_dim, ed = bundle->config.embedding_dim;
        G.embedding.assign(ed, 0.0);
        for (std::uint32_t k = 0; k < ed; ++k) G.embedding[k] = gcode[td + k];
    }
    if (sw.blend_shapes) {
        G.position_shapes.assign(bundle->position_shapes.size(), 0.0);
        G.color_shapes.assign(bundle->color_shapes.size(), 0.0);
        VecX gcoef = blend_shape_backward(bundle->position_shapes, ctape.coeffs, g_du, G.position_shapes);
        gcoef += blend_shape_backward(bundle->color_shapes, ctape.coeffs, g_dc, G.color_shapes);
        G.head_map = MlpGrad::zeros_like(bundle->head_map);
        G.body_map = MlpGrad::zeros_like(bundle->body_map);
        blend_coeffs_backward(*bundle, ctape, gcoef, G.head_map, G.body_map);
    }
    return res;
}

}  // namespace meshsplat
