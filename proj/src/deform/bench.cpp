// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/deform.hpp"

#include <chrono>
#include <cmath>

namespace meshsplat {

BenchResult run_bench(const BenchConfig& config) {
    if (config.gaussians == 0 || config.frames == 0 || config.width == 0 || config.height == 0) {
        throw Error(ErrorCode::invalid_argument, "bench needs gaussians, frames and a resolution");
    }
    CapsuleRigConfig rc;
    rc.cloth = true;
    rc.seed = config.seed;
    const RiggedTemplate tpl = make_capsule_rig(rc);
    const double per_face = double(config.gaussians) / double(tpl.faces.size());
    const auto k_lo = std::uint32_t(std::max(1.0, std::floor(per_face)));
    const auto k_hi = std::uint32_t(std::max(1.0, std::ceil(per_face)));
    GaussianTexture tex = init_texture(tpl, k_lo, k_hi, config.seed + 1);
    paint_from_segmentation(tex, tpl);

    MotionConfig mc;
    mc.frames = config.frames;
    mc.seed = config.seed + 2;
    mc.camera_count = 1;
    mc.width = config.width;
    mc.height = config.height;
    const MotionSequence seq = make_motion(tpl, mc);
    // Portrait framing so the rig fills the image at any aspect ratio.
    const double aspect = double(config.width) / double(config.height);
    const double fov = aspect < 1.0 ? 50.0 : 40.0;
    const Camera cam = Camera::look_at(Vec3(0, -3.2, 0.9), Vec3(0, 0, 0.9), Vec3(0, 0, 1), fov, config.width,
                                       config.height);

    StudentConfig sc = student_config_for(tpl, tex, 1);
    const StudentBundle bundle = make_student(sc, config.seed + 3);

    using Clock = std::chrono::steady_clock;
    auto ms = [](Clock::time_point a, Clock::time_point b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
    };
    BenchResult r;
    r.gaussians = tex.size();
    r.vertices = tpl.vertices.size();
    r.frames = config.frames;
    RenderOptions ropt;
    ropt.sort = config.sort;
    const ViewPoint view = ViewPoint::from_camera(cam);
    const auto start = Clock::now();
    for (const FrameInput& frame : seq.frames) {
        const auto t0 = Clock::now();
        std::vector<Vec3> deformed = expression_canonical(tpl, frame.epsilon);
        VecX coeffs;
        std::vector<Vec3> du, dc;
        if (config.student) {
            const std::vector<Vec3> delta = student_deform(bundle, tpl, frame);
            for (std::size_t i = 0; i < deformed.size(); ++i) deformed[i] += delta[i];
            coeffs = blend_coeffs(bundle, frame);
            du = blend_shape_apply(bundle.position_shapes, tex.size(), coeffs);
            dc = blend_shape_apply(bundle.color_shapes, tex.size(), coeffs);
        }
        const auto t1 = Clock::now();
        const PosedSkeleton skel = pose_skeleton(tpl, frame);
        const std::vector<Vec3> posed = lbs_forward(deformed, tpl.skin, skel);
        const auto t2 = Clock::now();
        const std::vector<WorldGaussian> gs = world_gaussians(posed, tpl.faces, tex, view, {du, dc, {}});
        const auto t3 = Clock::now();
        RenderStats st;
        const RenderTarget target = render(gs, cam, ropt, &st);
        (void)target;
        r.student_ms += ms(t0, t1);
        r.skinning_ms += ms(t1, t2);
        r.gaussians_ms += ms(t2, t3);
        r.project_ms += st.project_ms;
        r.sort_ms += st.sort_ms;
        r.bin_ms += st.bin_ms;
        r.raster_ms += st.raster_ms;
    }
    const double total = ms(start, Clock::now());
    const double n = double(config.frames);
    for (double* v : {&r.student_ms, &r.skinning_ms, &r.gaussians_ms, &r.project_ms, &r.sort_ms, &r.bin_ms,
                      &r.raster_ms})
        *v /= n;
    r.total_ms = total / n;
    r.fps = r.total_ms > 0.0 ? 1000.0 / r.total_ms : 0.0;
    return r;
}

}  // namespace meshsplat
