// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "../support/fixtures.hpp"
#include "../support/semantic_sweep.hpp"

#include <doctest.h>

using namespace meshsplat;

TEST_CASE("image losses") {
    Rng rng(1);
    const std::uint32_t W = 16, H = 12;
    std::vector<double> img(W * H * 3), nrm(W * H * 3);
    for (double& v : img) v = rng.uniform(0.0, 0.8);
    for (double& v : nrm) v = rng.uniform(-1.0, 1.0);
    const std::vector<std::uint8_t> mask(W * H, 1);
    SUBCASE("identical images") {
        const LossResult l1 = loss_l1(img, img);
        const LossResult d = loss_dssim(img, img, W, H, 3);
        const LossResult n = loss_normal(nrm, nrm, mask);
        for (const LossResult* r : {&l1, &d, &n}) {
            CHECK(r->value == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
            for (double g : r->grad) CHECK(std::abs(g) < 1e-12);
        }
        CHECK(ssim(img, img, W, H, 3) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant shift of 0.1") {
        std::vector<double> shifted = img;
        for (double& v : shifted) v += 0.1;
        CHECK(loss_l1(shifted, img).value == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("masked normal loss ignores unmasked pixels") {
        std::vector<double> other = nrm;
        std::vector<std::uint8_t> half(W * H, 0);
        for (std::size_t p = 0; p < half.size(); p += 2) half[p] = 1;
        for (std::size_t p = 1; p < half.size(); p += 2)
            for (int c = 0; c < 3; ++c) other[p * 3 + c] += 0.5;
        CHECK(loss_normal(other, nrm, half).value == 0.0);
    }
    SUBCASE("D-SSIM gradient") {
        std::vector<double> gt(img);
        for (double& v : gt) v = std::clamp(v + rng.uniform(-0.2, 0.2), 0.0, 1.0);
        const LossResult d = loss_dssim(img, gt, W, H, 3);
        const auto rep = grad_check(
            "dssim", [&](std::span<const double> x) { return loss_dssim(x, gt, W, H, 3).value; }, img, d.grad,
            kSmoothTolerance, GradCheckOptions{1e-5, {}, sample_coords(img.size(), 60, 2)});
        CHECK(rep.passed());
    }
}

TEST_CASE("semantic labels") {
    RiggedTemplate t = fixture::grid_template(2, 2);
    t.vertices[0] = Vec3f::Zero();
    SUBCASE("origin carries the segmentation color") {
        const auto e = semantic_labels(t, 25.0);
        CHECK((e[0] - t.segmentation_colors[0].cast<double>()).norm() < 1e-12);
    }
    SUBCASE("barycenter gets the corner mean") {
        GaussianTexture tex = init_texture(t, 1, 1, 0);
        for (auto& uv : tex.uv) uv = Vec2f(1.0f / 3.0f, 1.0f / 3.0f);
        const auto e = semantic_labels(t, 25.0);
        const auto g = gaussian_semantic_labels(t, tex, 25.0);
        const Face& f = t.faces[0];
        CHECK((g[0] - (e[f[0]] + e[f[1]] + e[f[2]]) / 3.0).norm() < 1e-6);
    }
    SUBCASE("doubling tau doubles the frequency") {
        const double tau = 25.0;
        const Vec3 v = t.vertices[4].cast<double>();
        const Vec3 c = t.segmentation_colors[4].cast<double>();
        const auto a = semantic_labels(t, 2 * tau);
        for (int k = 0; k < 3; ++k) CHECK(a[4][k] - c[k] == doctest::Approx(std::sin(2 * tau * v[k])).epsilon(1e-6));
    }
    CHECK_THROWS(semantic_labels(t, 0.0));
}

TEST_CASE("non-rigid map loss") {
    const RiggedTemplate t = fixture::grid_template(9, 4);
    REQUIRE(t.vertices.size() == 50);
    std::vector<Vec3> canon;
    for (const auto& v : t.vertices) canon.push_back(v.cast<double>());
    const MapRasters rasters = make_map_rasters(canon, t.faces, 24, 16);
    Rng rng(5);
    std::vector<Vec3> teacher_delta(50);
    for (auto& d : teacher_delta) d = Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.01;
    const DeformationMap teacher = rasterize_mesh_maps(rasters, teacher_delta);
    SUBCASE("equal maps") { CHECK(loss_nonrigid(teacher, teacher).value == 0.0); }
    SUBCASE("constant offset on the front map") {
        const DeformationMap zero = rasterize_mesh_maps(rasters, std::vector<Vec3>(50, Vec3::Zero()));
        DeformationMap shifted = zero;
        const Vec3f c(0.01f, -0.02f, 0.005f);
        for (std::size_t p = 0; p < shifted.front.values.size(); ++p)
            if (shifted.front.mask[p]) shifted.front.values[p] = c;
        const NonrigidLoss l = loss_nonrigid(shifted, zero);
        CHECK(l.value == doctest::Approx(0.035).epsilon(1e-6));
        CHECK(l.back == 0.0);
    }
    SUBCASE("vertex gradient against central differences") {
        std::vector<double> x;
        for (std::size_t i = 0; i < 50; ++i)
            for (int k = 0; k < 3; ++k) x.push_back(0.01 * rng.normal());
        auto unpack = [](std::span<const double> v) {
            std::vector<Vec3> d(v.size() / 3);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = Vec3(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
            return d;
        };
        const NonrigidLoss l = loss_nonrigid(rasterize_mesh_maps(rasters, unpack(x)), teacher);
        const auto g = nonrigid_vertex_grad(rasters, l, 50);
        std::vector<double> analytic;
        for (const auto& v : g)
            for (int k = 0; k < 3; ++k) analytic.push_back(v[k]);
        // Maps store floats, so the quotient carries ~1e-4 relative noise;
        // larger steps cross L1 kinks.
        const auto rep = grad_check(
            "nonrigid",
            [&](std::span<const double> v) { return loss_nonrigid(rasterize_mesh_maps(rasters, unpack(v)), teacher).value; },
            x, analytic, 1e-2, GradCheckOptions{1e-5, {}, {}});
        CHECK(rep.passed());
        MESSAGE("max relative error " << rep.max_rel_error);
    }
}

TEST_CASE("semantic loss") {
    SUBCASE("equal renders") {
        MeshSemantic m;
        m.values = {0.1, 0.2, 0.3, 0, 0, 0};
        m.covered = {1, 0};
        const std::vector<double> alpha{1.0, 0.0};
        CHECK(loss_semantic(m.values, alpha, m).value == 0.0);
    }
    SUBCASE("offset sweep decreases toward alignment and the gradient points back") {
        const sweep::Setup s;
        const auto samples = sweep::run(s, 8);
        CHECK(s.loss(2.0).value > 0.0);
        double previous = s.loss(0.0).value;
        for (const auto& k : samples) {
            CHECK(k.loss > previous);
            CHECK(k.analytic > 0.0);
            CHECK(k.numeric > 0.0);
            previous = k.loss;
        }
    }
}

TEST_CASE("gradient checker") {
    SUBCASE("quadratic") {
        const std::vector<double> x{0.3, -1.2, 2.0};
        const std::vector<double> g{0.6, -2.4, 4.0};
        auto f = [](std::span<const double> v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; };
        CHECK(grad_check("quadratic", f, x, g, 1e-6).passed());
        const std::vector<double> wrong{0.6, -2.4, 4.1};
        const auto rep = grad_check("quadratic", f, x, wrong, 1e-6);
        CHECK_FALSE(rep.passed());
        CHECK(rep.failing == std::vector<std::size_t>{2});
    }
    SUBCASE("linear layer") {
        Rng rng(2);
        Mlp m = make_mlp({5, 3}, rng);
        MatX x = MatX::Random(5, 4);
        MatX up = MatX::Random(3, 4);
        MlpCache cache;
        mlp_forward(m, x, VecX(), &cache);
        MlpGrad g = MlpGrad::zeros_like(m);
        mlp_backward(m, cache, up, 0, g);
        const auto rep = grad_check(
            "linear",
            [&](std::span<const double> p) {
                Mlp q = m;
                set_mlp_parameters(q, p);
                return (mlp_forward(q, x, VecX()).array() * up.array()).sum();
            },
            mlp_parameters(m), flatten(g), 1e-4, GradCheckOptions{1e-3, float_representable, {}});
        CHECK(rep.passed());
    }
}

TEST_CASE("adam") {
    Adam opt(2, AdamConfig{0.05});
    std::vector<double> x{1.0, -2.0};
    for (int it = 0; it < 500; ++it) {
        const std::vector<double> g{2 * x[0], 2 * x[1]};
        opt.step(x, g);
    }
    CHECK(std::abs(x[0]) < 1e-2);
    CHECK(std::abs(x[1]) < 1e-2);
    CHECK(opt.steps() == 500);
}

TEST_CASE("fine-tuning on its own renders stays put") {
    const RiggedTemplate tpl = fixture::small_rig();
    GaussianTexture tex = init_texture(tpl, 1, 1, 2);
    paint_from_segmentation(tex, tpl);
    MotionConfig mc;
    mc.frames = 3;
    mc.width = mc.height = 32;
    const MotionSequence seq = make_motion(tpl, mc);
    StudentConfig sc = student_config_for(tpl, tex, 3);
    sc.hidden = 16;
    sc.layers = 2;
    const StudentBundle b = make_student(sc, 1);
    std::vector<FinetuneFrame> frames;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        AnimateOptions o;
        o.render.normal = true;
        o.frame_index = t;
        const FrameState st = animate_frame(tpl, tex, &b, seq.frames[t], seq.cameras[seq.camera_index[t]], o);
        frames.push_back({st.target.color, st.target.normal, st.target.alpha});
    }
    // One step: the loss is zero and the gradient vanishes. Later steps are
    // not checked because the L1 subgradient turns round-off into full steps.
    TrainConfig tc;
    tc.iterations = 1;
    const TrainResult r = finetune(tpl, tex, b, frames, seq, tc);
    double drift = 0.0;
    for (std::size_t i = 0; i < b.color_shapes.size(); ++i)
        drift = std::max({drift, double(std::abs(r.bundle.color_shapes[i] - b.color_shapes[i])),
                          double(std::abs(r.bundle.position_shapes[i] - b.position_shapes[i]))});
    const auto h0 = mlp_parameters(b.head_map), h1 = mlp_parameters(r.bundle.head_map);
    for (std::size_t i = 0; i < h0.size(); ++i) drift = std::max(drift, std::abs(h1[i] - h0[i]));
    CHECK(drift < 1e-9);
    CHECK(r.curve.front().loss.total < 1e-12);
}

TEST_CASE("half precision bundles") {
    StudentConfig c;
    c.theta_dim = 9;
    c.hidden = 32;
    c.gaussian_count = 4;
    c.frame_count = 2;
    const StudentBundle full = make_student(c, 4);
    SUBCASE("zero weights are unaffected") {
        StudentBundle z = full;
        for (Mlp* m : {&z.body, &z.cloth, &z.head_map, &z.body_map}) zero_mlp(*m);
        const StudentBundle q = quantize_bundle(z);
        CHECK(measure_quantization(z, q, 200, 1).max_rel_deviation == 0.0);
    }
    SUBCASE("quantizing twice changes nothing") {
        const StudentBundle q = quantize_bundle(full);
        const StudentBundle qq = quantize_bundle(q);
        CHECK(encode_bundle(q) == encode_bundle(qq));
        CHECK(encode_bundle(decode_bundle(encode_bundle(q))) == encode_bundle(q));
    }
    SUBCASE("deviation is measured") {
        const QuantizeReport r = measure_quantization(full, quantize_bundle(full), 300, 2);
        CHECK(r.samples == 300);
        CHECK(r.max_rel_deviation > 0.0);
        CHECK(r.max_rel_deviation < kQuantizeBound);
        MESSAGE("fp16 relative deviation " << r.max_rel_deviation);
    }
}
