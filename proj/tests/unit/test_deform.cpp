// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "../support/fixtures.hpp"

#include <doctest.h>

using namespace meshsplat;

namespace {

StudentBundle zeroed(StudentBundle b) {
    for (Mlp* m : {&b.body, &b.cloth, &b.head_map, &b.body_map}) zero_mlp(*m);
    std::fill(b.embeddings.begin(), b.embeddings.end(), 0.0f);
    std::fill(b.position_shapes.begin(), b.position_shapes.end(), 0.0f);
    std::fill(b.color_shapes.begin(), b.color_shapes.end(), 0.0f);
    return b;
}

struct Scene {
    RiggedTemplate tpl = fixture::small_rig();
    GaussianTexture tex;
    StudentBundle bundle;
    MotionSequence seq;
    Scene() {
        tex = init_texture(tpl, 1, 1, 2);
        paint_from_segmentation(tex, tpl);
        MotionConfig mc;
        mc.frames = 4;
        mc.width = mc.height = 48;
        seq = make_motion(tpl, mc);
        StudentConfig c = student_config_for(tpl, tex, 4);
        c.hidden = 32;
        bundle = make_student(c, 3);
    }
};

}  // namespace

TEST_CASE("positional encoding") {
    SUBCASE("origin with six levels") {
        const VecX e = positional_encode(Vec3::Zero(), 6);
        REQUIRE(e.size() == 39);
        CHECK(encoding_dim(6) == 39);
        CHECK(e.head<3>().isZero());
        double ones = 0.0, zeros = 0.0;
        for (int k = 3; k < 39; ++k) (e[k] == 1.0 ? ones : zeros) += 1.0;
        CHECK(ones == 18.0);
        CHECK(zeros == 18.0);
    }
    SUBCASE("zero levels is the identity") {
        const Vec3 v(0.3, -1.2, 2.0);
        CHECK((positional_encode(v, 0) - v).norm() == 0.0);
    }
    SUBCASE("dimension formula") {
        for (std::uint32_t L = 0; L <= 8; ++L) CHECK(std::size_t(positional_encode(Vec3(1, 2, 3), L).size()) == 3 + 6 * L);
    }
}

TEST_CASE("student deformation field") {
    Scene s;
    const FrameInput& f = s.seq.frames[1];
    SUBCASE("zero networks give no deformation") {
        for (const Vec3& d : student_deform(zeroed(s.bundle), s.tpl, f)) CHECK(d.isZero(0.0));
    }
    SUBCASE("body vertices ignore the cloth network") {
        StudentBundle b = s.bundle;
        const auto base = student_deform(b, s.tpl, f);
        b.cloth.layers.back().bias[0] += 0.5f;
        b.cloth.layers.front().weight[7] += 0.5f;
        const auto moved = student_deform(b, s.tpl, f);
        bool cloth_changed = false;
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (s.tpl.cloth_mask[i] == 0) CHECK((moved[i] - base[i]).norm() == 0.0);
            else cloth_changed |= (moved[i] - base[i]).norm() > 0.0;
        }
        CHECK(cloth_changed);
    }
    SUBCASE("frame embedding reaches the output") {
        StudentBundle b = s.bundle;
        const auto base = student_deform(b, s.tpl, f);
        for (float& z : b.embedding(0)) z = 0.5f;
        const auto moved = student_deform(b, s.tpl, f);
        double diff = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) diff = std::max(diff, (moved[i] - base[i]).norm());
        CHECK(diff > 1e-6);
    }
}

TEST_CASE("mapping networks") {
    Scene s;
    const FrameInput& f = s.seq.frames[2];
    CHECK(s.bundle.config.head_coeffs == 8);
    CHECK(s.bundle.config.body_coeffs == 20);
    CHECK(blend_coeffs(s.bundle, f).size() == 28);
    CHECK(blend_coeffs(zeroed(s.bundle), f).isZero(0.0));
    FrameInput g = f;
    for (float& e : g.epsilon) e += 0.7f;
    const VecX a = blend_coeffs(s.bundle, f), b = blend_coeffs(s.bundle, g);
    CHECK((a.tail(20) - b.tail(20)).norm() == 0.0);
    CHECK((a.head(8) - b.head(8)).norm() > 0.0);
}

TEST_CASE("gaussian blend shapes") {
    const std::size_t ng = 5, n = 4;
    Rng rng(2);
    std::vector<float> M(ng * 3 * n);
    for (float& m : M) m = float(rng.normal());
    SUBCASE("zero coefficients") {
        for (const Vec3& d : blend_shape_apply(M, ng, VecX::Zero(n))) CHECK(d.isZero(0.0));
    }
    SUBCASE("one-hot coefficient selects a column") {
        const auto d = blend_shape_apply(M, ng, VecX::Unit(n, 2));
        for (std::size_t g = 0; g < ng; ++g)
            for (int r = 0; r < 3; ++r) CHECK(d[g][r] == double(M[(g * 3 + r) * n + 2]));
    }
    SUBCASE("linearity") {
        const VecX a = VecX::Random(n), b = VecX::Random(n);
        const auto da = blend_shape_apply(M, ng, a), db = blend_shape_apply(M, ng, b),
                   dab = blend_shape_apply(M, ng, a + b);
        for (std::size_t g = 0; g < ng; ++g) CHECK((da[g] + db[g] - dab[g]).norm() < 1e-6);
    }
}

TEST_CASE("bundle container round trip") {
    Scene s;
    const StudentBundle b = decode_bundle(encode_bundle(s.bundle));
    CHECK(encode_bundle(b) == encode_bundle(s.bundle));
    CHECK(mlp_parameters(b.body) == mlp_parameters(s.bundle.body));
    std::string bytes = encode_bundle(s.bundle);
    CHECK_THROWS_AS(decode_bundle(bytes.substr(0, bytes.size() - 9)), FormatError);
}

TEST_CASE("per-frame pipeline") {
    Scene s;
    const Camera& cam = s.seq.cameras[0];
    SUBCASE("zero bundle at rest equals the static render") {
        const FrameInput rest = FrameInput::rest(s.tpl);
        const FrameState with = animate_frame(s.tpl, s.tex, nullptr, rest, cam);
        const StudentBundle z = zeroed(s.bundle);
        const FrameState zero = animate_frame(s.tpl, s.tex, &z, rest, cam);
        CHECK(with.target.color == zero.target.color);
        CHECK(with.target.alpha == zero.target.alpha);
    }
    SUBCASE("rigid root motion with a co-moving camera") {
        const FrameInput& f = s.seq.frames[1];
        const FrameState a = animate_frame(s.tpl, s.tex, &s.bundle, f, cam);
        FrameInput g = f;
        const RigidTransform M{axis_angle_matrix(Vec3(0.2, -0.4, 0.7)), Vec3(0.5, -0.3, 0.2)};
        g.set_root(M * f.root());
        Camera moved = cam;
        const RigidTransform w2c = cam.world_to_camera() * M.inverse();
        moved.rotation = wxyz_from_quat(Quat(w2c.rotation));
        moved.translation = w2c.translation.cast<float>();
        const FrameState b = animate_frame(s.tpl, s.tex, &s.bundle, g, moved);
        CHECK(fixture::max_abs_diff(a.target.color, b.target.color) < 1e-5);
        CHECK(fixture::max_abs_diff(a.target.alpha, b.target.alpha) < 1e-5);
    }
    SUBCASE("color residuals leave alpha and depth alone") {
        StudentBundle b = s.bundle;
        Rng rng(9);
        for (float& c : b.color_shapes) c = float(0.05 * rng.normal());
        AnimateOptions o;
        o.render.depth = true;
        const FrameState x = animate_frame(s.tpl, s.tex, &s.bundle, s.seq.frames[2], cam, o);
        const FrameState y = animate_frame(s.tpl, s.tex, &b, s.seq.frames[2], cam, o);
        CHECK(x.target.alpha == y.target.alpha);
        CHECK(x.target.depth == y.target.depth);
        CHECK(x.target.color != y.target.color);
    }
}
