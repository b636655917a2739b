// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "../support/fixtures.hpp"

#include <doctest.h>

using namespace meshsplat;

namespace {

// Two-joint chain along x: root at the origin, leaf at (1, 0, 0).
std::vector<Joint> chain() {
    std::vector<Joint> j(2);
    j[1].parent = 0;
    j[1].rest_translation = Vec3f(1, 0, 0);
    return j;
}

}  // namespace

TEST_CASE("rest pose reproduces rest transforms") {
    const RiggedTemplate t = fixture::small_rig();
    const PosedSkeleton s = pose_skeleton(t, FrameInput::rest(t));
    for (std::size_t j = 0; j < t.joints.size(); ++j) {
        const RigidTransform r = t.joints[j].rest();
        CHECK((s.world[j].rotation - r.rotation).norm() < 1e-9);
        CHECK((s.world[j].translation - r.translation).norm() < 1e-6);
    }
    const auto posed = lbs_forward(t, s);
    double err = 0.0;
    for (std::size_t i = 0; i < posed.size(); ++i) err = std::max(err, (posed[i] - t.vertices[i].cast<double>()).norm());
    CHECK(err < 1e-6);
}

TEST_CASE("leaf rotation composes with its parent") {
    const auto joints = chain();
    std::vector<float> theta = {0, 0, float(M_PI / 2)};
    const PosedSkeleton s = pose_skeleton(joints, theta, RigidTransform::identity());
    const Mat3 rel = s.world[0].rotation.transpose() * s.world[1].rotation;
    Mat3 rz;
    rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((rel - rz).norm() < 1e-6);
    const PosedSkeleton again = pose_skeleton(joints, theta, RigidTransform::identity());
    CHECK(again.world[1].rotation == s.world[1].rotation);
}

TEST_CASE("lbs closed forms") {
    RiggedTemplate t = fixture::grid_template(1, 1);
    t.vertices[0] = Vec3f(1, 0, 0);
    SUBCASE("single joint rotated 90 degrees about z") {
        FrameInput f = FrameInput::rest(t);
        f.set_root({axis_angle_matrix(Vec3(0, 0, M_PI / 2)), Vec3::Zero()});
        const auto v = lbs_forward(t, pose_skeleton(t, f));
        CHECK((v[0] - Vec3(0, 1, 0)).norm() < 1e-6);
    }
    SUBCASE("constant offset at identity translates every vertex") {
        const std::vector<Vec3> delta(t.vertices.size(), Vec3(0.1, -0.2, 0.3));
        const auto v = lbs_forward(t, pose_skeleton(t, FrameInput::rest(t)), delta);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK((v[i] - t.vertices[i].cast<double>() - delta[i]).norm() < 1e-6);
    }
}

TEST_CASE("inverse skinning") {
    const RiggedTemplate t = fixture::small_rig();
    SUBCASE("rest pose is the identity") {
        const auto s = pose_skeleton(t, FrameInput::rest(t));
        std::vector<Vec3> v;
        for (const auto& p : t.vertices) v.push_back(p.cast<double>());
        const auto inv = lbs_inverse(t, s, v);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK((inv.points[i] - v[i]).norm() < 1e-7);
    }
    SUBCASE("random pose round trip") {
        MotionConfig mc;
        mc.frames = 3;
        mc.pose_amplitude = 0.6;
        const MotionSequence m = make_motion(t, mc);
        const auto s = pose_skeleton(t, m.frames[2]);
        const auto posed = lbs_forward(t, s);
        const auto inv = lbs_inverse(t, s, posed);
        double err = 0.0;
        for (std::size_t i = 0; i < posed.size(); ++i)
            err = std::max(err, (inv.points[i] - t.vertices[i].cast<double>()).norm());
        CHECK(err < 1e-5);
    }
    SUBCASE("weights that cancel a rotation are flagged") {
        const auto joints = chain();
        const PosedSkeleton s = pose_skeleton(joints, std::vector<float>{0, 0, float(M_PI)}, RigidTransform::identity());
        SkinWeights w;
        w.joint = {0, 1, -1, -1, -1, -1, -1, -1};
        w.weight = {0.5f, 0.5f, 0, 0, 0, 0, 0, 0};
        const std::vector<SkinWeights> ws{w};
        const std::vector<Vec3> pts{Vec3(0.5, 0.2, 0.0)};
        const auto inv = lbs_inverse(s, pts, ws);
        CHECK(inv.singular[0] == 1);
    }
}

TEST_CASE("skin weight transfer") {
    const RiggedTemplate body = fixture::small_rig(false);
    SUBCASE("coincident vertex copies the body row") {
        TriangleMesh g;
        g.vertices = {body.vertices[5], body.vertices[5] + Vec3f(0.001f, 0, 0), body.vertices[5] + Vec3f(0, 0, 0.001f)};
        g.faces = {{0, 1, 2}};
        TransferOptions o;
        o.smoothing_passes = 0;
        const auto w = transfer_skin_weights(body, g, o);
        CHECK(std::abs(w[0].sum() - 1.0) < 1e-6);
        for (int k = 0; k < kMaxInfluences; ++k) {
            if (body.skin[5].joint[k] < 0) continue;
            bool match = false;
            for (int m = 0; m < kMaxInfluences; ++m)
                match |= w[0].joint[m] == body.skin[5].joint[k] &&
                         std::abs(w[0].weight[m] - body.skin[5].weight[k]) < 1e-5;
            CHECK(match);
        }
    }
    SUBCASE("centroid averages the corner rows") {
        const RiggedTemplate t = fixture::grid_template(1, 1);
        RiggedTemplate two = t;
        two.joints.push_back(Joint{0, Vec4f(1, 0, 0, 0), Vec3f(0, 0, 1)});
        const Face f = two.faces[0];
        two.skin[f[0]] = SkinWeights::single(0);
        two.skin[f[1]] = SkinWeights::single(1);
        two.skin[f[2]] = SkinWeights::single(1);
        std::vector<Vec3> bv;
        for (const auto& v : two.vertices) bv.push_back(v.cast<double>());
        const Vec3 c = (bv[f[0]] + bv[f[1]] + bv[f[2]]) / 3.0;
        TriangleMesh g;
        g.vertices = {c.cast<float>(), (c + Vec3(1e-3, 0, 0)).cast<float>(), (c + Vec3(0, 0, 1e-3)).cast<float>()};
        g.faces = {{0, 1, 2}};
        TransferOptions o;
        o.smoothing_passes = 0;
        const auto w = transfer_skin_weights(bv, two.faces, two.skin, g, o);
        double w0 = 0, w1 = 0;
        for (int k = 0; k < kMaxInfluences; ++k) {
            if (w[0].joint[k] == 0) w0 = w[0].weight[k];
            if (w[0].joint[k] == 1) w1 = w[0].weight[k];
        }
        CHECK(w0 == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
        CHECK(w1 == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
    }
    SUBCASE("skirt rows are normalized and nonnegative") {
        const TriangleMesh skirt = make_skirt_mesh(body, 12, 4);
        const auto w = transfer_skin_weights(body, skirt);
        for (const auto& r : w) {
            CHECK(std::abs(r.sum() - 1.0) < 1e-6);
            for (int k = 0; k < kMaxInfluences; ++k) CHECK(r.weight[k] >= 0.0f);
        }
    }
}

TEST_CASE("clothed template builder") {
    const RiggedTemplate body = fixture::small_rig(false);
    const FrameInput rest = FrameInput::rest(body);
    SUBCASE("no components leaves the body unchanged") {
        CHECK(encode_template(build_clothed_template(body, {}, rest)) == encode_template(body));
    }
    SUBCASE("one skirt appends its faces under the cloth label") {
        ClothingComponent c;
        c.mesh = make_skirt_mesh(body, 12, 4);
        const RiggedTemplate t = build_clothed_template(body, {c}, rest);
        CHECK(t.faces.size() == body.faces.size() + c.mesh.faces.size());
        for (std::size_t i = 0; i < c.mesh.vertices.size(); ++i) {
            const std::size_t k = body.vertices.size() + i;
            CHECK(t.labels[k] == ComponentLabel::cloth);
            CHECK((t.vertices[k] - c.mesh.vertices[i]).norm() < 1e-6f);
        }
    }
}
