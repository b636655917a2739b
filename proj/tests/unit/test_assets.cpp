// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "../support/fixtures.hpp"

#include <doctest.h>

#include <cstring>

using namespace meshsplat;

TEST_CASE("template round trip keeps every vertex byte") {
    const RiggedTemplate t = fixture::small_rig();
    const std::string dir = fixture::scratch("tpl_rt");
    save_template(dir + "/a.tpl", t);
    const RiggedTemplate u = load_template(dir + "/a.tpl");
    REQUIRE(u.vertices.size() == t.vertices.size());
    CHECK(std::memcmp(u.vertices.data(), t.vertices.data(), t.vertices.size() * sizeof(Vec3f)) == 0);
    CHECK(u.faces == t.faces);
    CHECK(u.cloth_mask == t.cloth_mask);
    CHECK(encode_template(u) == encode_template(t));
}

TEST_CASE("truncated template names the section it stopped in") {
    const std::string bytes = encode_template(fixture::small_rig(false));
    try {
        decode_template(bytes.substr(0, bytes.size() / 2));
        FAIL("decode accepted a truncated file");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("section") != std::string::npos);
        CHECK(std::string(e.what()).find('\'') != std::string::npos);
    }
}

TEST_CASE("weight row summing to one half is rejected") {
    RiggedTemplate t = fixture::grid_template(2, 2);
    t.skin[3].weight[0] = 0.5f;
    CHECK_THROWS_AS(validate(t), ValidationError);
    CHECK_THROWS_AS(decode_template(encode_template(t)), ValidationError);
}

TEST_CASE("capsule rig generation") {
    SUBCASE("deterministic") {
        CapsuleRigConfig c;
        c.joint_count = 4;
        c.seed = 7;
        CHECK(encode_template(make_capsule_rig(c)) == encode_template(make_capsule_rig(c)));
    }
    SUBCASE("22 joints give a 63-dimensional pose") {
        CapsuleRigConfig c;
        c.cloth = true;
        const RiggedTemplate t = make_capsule_rig(c);
        CHECK(t.joint_count() == 22);
        CHECK(t.theta_dim() == 63);
    }
    SUBCASE("cloth adds masked cloth vertices") {
        const RiggedTemplate t = fixture::small_rig(true);
        bool found = false;
        for (std::size_t i = 0; i < t.vertices.size(); ++i)
            found |= t.cloth_mask[i] == 1 && t.labels[i] == ComponentLabel::cloth;
        CHECK(found);
    }
}

TEST_CASE("texture and motion round trips") {
    const RiggedTemplate t = fixture::small_rig();
    const GaussianTexture tex = init_texture(t, 1, 3, 9);
    CHECK(encode_texture(decode_texture(encode_texture(tex))) == encode_texture(tex));
    MotionConfig mc;
    mc.frames = 5;
    const MotionSequence m = make_motion(t, mc);
    const MotionSequence n = decode_motion(encode_motion(m));
    REQUIRE(n.frames.size() == 5);
    CHECK(n.frames[3].theta == m.frames[3].theta);
    CHECK(encode_motion(n) == encode_motion(m));
}

TEST_CASE("deformation map round trip") {
    const RiggedTemplate t = fixture::grid_template(4, 4);
    std::vector<Vec3> canon, attr;
    for (const auto& v : t.vertices) {
        canon.push_back(v.cast<double>());
        attr.push_back(Vec3(v.x(), 2.0 * v.z(), -1.0));
    }
    const DeformationMap m = rasterize_mesh_maps(canon, t.faces, attr, 16, 12);
    const DeformationMap n = decode_deformation_map(encode_deformation_map(m));
    CHECK(n.front.mask == m.front.mask);
    CHECK(n.back.values.size() == m.back.values.size());
    CHECK(encode_deformation_map(n) == encode_deformation_map(m));
}
