// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "../support/fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace meshsplat;

namespace {

struct Setup {
    RiggedTemplate tpl = fixture::small_rig();
    GaussianTexture tex;
    MotionSequence seq;
    Setup() {
        tex = init_texture(tpl, 1, 1, 2);
        paint_from_segmentation(tex, tpl);
        MotionConfig mc;
        mc.frames = 3;
        mc.width = mc.height = 24;
        seq = make_motion(tpl, mc);
    }
};

double max_map(const DeformationMap& m) {
    double out = 0.0;
    for (const MapImage* side : {&m.front, &m.back})
        for (std::size_t p = 0; p < side->values.size(); ++p)
            if (side->mask[p]) out = std::max(out, double(side->values[p].norm()));
    return out;
}

}  // namespace

TEST_CASE("procedural fields") {
    Setup s;
    ProceduralTeacherConfig c;
    c.map_width = c.map_height = 32;
    SUBCASE("no field gives zero maps") {
        c.field = TeacherField::none;
        const TeacherSource t = procedural_teacher(s.tpl, s.tex, s.seq, c);
        for (const auto& f : t.frames) CHECK(max_map(f.maps) == 0.0);
    }
    SUBCASE("sway is linear in the amplitude") {
        c.field = TeacherField::sway;
        c.amplitude = 0.02;
        const double a = max_map(procedural_teacher(s.tpl, s.tex, s.seq, c).frames[1].maps);
        c.amplitude = 0.04;
        const double b = max_map(procedural_teacher(s.tpl, s.tex, s.seq, c).frames[1].maps);
        CHECK(a > 0.0);
        CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-5));
    }
    SUBCASE("sway leaves body vertices alone") {
        c.field = TeacherField::sway;
        const auto d = teacher_field(s.tpl, s.seq.frames[1], c);
        bool cloth_moves = false;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!s.tpl.cloth_mask[i]) CHECK(d[i].norm() == 0.0);
            else cloth_moves |= d[i].norm() > 0.0;
        }
        CHECK(cloth_moves);
    }
}

TEST_CASE("teacher directories") {
    Setup s;
    ProceduralTeacherConfig c;
    c.map_width = c.map_height = 16;
    const TeacherSource t = procedural_teacher(s.tpl, s.tex, s.seq, c);
    const std::string dir = fixture::scratch("teacher_dir");
    export_teacher(t, dir);
    SUBCASE("export then ingest is the identity") {
        const TeacherSource u = ingest_teacher(dir);
        REQUIRE(u.frames.size() == t.frames.size());
        for (std::size_t f = 0; f < t.frames.size(); ++f) {
            CHECK(encode_deformation_map(u.frames[f].maps) == encode_deformation_map(t.frames[f].maps));
            CHECK(u.frames[f].color.rgb == t.frames[f].color.rgb);
            CHECK(u.frames[f].normal.rgb == t.frames[f].normal.rgb);
            CHECK(u.frames[f].alpha.rgb == t.frames[f].alpha.rgb);
        }
    }
    SUBCASE("a missing map names its frame") {
        std::filesystem::remove(dir + "/frame_1.dmap");
        try {
            ingest_teacher(dir);
            FAIL("missing map accepted");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
        }
    }
    SUBCASE("mixed resolutions are rejected") {
        ProceduralTeacherConfig big = c;
        big.map_width = 20;
        const TeacherSource other = procedural_teacher(s.tpl, s.tex, s.seq, big);
        save_deformation_map(dir + "/frame_2.dmap", other.frames[2].maps);
        CHECK_THROWS_AS(ingest_teacher(dir), Error);
    }
}
