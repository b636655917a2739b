// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// The public C interface and the command-line tool built on it.
#include "meshsplat/meshsplat.h"

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef MESHSPLAT_CLI_PATH
#error "MESHSPLAT_CLI_PATH must point at the command-line tool"
#endif

namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("meshsplat_capi_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(const std::string& args, const std::string& out_file = "") {
    std::string cmd = std::string("MESHSPLAT_LOG=quiet ") + MESHSPLAT_CLI_PATH + " " + args;
    cmd += out_file.empty() ? " > /dev/null 2>&1" : " > " + out_file + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct Assets {
    ms_template* tpl = nullptr;
    ms_texture* tex = nullptr;
    Assets() {
        ms_rig_config rc;
        ms_rig_config_default(&rc);
        rc.cloth = 1;
        rc.rings_per_bone = 2;
        REQUIRE(ms_template_generate(&rc, &tpl) == MS_OK);
        REQUIRE(ms_texture_bind(tpl, 1, 1, 2, 3, &tex) == MS_OK);
    }
    ~Assets() {
        ms_texture_free(tex);
        ms_template_free(tpl);
    }
};

}  // namespace

TEST_CASE("errors carry a status and a message") {
    CHECK(std::string(ms_version()).size() > 0);
    ms_template* t = nullptr;
    CHECK(ms_template_load("/nonexistent/x.tpl", &t) == MS_ERR_IO);
    CHECK(t == nullptr);
    CHECK(std::string(ms_last_error()).find("x.tpl") != std::string::npos);
    CHECK(ms_template_generate(nullptr, &t) == MS_ERR_INVALID_ARGUMENT);
    const std::string dir = scratch("garbage");
    std::ofstream(dir + "/bad.tpl") << "not a template";
    CHECK(ms_template_load((dir + "/bad.tpl").c_str(), &t) == MS_ERR_FORMAT);
}

TEST_CASE("template info and round trip") {
    Assets a;
    ms_template_info info;
    REQUIRE(ms_template_get_info(a.tpl, &info) == MS_OK);
    CHECK(info.joints == 22);
    CHECK(info.theta_dim == 63);
    CHECK(info.cloth_vertices > 0);
    const std::string dir = scratch("tpl");
    REQUIRE(ms_template_save(a.tpl, (dir + "/a.tpl").c_str()) == MS_OK);
    ms_template* b = nullptr;
    REQUIRE(ms_template_load((dir + "/a.tpl").c_str(), &b) == MS_OK);
    REQUIRE(ms_template_save(b, (dir + "/b.tpl").c_str()) == MS_OK);
    CHECK(slurp(dir + "/a.tpl") == slurp(dir + "/b.tpl"));
    ms_template_free(b);
}

TEST_CASE("zero bundle renders like no bundle") {
    Assets a;
    ms_student_config sc;
    ms_student_config_default(&sc);
    sc.hidden = 16;
    ms_bundle* b = nullptr;
    REQUIRE(ms_bundle_create(a.tpl, a.tex, 1, &sc, 4, &b) == MS_OK);
    REQUIRE(ms_bundle_zero(b) == MS_OK);
    ms_render_options ro;
    ms_render_options_default(&ro);
    ro.width = ro.height = 40;
    const std::string dir = scratch("identity");
    REQUIRE(ms_render_frame(a.tpl, a.tex, nullptr, nullptr, 0, &ro, (dir + "/none.ppm").c_str()) == MS_OK);
    REQUIRE(ms_render_frame(a.tpl, a.tex, b, nullptr, 0, &ro, (dir + "/zero.ppm").c_str()) == MS_OK);
    CHECK(slurp(dir + "/none.ppm") == slurp(dir + "/zero.ppm"));
    ms_bundle_free(b);
}

TEST_CASE("quantization report") {
    Assets a;
    ms_student_config sc;
    ms_student_config_default(&sc);
    ms_bundle *b = nullptr, *q = nullptr;
    REQUIRE(ms_bundle_create(a.tpl, a.tex, 2, &sc, 4, &b) == MS_OK);
    ms_quantize_report rep;
    REQUIRE(ms_bundle_quantize(b, 200, 1, &q, &rep) == MS_OK);
    CHECK(rep.samples == 200);
    CHECK(rep.within_bound == 1);
    CHECK(rep.max_rel_deviation < rep.bound);
    ms_bundle_free(q);
    ms_bundle_free(b);
}

TEST_CASE("command-line tool") {
    const std::string d = scratch("cli");
    REQUIRE(cli("gen-rig --cloth --rings 2 --out " + d + "/r.tpl --motion-out " + d + "/m.mot --frames 3 --res 32x32") == 0);
    REQUIRE(cli("bind --template " + d + "/r.tpl --out " + d + "/t.gtx --k-max 1") == 0);
    const std::string common = " --template " + d + "/r.tpl --texture " + d + "/t.gtx";
    std::ofstream(d + "/bake.ini") << "[bake]\niterations=2\nhidden=16\n";
    REQUIRE(cli("--config " + d + "/bake.ini bake" + common + " --motion " + d + "/m.mot --out " + d + "/s.stu",
                d + "/bake.txt") == 0);
    CHECK(slurp(d + "/bake.txt").find("iterations=2 ") != std::string::npos);

    SUBCASE("zero bundle flag matches no bundle") {
        REQUIRE(cli("render" + common + " --out " + d + "/a.ppm") == 0);
        REQUIRE(cli("render" + common + " --bundle " + d + "/s.stu --zero-bundle --out " + d + "/b.ppm") == 0);
        CHECK(slurp(d + "/a.ppm") == slurp(d + "/b.ppm"));
        REQUIRE(cli("render" + common + " --bundle " + d + "/s.stu --out " + d + "/c.ppm") == 0);
    }
    SUBCASE("summary line grammar") {
        REQUIRE(cli("quantize --bundle " + d + "/s.stu --out " + d + "/q.stu", d + "/q.txt") == 0);
        const std::string line = slurp(d + "/q.txt");
        CHECK(line.rfind("status=ok cmd=quantize ", 0) == 0);
        CHECK(line.find("within_bound=1") != std::string::npos);
    }
    SUBCASE("exit codes") {
        CHECK(cli("bind --template " + d + "/missing.tpl --out " + d + "/x.gtx") == 4);
        CHECK(cli("bind --template " + d + "/r.tpl --out " + d + "/x.gtx --sh-degree 9") == 2);
        CHECK(cli("no-such-command") == 2);
        std::ofstream(d + "/broken.stu") << "MSPLSTU";
        CHECK(cli("quantize --bundle " + d + "/broken.stu --out " + d + "/y.stu") == 3);
    }
}
