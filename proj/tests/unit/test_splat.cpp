// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

using namespace meshsplat;

namespace {

Camera front_camera(std::uint32_t w = 64, std::uint32_t h = 64) {
    return Camera::look_at(Vec3(0, -3, 0), Vec3(0, 0, 0), Vec3(0, 0, 1), 40.0, w, h);
}

WorldGaussian random_gaussian(Rng& rng) {
    WorldGaussian g;
    g.mean = Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.5, 0.5), rng.uniform(-0.6, 0.6));
    g.rotation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
    g.scale = Vec3(rng.uniform(0.01, 0.15), rng.uniform(0.01, 0.15), rng.uniform(0.01, 0.15));
    g.opacity = rng.uniform(0.05, 1.0);
    g.color = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
    return g;
}

}  // namespace

TEST_CASE("single opaque splat saturates its center pixel") {
    const Camera cam = front_camera(33, 33);  // pixel (16, 16) centered on the mean
    WorldGaussian g;
    g.mean = Vec3(0, 0, 0);
    g.scale = Vec3::Constant(0.3);
    g.opacity = 1.0;
    g.color = Vec3(0.2, 0.7, 0.4);
    const RenderTarget rt = render(std::vector<WorldGaussian>{g}, cam);
    const std::size_t p = 16 * 33 + 16;
    CHECK(rt.alpha[p] >= 0.99 - 1e-12);
    for (int c = 0; c < 3; ++c) CHECK(rt.color[p * 3 + c] / rt.alpha[p] == doctest::Approx(g.color[c]).epsilon(1e-12));
}

TEST_CASE("no gaussians renders nothing") {
    RenderOptions o;
    o.normal = o.depth = o.semantic = true;
    const RenderTarget rt = render(std::vector<WorldGaussian>{}, front_camera(20, 20), o);
    for (const auto* ch : {&rt.color, &rt.alpha, &rt.normal, &rt.depth, &rt.semantic})
        for (double v : *ch) CHECK(v == 0.0);
}

TEST_CASE("tiled renderer matches the brute-force compositor") {
    const Camera cam = front_camera();
    SUBCASE("two overlapping gaussians") {
        WorldGaussian a, b;
        a.mean = Vec3(0.05, 0.0, 0.0);
        a.scale = Vec3(0.2, 0.1, 0.15);
        a.opacity = 0.7;
        a.color = Vec3(1, 0, 0);
        b.mean = Vec3(-0.05, 0.3, 0.05);
        b.scale = Vec3(0.1, 0.1, 0.25);
        b.opacity = 0.8;
        b.color = Vec3(0, 0.5, 1);
        const std::vector<WorldGaussian> gs{a, b};
        const RenderTarget rt = render(gs, cam);
        const oracle::Pixels want = oracle::composite(gs, cam);
        CHECK(fixture::max_abs_diff(rt.color, want.color) < 1e-5);
        CHECK(fixture::max_abs_diff(rt.alpha, want.alpha) < 1e-5);
    }
    SUBCASE("random scenes") {
        Rng rng(21);
        for (int scene = 0; scene < 5; ++scene) {
            std::vector<WorldGaussian> gs;
            for (int i = 0; i < 40; ++i) gs.push_back(random_gaussian(rng));
            const RenderTarget rt = render(gs, cam);
            const oracle::Pixels want = oracle::composite(gs, cam);
            CHECK(fixture::max_abs_diff(rt.color, want.color) < 1e-5);
        }
    }
}

TEST_CASE("thread count does not change the image") {
    Rng rng(4);
    std::vector<WorldGaussian> gs;
    for (int i = 0; i < 200; ++i) gs.push_back(random_gaussian(rng));
    set_thread_count(1);
    const RenderTarget a = render(gs, front_camera());
    set_thread_count(4);
    const RenderTarget b = render(gs, front_camera());
    set_thread_count(0);
    CHECK(a.color == b.color);
}

TEST_CASE("depth sorting") {
    SUBCASE("ordered depths keep their order") {
        const std::vector<double> d{1, 2, 3};
        const std::vector<std::uint32_t> id{0, 1, 2};
        CHECK(sort_by_depth(d, 0.1, 10, SortMode::exact_f32) == id);
        CHECK(sort_by_depth(d, 0.1, 10, SortMode::quant_u16) == id);
    }
    SUBCASE("equal depths fall back to index order") {
        const std::vector<double> d{2, 1, 2, 1};
        const std::vector<std::uint32_t> want{1, 3, 0, 2};
        CHECK(sort_by_depth(d, 0.1, 10, SortMode::exact_f32) == want);
        CHECK(sort_by_depth(d, 0.1, 10, SortMode::quant_u16) == want);
    }
    SUBCASE("u16 keys agree when depths are a bin apart") {
        const double near = 0.5, far = 20.0, bin = (far - near) / 65535.0;
        Rng rng(6);
        std::vector<double> d;
        for (int i = 0; i < 1000; ++i) d.push_back(near + (i * 60 + 30) * bin + rng.uniform(-5, 5) * bin);
        for (std::size_t i = d.size(); i-- > 1;) std::swap(d[i], d[std::size_t(rng.uniform_int(0, int(i)))]);
        CHECK(sort_by_depth(d, near, far, SortMode::exact_f32) == sort_by_depth(d, near, far, SortMode::quant_u16));
    }
    SUBCASE("out of range depths are dropped") {
        const std::vector<double> d{-1, 5, 50};
        CHECK(sort_by_depth(d, 0.1, 10, SortMode::exact_f32) == std::vector<std::uint32_t>{1});
    }
}

TEST_CASE("canonical map rasterization") {
    SUBCASE("constant attribute") {
        const RiggedTemplate t = fixture::grid_template(3, 3);
        std::vector<Vec3> canon;
        for (const auto& v : t.vertices) canon.push_back(v.cast<double>());
        const std::vector<Vec3> c(canon.size(), Vec3(0.1, 0.2, 0.3));
        const DeformationMap m = rasterize_mesh_maps(canon, t.faces, c, 16, 16);
        std::size_t valid = 0;
        for (std::size_t p = 0; p < m.front.mask.size(); ++p) {
            if (!m.front.mask[p]) continue;
            ++valid;
            CHECK((m.front.values[p].cast<double>() - c[0]).norm() < 1e-6);
        }
        CHECK(valid > 0);
    }
    SUBCASE("quad facing front maps pixel centers to world coordinates") {
        const RiggedTemplate t = fixture::grid_template(1, 1, 2.0);
        std::vector<Vec3> canon;
        for (const auto& v : t.vertices) canon.push_back(v.cast<double>());
        const MapFraming fr = map_framing(canon);
        const std::uint32_t W = 20, H = 10;
        const MeshRaster r = rasterize_ortho(canon, t.faces, fr, MapSide::front, W, H);
        const MapImage img = apply_raster(r, canon);
        const double px = (fr.x_max - fr.x_min) / W, pz = (fr.z_max - fr.z_min) / H;
        for (std::uint32_t i = 0; i < H; ++i) {
            for (std::uint32_t j = 0; j < W; ++j) {
                const std::size_t p = i * W + j;
                if (!img.mask[p]) continue;
                const double x = fr.x_min + (j + 0.5) * px, z = fr.z_max - (i + 0.5) * pz;
                CHECK(std::abs(img.values[p].x() - x) <= 0.5 * px + 1e-6);
                CHECK(std::abs(img.values[p].z() - z) <= 0.5 * pz + 1e-6);
            }
        }
    }
    SUBCASE("front and back silhouettes of a closed mesh coincide") {
        const RiggedTemplate t = fixture::small_rig(false);
        std::vector<Vec3> canon;
        for (const auto& v : t.vertices) canon.push_back(v.cast<double>());
        const MapRasters r = make_map_rasters(canon, t.faces, 48, 48);
        for (std::size_t p = 0; p < r.front.face.size(); ++p) CHECK(r.front.covered(p) == r.back.covered(p));
    }
}

TEST_CASE("relighting closed forms") {
    const std::vector<double> base{0.2, 0.4, 0.6};
    Light l;
    l.direction = Vec3(0, 0, 1);
    SUBCASE("ambient only is the identity") {
        l.ambient = Vec3::Ones();
        l.intensity = Vec3::Zero();
        CHECK(relight(base, std::vector<double>{0, 1, 0}, l) == base);
    }
    SUBCASE("perpendicular normal without ambient is black") {
        const auto out = relight(base, std::vector<double>{1, 0, 0}, l);
        for (double v : out) CHECK(v == 0.0);
    }
    SUBCASE("aligned normal with 0.2 + 0.8") {
        l.ambient = Vec3::Constant(0.2);
        l.intensity = Vec3::Constant(0.8);
        const auto out = relight(base, std::vector<double>{0, 0, 1}, l);
        for (int c = 0; c < 3; ++c) CHECK(out[c] == doctest::Approx(base[c]).epsilon(1e-12));
    }
}

TEST_CASE("ppm round trip is exact after 8-bit quantization") {
    Image img;
    img.width = 3;
    img.height = 2;
    img.rgb = {0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.55, 0.25, 0.75, 0.05, 0.95, 0.45, 0.65};
    const Image q = quantize_8bit(img);
    const Image back = decode_ppm(encode_ppm(img));
    CHECK(back.rgb == q.rgb);
}
