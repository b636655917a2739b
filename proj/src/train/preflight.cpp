// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"

#include <cmath>

namespace meshsplat {

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

MatX random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
    MatX m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
    return m;
}


double dot(const MatX& a, const MatX& b) { return a.cwiseProduct(b).sum(); }

GradCheckOptions float_options(std::size_t n, std::size_t count, std::uint64_t seed) {
    GradCheckOptions o;
    o.representable = float_representable;
    o.coords = sample_coords(n, count, seed);
    return o;
}

// Loss r . MLP(x_var, x_shared) over a small batch.
GradCheckReport check_mlp(const std::string& name, const std::vector<std::uint32_t>& dims, std::size_t shared,
                          double tol, std::size_t count, Rng& rng) {
    Mlp mlp = make_mlp(dims, rng);
    const Eigen::Index var = Eigen::Index(dims.front() - shared);
    const MatX x = random_matrix(rng, var, 4);
    const VecX s = random_matrix(rng, Eigen::Index(shared), 1).col(0);
    const MatX r = random_matrix(rng, dims.back(), 4);
    MlpCache cache;
    mlp_forward(mlp, x, s, &cache);
    MlpGrad g = MlpGrad::zeros_like(mlp);
    mlp_backward(mlp, cache, r, shared, g);
    const std::vector<double> analytic = flatten(g);
    auto f = [&](std::span<const double> p) {
        Mlp m = mlp;
        set_mlp_parameters(m, p);
        return dot(mlp_forward(m, x, s), r);
    };
    return grad_check(name, f, mlp_parameters(mlp), analytic, tol,
                      float_options(analytic.size(), count, rng.next_u64()));
}

GradCheckReport check_mlp_inputs(double tol, Rng& rng) {
    const std::size_t shared = 5;
    Mlp mlp = make_mlp({12, 16, 16, 16, 16, 3}, rng);
    const MatX x = random_matrix(rng, 7, 4);
    const VecX s = random_matrix(rng, Eigen::Index(shared), 1).col(0);
    const MatX r = random_matrix(rng, 3, 4);
    MlpCache cache;
    mlp_forward(mlp, x, s, &cache);
    MlpGrad g = MlpGrad::zeros_like(mlp);
    MatX gx;
    const VecX gs = mlp_backward(mlp, cache, r, shared, g, &gx);
    std::vector<double> params(x.data(), x.data() + x.size());
    params.insert(params.end(), s.data(), s.data() + s.size());
    std::vector<double> analytic(gx.data(), gx.data() + gx.size());
    analytic.insert(analytic.end(), gs.data(), gs.data() + gs.size());
    auto f = [&](std::span<const double> p) {
        const MatX xv = Eigen::Map<const MatX>(p.data(), x.rows(), x.cols());
        const VecX sv = Eigen::Map<const VecX>(p.data() + x.size(), s.size());
        return dot(mlp_forward(mlp, xv, sv), r);
    };
    return grad_check("mlp inputs", f, params, analytic, tol);
}

StudentConfig tiny_config() {
    StudentConfig c;
    c.pe_levels = 2;
    c.hidden = 16;
    c.layers = 3;
    c.theta_dim = 6;
    c.embedding_dim = 4;
    c.frame_count = 2;
    c.expression_dim = 3;
    c.head_coeffs = 4;
    c.body_coeffs = 5;
    c.map_hidden = 8;
    c.gaussian_count = 7;
    return c;
}

GradCheckReport check_mapping(double tol, std::size_t count, Rng& rng) {
    StudentBundle b = make_student(tiny_config(), rng.next_u64());
    FrameInput frame;
    for (int k = 0; k < 6; ++k) frame.theta.push_back(float(rng.uniform(-1, 1)));
    for (int k = 0; k < 3; ++k) frame.epsilon.push_back(float(rng.uniform(-1, 1)));
    const VecX r = random_matrix(rng, b.config.coeff_dim(), 1).col(0);
    const CoeffTape tape = blend_coeffs_forward(b, frame);
    MlpGrad gh = MlpGrad::zeros_like(b.head_map), gb = MlpGrad::zeros_like(b.body_map);
    blend_coeffs_backward(b, tape, r, gh, gb);
    std::vector<double> params = mlp_parameters(b.head_map), analytic = flatten(gh);
    const std::size_t nh = params.size();
    for (double v : mlp_parameters(b.body_map)) params.push_back(v);
    for (double v : flatten(gb)) analytic.push_back(v);
    auto f = [&](std::span<const double> p) {
        StudentBundle m = b;
        set_mlp_parameters(m.head_map, p.subspan(0, nh));
        set_mlp_parameters(m.body_map, p.subspan(nh));
        return r.dot(blend_coeffs(m, frame));
    };
    return grad_check("mapping nets", f, params, analytic, tol, float_options(params.size(), count, rng.next_u64()));
}

GradCheckReport check_blend_shapes(double tol, Rng& rng) {
    const std::size_t G = 6, n = 5;
    std::vector<float> shapes(G * 3 * n);
    for (auto& s : shapes) s = float(rng.uniform(-1, 1));
    const VecX coeffs = random_matrix(rng, Eigen::Index(n), 1).col(0);
    std::vector<Vec3> r(G);
    for (auto& v : r) v = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    std::vector<double> gshapes(shapes.size(), 0.0);
    const VecX gcoef = blend_shape_backward(shapes, coeffs, r, gshapes);
    std::vector<double> params(shapes.begin(), shapes.end());
    params.insert(params.end(), coeffs.data(), coeffs.data() + n);
    std::vector<double> analytic = gshapes;
    analytic.insert(analytic.end(), gcoef.data(), gcoef.data() + n);
    auto f = [&](std::span<const double> p) {
        std::vector<float> s(shapes.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = float(p[i]);
        const VecX c = Eigen::Map<const VecX>(p.data() + s.size(), Eigen::Index(n));
        const auto d = blend_shape_apply(s, G, c);
        double sum = 0.0;
        for (std::size_t g = 0; g < G; ++g) sum += r[g].dot(d[g]);
        return sum;
    };
    GradCheckOptions o;
    o.representable = float_representable;
    return grad_check("blend shapes", f, params, analytic, tol, o);
}

GradCheckReport check_dssim(double tol, std::size_t count, Rng& rng) {
    const std::uint32_t w = 16, h = 12;
    const std::vector<double> gt = random_vector(rng, std::size_t(w) * h * 3, 0.0, 1.0);
    std::vector<double> pred = gt;
    for (auto& v : pred) v = std::clamp(v + rng.uniform(-0.3, 0.3), 0.0, 1.0);
    const LossResult l = loss_dssim(pred, gt, w, h, 3);
    auto f = [&](std::span<const double> p) { return loss_dssim(p, gt, w, h, 3).value; };
    GradCheckOptions o;
    o.coords = sample_coords(pred.size(), count, rng.next_u64());
    return grad_check("d-ssim", f, pred, l.grad, tol, o);
}

// 5 x 10 vertex grid in the x-z plane; teacher offsets keep every
// difference away from the L1 kink.
GradCheckReport check_nonrigid(double tol, Rng& rng) {
    const int nx = 5, nz = 10;
    std::vector<Vec3> verts;
    for (int j = 0; j < nz; ++j)
        for (int i = 0; i < nx; ++i) verts.emplace_back(0.1 * i, 0.02 * rng.uniform(-1, 1), 0.1 * j);
    std::vector<Face> faces;
    for (int j = 0; j + 1 < nz; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const std::uint32_t a = std::uint32_t(j * nx + i), b = a + 1, c = a + nx, d = c + 1;
            faces.push_back({a, b, d});
            faces.push_back({a, d, c});
        }
    }
    const MapRasters rasters = make_map_rasters(verts, faces, 24, 40);
    std::vector<Vec3> student(verts.size()), teacher(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i) {
        student[i] = Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05));
        teacher[i] = student[i] + Vec3(rng.uniform(0.01, 0.05), rng.uniform(0.01, 0.05), -rng.uniform(0.01, 0.05));
    }
    const DeformationMap tmap = rasterize_mesh_maps(rasters, teacher);
    const NonrigidLoss l = loss_nonrigid(rasterize_mesh_maps(rasters, student), tmap);
    const std::vector<Vec3> gv = nonrigid_vertex_grad(rasters, l, verts.size());
    std::vector<double> params, analytic;
    for (std::size_t i = 0; i < verts.size(); ++i)
        for (int k = 0; k < 3; ++k) {
            params.push_back(student[i][k]);
            analytic.push_back(gv[i][k]);
        }
    auto f = [&](std::span<const double> p) {
        std::vector<Vec3> d(verts.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = Vec3(p[3 * i], p[3 * i + 1], p[3 * i + 2]);
        return loss_nonrigid(rasterize_mesh_maps(rasters, d), tmap).value;
    };
    return grad_check("non-rigid map loss", f, params, analytic, tol);
}

struct SplatScene {
    std::vector<WorldGaussian> gaussians;
    Camera cam;
    RenderOptions opt;
    RenderGradients up;
};

SplatScene splat_scene(Rng& rng) {
    SplatScene s;
    s.cam = Camera::look_at(Vec3(0, -2, 0), Vec3::Zero(), Vec3(0, 0, 1), 40.0, 32, 32);
    for (int i = 0; i < 3; ++i) {
        WorldGaussian g;
        g.mean = Vec3(rng.uniform(-0.15, 0.15), rng.uniform(-0.3, 0.3), rng.uniform(-0.15, 0.15));
        g.rotation = Quat(Eigen::AngleAxisd(rng.uniform(0, M_PI), Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 1).normalized()));
        g.scale = Vec3(rng.uniform(0.03, 0.08), rng.uniform(0.03, 0.08), rng.uniform(0.03, 0.08));
        g.opacity = rng.uniform(0.4, 0.8);
        g.color = Vec3(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
        g.normal = g.rotation.toRotationMatrix().col(0);
        s.gaussians.push_back(g);
    }
    const std::size_t np = 32 * 32;
    s.up.color = random_vector(rng, np * 3);
    s.up.alpha = random_vector(rng, np);
    return s;
}

double splat_objective(const RenderTarget& t, const RenderGradients& up) {
    double sum = 0.0;
    for (std::size_t i = 0; i < t.color.size(); ++i) sum += t.color[i] * up.color[i];
    for (std::size_t i = 0; i < t.alpha.size(); ++i) sum += t.alpha[i] * up.alpha[i];
    return sum;
}

std::vector<GradCheckReport> check_splat(double tol, Rng& rng) {
    const SplatScene s = splat_scene(rng);
    const auto projected = project_gaussians(s.gaussians, s.cam);
    const SplatGradients g = render_projected_backward(s.gaussians, projected, s.cam, s.opt, s.up);
    std::vector<GradCheckReport> out;

    std::vector<double> params, analytic;
    for (std::size_t i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) {
            params.push_back(s.gaussians[i].color[c]);
            analytic.push_back(g.color[i][c]);
        }
    out.push_back(grad_check(
        "splat color",
        [&](std::span<const double> p) {
            auto gs = s.gaussians;
            for (std::size_t i = 0; i < 3; ++i) gs[i].color = Vec3(p[3 * i], p[3 * i + 1], p[3 * i + 2]);
            return splat_objective(render_projected(gs, projected, s.cam, s.opt), s.up);
        },
        params, analytic, tol));

    params.clear();
    analytic.clear();
    for (std::size_t i = 0; i < 3; ++i) {
        params.push_back(s.gaussians[i].opacity);
        analytic.push_back(g.opacity[i]);
    }
    out.push_back(grad_check(
        "splat opacity",
        [&](std::span<const double> p) {
            auto gs = s.gaussians;
            for (std::size_t i = 0; i < 3; ++i) gs[i].opacity = p[i];
            return splat_objective(render_projected(gs, projected, s.cam, s.opt), s.up);
        },
        params, analytic, tol));

    params.clear();
    analytic.clear();
    for (std::size_t i = 0; i < 3; ++i)
        for (int c = 0; c < 2; ++c) {
            params.push_back(projected[i].mean[c]);
            analytic.push_back(g.mean2d[i][c]);
        }
    out.push_back(grad_check(
        "splat mean 2d",
        [&](std::span<const double> p) {
            auto pr = projected;
            for (std::size_t i = 0; i < 3; ++i) pr[i].mean = Vec2(p[2 * i], p[2 * i + 1]);
            return splat_objective(render_projected(s.gaussians, pr, s.cam, s.opt), s.up);
        },
        params, analytic, tol));

    // 3D means move the footprint through the projection; the covariance
    // is held fixed on both sides so only the mean path is compared.
    params.clear();
    analytic.clear();
    for (std::size_t i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) {
            params.push_back(s.gaussians[i].mean[c]);
            analytic.push_back(g.mean3d[i][c]);
        }
    out.push_back(grad_check(
        "splat mean 3d",
        [&](std::span<const double> p) {
            auto gs = s.gaussians;
            for (std::size_t i = 0; i < 3; ++i) gs[i].mean = Vec3(p[3 * i], p[3 * i + 1], p[3 * i + 2]);
            auto pr = project_gaussians(gs, s.cam);
            for (std::size_t i = 0; i < 3; ++i) {
                pr[i].cov = projected[i].cov;
                pr[i].conic = projected[i].conic;
                pr[i].radius = projected[i].radius;
            }
            return splat_objective(render_projected(gs, pr, s.cam, s.opt), s.up);
        },
        params, analytic, tol));
    return out;
}

}  // namespace

std::vector<GradCheckReport> preflight(std::uint64_t seed, bool quick) {
    Rng rng(seed);
    const std::size_t count = quick ? 60 : 300;
    std::vector<GradCheckReport> out;
    out.push_back(check_mlp("linear layer", {6, 4}, 2, 1e-4, count, rng));
    out.push_back(check_mlp("mlp 5 layers", {12, 16, 16, 16, 16, 3}, 5, kSmoothTolerance, count, rng));
    out.push_back(check_mlp_inputs(kSmoothTolerance, rng));
    out.push_back(check_mapping(kSmoothTolerance, count, rng));
    out.push_back(check_blend_shapes(kSmoothTolerance, rng));
    out.push_back(check_dssim(kSmoothTolerance, count, rng));
    out.push_back(check_nonrigid(kSmoothTolerance, rng));
    for (auto& r : check_splat(kSplatTolerance, rng)) out.push_back(std::move(r));
    return out;
}

}  // namespace meshsplat
