// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used by the unit and acceptance suites. They
// share no code with the library beyond its plain data types.
#pragma once

#include "meshsplat/splat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

using meshsplat::Camera;
using meshsplat::Vec2;
using meshsplat::Vec3;
using meshsplat::WorldGaussian;

// --- spherical harmonics ------------------------------------------------------

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

/// Associated Legendre P_l^m(x) with the Condon-Shortley phase, by the
/// standard three-term recurrence.
inline double legendre(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        const double s = std::sqrt((1.0 - x) * (1.0 + x));
        double fact = 1.0;
        for (int k = 1; k <= m; ++k) {
            pmm *= -fact * s;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmm1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) return pmm1;
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = ((2.0 * ll - 1.0) * x * pmm1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmm1;
        pmm1 = pll;
    }
    return pll;
}

/// Real spherical harmonic Y_l^m at a unit direction, m in [-l, l].
inline double real_sh(int l, int m, const Vec3& d) {
    const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
    const double phi = std::atan2(d.y(), d.x());
    const int am = std::abs(m);
    const double k = std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) * factorial(l - am) / factorial(l + am));
    const double p = legendre(l, am, std::cos(theta));
    if (m == 0) return k * p;
    if (m > 0) return std::sqrt(2.0) * k * std::cos(m * phi) * p;
    return std::sqrt(2.0) * k * std::sin(am * phi) * p;
}

/// Basis in (l, m = -l..l) order.
inline std::vector<double> sh_basis(int degree, const Vec3& d) {
    std::vector<double> out;
    for (int l = 0; l <= degree; ++l)
        for (int m = -l; m <= l; ++m) out.push_back(real_sh(l, m, d));
    return out;
}

// --- brute-force compositor -------------------------------------------------------

struct Splat {
    bool visible = false;
    double depth = 0.0;
    Vec2 mean = Vec2::Zero();
    Eigen::Matrix2d conic = Eigen::Matrix2d::Identity();
};

/// Pinhole projection with the EWA covariance, a 0.3 px^2 eigenvalue floor
/// and nothing else shared with the tiled renderer.
inline Splat project(const WorldGaussian& g, const Camera& cam) {
    Splat s;
    const Eigen::Quaterniond q(cam.rotation[0], cam.rotation[1], cam.rotation[2], cam.rotation[3]);
    const Eigen::Matrix3d W = q.normalized().toRotationMatrix();
    const Vec3 t = W * g.mean + cam.translation.cast<double>();
    s.depth = t.z();
    if (!(t.z() > cam.near && t.z() <= cam.far)) return s;
    Eigen::Matrix<double, 2, 3> J;
    J << cam.fx / t.z(), 0.0, -cam.fx * t.x() / (t.z() * t.z()), 0.0, cam.fy / t.z(),
        -cam.fy * t.y() / (t.z() * t.z());
    const Eigen::Matrix3d R = g.rotation.normalized().toRotationMatrix();
    const Eigen::Matrix3d S = g.scale.asDiagonal();
    const Eigen::Matrix3d sigma = R * S * S * R.transpose();
    Eigen::Matrix2d cov = J * W * sigma * W.transpose() * J.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    // Closed-form symmetric 2x2 eigen decomposition.
    const double a = cov(0, 0), b = cov(0, 1), c = cov(1, 1);
    const double mid = 0.5 * (a + c), rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    double l1 = mid + rad, l2 = mid - rad;
    Vec2 e1 = std::abs(b) > 1e-300 ? Vec2(l1 - c, b).normalized() : (a >= c ? Vec2(1, 0) : Vec2(0, 1));
    const Vec2 e2(-e1.y(), e1.x());
    l1 = std::max(l1, 0.3);
    l2 = std::max(l2, 0.3);
    s.conic = e1 * e1.transpose() / l1 + e2 * e2.transpose() / l2;
    s.mean = Vec2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
    s.visible = true;
    return s;
}

struct Pixels {
    std::vector<double> color, alpha;
};

/// O(pixels x gaussians): one global depth sort (ties by index), then per
/// pixel front-to-back compositing with the 3-sigma cutoff, alpha clamp to
/// [1/255, 0.99] and termination once transmittance drops below 1e-6.
inline Pixels composite(const std::vector<WorldGaussian>& gs, const Camera& cam) {
    std::vector<Splat> sp;
    for (const auto& g : gs) sp.push_back(project(g, cam));
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < gs.size(); ++i)
        if (sp[i].visible) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sp[a].depth < sp[b].depth; });
    const std::size_t np = std::size_t(cam.width) * cam.height;
    Pixels out;
    out.color.assign(np * 3, 0.0);
    out.alpha.assign(np, 0.0);
    for (std::uint32_t y = 0; y < cam.height; ++y) {
        for (std::uint32_t x = 0; x < cam.width; ++x) {
            const std::size_t p = std::size_t(y) * cam.width + x;
            double T = 1.0;
            for (std::size_t i : order) {
                const Vec2 d = Vec2(x + 0.5, y + 0.5) - sp[i].mean;
                const double m2 = d.dot(sp[i].conic * d);
                if (m2 > 9.0) continue;
                double a = std::min(0.99, gs[i].opacity * std::exp(-0.5 * m2));
                if (a < 1.0 / 255.0) continue;
                for (int c = 0; c < 3; ++c) out.color[p * 3 + c] += T * a * gs[i].color[c];
                out.alpha[p] += T * a;
                T *= 1.0 - a;
                if (T < 1e-6) break;
            }
        }
    }
    return out;
}

}  // namespace oracle
