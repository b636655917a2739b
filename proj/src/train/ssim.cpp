// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"

#include <array>
#include <cmath>

namespace meshsplat {

namespace {

using Kernel = std::array<double, kSsimWindow>;

const Kernel& window() {
    static const Kernel k = [] {
        Kernel w{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double x = i - kSsimWindow / 2;
            w[std::size_t(i)] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
            sum += w[std::size_t(i)];
        }
        for (auto& v : w) v /= sum;
        return w;
    }();
    return k;
}

// Separable Gaussian blur of a single-channel image, zero outside. The
// kernel is symmetric, so this is also its own adjoint.
std::vector<double> blur(const std::vector<double>& img, std::uint32_t w, std::uint32_t h) {
    const Kernel& k = window();
    const int r = kSsimWindow / 2;
    std::vector<double> tmp(img.size(), 0.0), out(img.size(), 0.0);
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (int d = -r; d <= r; ++d) {
                const int xx = int(x) + d;
                if (xx < 0 || xx >= int(w)) continue;
                s += k[std::size_t(d + r)] * img[std::size_t(y) * w + std::size_t(xx)];
            }
            tmp[std::size_t(y) * w + x] = s;
        }
    }
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (int d = -r; d <= r; ++d) {
                const int yy = int(y) + d;
                if (yy < 0 || yy >= int(h)) continue;
                s += k[std::size_t(d + r)] * tmp[std::size_t(yy) * w + x];
            }
            out[std::size_t(y) * w + x] = s;
        }
    }
    return out;
}

struct Moments {
    std::vector<double> mx, my, mxx, myy, mxy;
};

std::vector<double> channel(std::span<const double> img, std::size_t n, std::uint32_t channels, std::uint32_t c) {
    std::vector<double> out(n);
    for (std::size_t p = 0; p < n; ++p) out[p] = img[p * channels + c];
    return out;
}

Moments moments(const std::vector<double>& x, const std::vector<double>& y, std::uint32_t w, std::uint32_t h) {
    const std::size_t n = x.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t p = 0; p < n; ++p) {
        xx[p] = x[p] * x[p];
        yy[p] = y[p] * y[p];
        xy[p] = x[p] * y[p];
    }
    return {blur(x, w, h), blur(y, w, h), blur(xx, w, h), blur(yy, w, h), blur(xy, w, h)};
}

void check(std::span<const double> a, std::span<const double> b, std::uint32_t w, std::uint32_t h,
           std::uint32_t channels) {
    if (a.size() != b.size() || a.size() != std::size_t(w) * h * channels) {
        throw DimensionError("ssim: image sizes differ");
    }
}

}  // namespace

double ssim(std::span<const double> a, std::span<const double> b, std::uint32_t w, std::uint32_t h,
            std::uint32_t channels) {
    check(a, b, w, h, channels);
    const std::size_t n = std::size_t(w) * h;
    if (n == 0 || channels == 0) return 1.0;
    double total = 0.0;
    for (std::uint32_t c = 0; c < channels; ++c) {
        const Moments m = moments(channel(a, n, channels, c), channel(b, n, channels, c), w, h);
        for (std::size_t p = 0; p < n; ++p) {
            const double sxx = m.mxx[p] - m.mx[p] * m.mx[p];
            const double syy = m.myy[p] - m.my[p] * m.my[p];
            const double sxy = m.mxy[p] - m.mx[p] * m.my[p];
            const double a1 = 2.0 * m.mx[p] * m.my[p] + kSsimC1, a2 = 2.0 * sxy + kSsimC2;
            const double b1 = m.mx[p] * m.mx[p] + m.my[p] * m.my[p] + kSsimC1, b2 = sxx + syy + kSsimC2;
            total += a1 * a2 / (b1 * b2);
        }
    }
    return total / double(n * channels);
}

LossResult loss_dssim(std::span<const double> pred, std::span<const double> gt, std::uint32_t w, std::uint32_t h,
                      std::uint32_t channels) {
    check(pred, gt, w, h, channels);
    LossResult r;
    const std::size_t n = std::size_t(w) * h;
    r.grad.assign(pred.size(), 0.0);
    if (n == 0 || channels == 0) return r;
    const double dl_ds = -0.5 / double(n * channels);
    double total = 0.0;
    for (std::uint32_t c = 0; c < channels; ++c) {
        const std::vector<double> x = channel(pred, n, channels, c), y = channel(gt, n, channels, c);
        const Moments m = moments(x, y, w, h);
        // Adjoints of the blurred raw moments that involve x.
        std::vector<double> g_mx(n), g_mxx(n), g_mxy(n);
        for (std::size_t p = 0; p < n; ++p) {
            const double mx = m.mx[p], my = m.my[p];
            const double sxx = m.mxx[p] - mx * mx, syy = m.myy[p] - my * my, sxy = m.mxy[p] - mx * my;
            const double a1 = 2.0 * mx * my + kSsimC1, a2 = 2.0 * sxy + kSsimC2;
            const double b1 = mx * mx + my * my + kSsimC1, b2 = sxx + syy + kSsimC2;
            const double s = a1 * a2 / (b1 * b2);
            total += s;
            const double ds_dmx = 2.0 * my * (a2 - a1) / (b1 * b2) - 2.0 * mx * s * (1.0 / b1 - 1.0 / b2);
            g_mx[p] = dl_ds * ds_dmx;
            g_mxx[p] = dl_ds * (-s / b2);
            g_mxy[p] = dl_ds * (2.0 * a1 / (b1 * b2));
        }
        const std::vector<double> bx = blur(g_mx, w, h), bxx = blur(g_mxx, w, h), bxy = blur(g_mxy, w, h);
        for (std::size_t p = 0; p < n; ++p) r.grad[p * channels + c] = bx[p] + 2.0 * x[p] * bxx[p] + y[p] * bxy[p];
    }
    r.value = 0.5 * (1.0 - total / double(n * channels));
    return r;
}

}  // namespace meshsplat
