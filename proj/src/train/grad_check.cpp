// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace meshsplat {

double float_representable(double x) { return double(float(x)); }

std::vector<std::size_t> sample_coords(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    if (count >= n) return all;
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + std::size_t(rng.uniform() * double(n - i));
        std::swap(all[i], all[std::min(j, n - 1)]);
    }
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
}

GradCheckReport grad_check(const std::string& name, const std::function<double(std::span<const double>)>& f,
                           std::vector<double> params, std::span<const double> analytic, double tol,
                           const GradCheckOptions& options) {
    if (analytic.size() != params.size()) throw DimensionError("grad_check: gradient size != parameter count");
    const auto t0 = std::chrono::steady_clock::now();
    GradCheckReport rep;
    rep.name = name;
    rep.tolerance = tol;
    double scale = 0.0;
    for (double a : analytic) scale = std::max(scale, std::abs(a));
    std::vector<std::size_t> coords = options.coords;
    if (coords.empty()) {
        coords.resize(params.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    }
    for (std::size_t k : coords) {
        if (k >= params.size()) throw DimensionError("grad_check: coordinate out of range");
        const double x0 = params[k];
        double xp = x0 + options.h, xm = x0 - options.h;
        if (options.representable) {
            xp = options.representable(xp);
            xm = options.representable(xm);
        }
        params[k] = xp;
        const double fp = f(params);
        params[k] = xm;
        const double fm = f(params);
        params[k] = x0;
        const double numeric = (fp - fm) / (xp - xm);
        const double a = analytic[k];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3 * scale});
        const double rel = denom > 0.0 ? std::abs(a - numeric) / denom : 0.0;
        rep.max_rel_error = std::max(rep.max_rel_error, rel);
        if (!(rel < tol)) rep.failing.push_back(k);
        ++rep.checked;
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace meshsplat
