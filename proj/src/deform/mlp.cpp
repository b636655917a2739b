// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/deform.hpp"

#include <cmath>

namespace meshsplat {

namespace {

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

MatX weight_matrix(const Linear& l) {
    return Eigen::Map<const RowMajorF>(l.weight.data(), l.out, l.in).cast<double>();
}

VecX bias_vector(const Linear& l) { return Eigen::Map<const Eigen::VectorXf>(l.bias.data(), l.out).cast<double>(); }

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

}  // namespace

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

Mlp make_mlp(const std::vector<std::uint32_t>& dims, Rng& rng, double output_scale) {
    if (dims.size() < 2) throw Error(ErrorCode::invalid_argument, "an mlp needs at least one layer");
    Mlp mlp;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        Linear l;
        l.in = dims[k];
        l.out = dims[k + 1];
        const double bound = 1.0 / std::sqrt(double(std::max<std::uint32_t>(l.in, 1)));
        const double scale = (k + 2 == dims.size()) ? output_scale : 1.0;
        l.weight.resize(std::size_t(l.in) * l.out);
        l.bias.resize(l.out);
        for (float& w : l.weight) w = float(scale * rng.uniform(-bound, bound));
        for (float& b : l.bias) b = float(scale * rng.uniform(-bound, bound));
        mlp.layers.push_back(std::move(l));
    }
    return mlp;
}

void zero_mlp(Mlp& mlp) {
    for (auto& l : mlp.layers) {
        std::fill(l.weight.begin(), l.weight.end(), 0.0f);
        std::fill(l.bias.begin(), l.bias.end(), 0.0f);
    }
}

MlpGrad MlpGrad::zeros_like(const Mlp& mlp) {
    MlpGrad g;
    for (const auto& l : mlp.layers) {
        g.weight.push_back(MatX::Zero(l.out, l.in));
        g.bias.push_back(VecX::Zero(l.out));
    }
    return g;
}

void MlpGrad::add(const MlpGrad& other) {
    for (std::size_t k = 0; k < weight.size(); ++k) {
        weight[k] += other.weight[k];
        bias[k] += other.bias[k];
    }
}

MatX mlp_forward(const Mlp& mlp, const MatX& x_var, const VecX& x_shared, MlpCache* cache) {
    if (mlp.layers.empty()) throw Error(ErrorCode::invalid_argument, "empty mlp");
    const Linear& first = mlp.layers.front();
    if (std::size_t(x_var.rows() + x_shared.size()) != first.in) {
        throw DimensionError("mlp input has " + std::to_string(x_var.rows() + x_shared.size()) +
                             " features, expected " + std::to_string(first.in));
    }
    const Eigen::Index batch = x_var.cols();
    const Eigen::Index dv = x_var.rows();
    if (cache) {
        cache->pre.clear();
        cache->post.clear();
        cache->post.push_back(x_var);
        cache->shared = x_shared;
    }
    MatX h;
    for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
        const Linear& l = mlp.layers[k];
        const MatX W = weight_matrix(l);
        VecX b = bias_vector(l);
        MatX pre;
        if (k == 0) {
            if (x_shared.size() > 0) b += W.rightCols(x_shared.size()) * x_shared;
            pre = dv > 0 ? MatX(W.leftCols(dv) * x_var) : MatX::Zero(l.out, batch);
        } else {
            pre = W * h;
        }
        pre.colwise() += b;
        if (k + 1 == mlp.layers.size()) {
            if (cache) cache->pre.push_back(pre);
            return pre;
        }
        h = pre.unaryExpr([](double x) { return silu(x); });
        if (cache) {
            cache->pre.push_back(std::move(pre));
            cache->post.push_back(h);
        }
    }
    return h;
}

VecX mlp_backward(const Mlp& mlp, const MlpCache& cache, const MatX& grad_out, std::size_t shared_dim,
                  MlpGrad& grad, MatX* grad_x_var) {
    const std::size_t L = mlp.layers.size();
    MatX d = grad_out;
    VecX d_shared = VecX::Zero(Eigen::Index(shared_dim));
    for (std::size_t k = L; k-- > 0;) {
        const Linear& l = mlp.layers[k];
        if (k + 1 < L) d = d.cwiseProduct(cache.pre[k].unaryExpr([](double x) { return silu_grad(x); }));
        const MatX W = weight_matrix(l);
        const MatX& input = cache.post[k];
        grad.bias[k] += d.rowwise().sum();
        if (k == 0) {
            const Eigen::Index dv = input.rows();
            if (dv > 0) grad.weight[0].leftCols(dv) += d * input.transpose();
            if (shared_dim > 0) {
                // The shared part was folded into the bias: its input is the
                // same vector for every column.
                const VecX row_sum = d.rowwise().sum();
                d_shared = W.rightCols(Eigen::Index(shared_dim)).transpose() * row_sum;
                grad.weight[0].rightCols(Eigen::Index(shared_dim)) += row_sum * cache.shared.transpose();
            }
            if (grad_x_var && dv > 0) *grad_x_var = W.leftCols(dv).transpose() * d;
        } else {
            grad.weight[k] += d * input.transpose();
            d = W.transpose() * d;
        }
    }
    return d_shared;
}

std::vector<double> mlp_parameters(const Mlp& mlp) {
    std::vector<double> out;
    out.reserve(mlp.parameter_count());
    for (const auto& l : mlp.layers) {
        out.insert(out.end(), l.weight.begin(), l.weight.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

void set_mlp_parameters(Mlp& mlp, std::span<const double> values) {
    if (values.size() != mlp.parameter_count()) throw DimensionError("parameter vector size mismatch");
    std::size_t at = 0;
    for (auto& l : mlp.layers) {
        for (float& w : l.weight) w = float(values[at++]);
        for (float& b : l.bias) b = float(values[at++]);
    }
}

std::vector<double> flatten(const MlpGrad& grad) {
    std::vector<double> out;
    for (std::size_t k = 0; k < grad.weight.size(); ++k) {
        // Row-major to match Linear::weight.
        const auto& W = grad.weight[k];
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) out.push_back(W(r, c));
        for (Eigen::Index r = 0; r < grad.bias[k].size(); ++r) out.push_back(grad.bias[k][r]);
    }
    return out;
}

}  // namespace meshsplat
