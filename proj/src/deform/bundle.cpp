// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/container.hpp"
#include "meshsplat/deform.hpp"

#include <Eigen/Core>
#include <cmath>

namespace meshsplat {

namespace {
constexpr Magic kBundleMagic = {'M', 'S', 'P', 'L', 'S', 'T', 'U', '\0'};
constexpr std::uint32_t kBundleVersion = 1;
constexpr std::size_t kChunk = 256;  // fixed column chunk: results independent of threads

std::uint16_t half_bits(float v) { return Eigen::half(v).x; }
float half_value(std::uint16_t bits) {
    return float(Eigen::half(Eigen::half_impl::raw_uint16_to_half(bits)));
}

void write_mlp(ContainerWriter& w, const std::string& prefix, const Mlp& mlp, bool half) {
    w.add_scalar_u32(prefix + ".layers", std::uint32_t(mlp.layers.size()));
    for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
        const Linear& l = mlp.layers[k];
        const std::string wn = prefix + ".w" + std::to_string(k), bn = prefix + ".b" + std::to_string(k);
        if (half) {
            std::vector<std::uint16_t> wb(l.weight.size()), bb(l.bias.size());
            for (std::size_t i = 0; i < wb.size(); ++i) wb[i] = half_bits(l.weight[i]);
            for (std::size_t i = 0; i < bb.size(); ++i) bb[i] = half_bits(l.bias[i]);
            w.add_u16(wn, l.out, l.in, wb);
            w.add_u16(bn, l.out, 1, bb);
        } else {
            w.add_f32(wn, l.out, l.in, l.weight);
            w.add_f32(bn, l.out, 1, l.bias);
        }
    }
}

Mlp read_mlp(const ContainerReader& r, const std::string& prefix, bool half) {
    Mlp mlp;
    const std::uint32_t layers = r.scalar_u32(prefix + ".layers");
    for (std::uint32_t k = 0; k < layers; ++k) {
        const std::string wn = prefix + ".w" + std::to_string(k), bn = prefix + ".b" + std::to_string(k);
        const Section& ws = r.section(wn);
        Linear l;
        l.out = ws.rows;
        l.in = ws.cols;
        if (half) {
            for (auto b : r.u16(wn, l.out, l.in)) l.weight.push_back(half_value(b));
            for (auto b : r.u16(bn, l.out, 1)) l.bias.push_back(half_value(b));
        } else {
            l.weight = r.f32(wn, l.out, l.in);
            l.bias = r.f32(bn, l.out, 1);
        }
        if (k > 0 && mlp.layers.back().out != l.in) {
            throw FormatError(prefix + " layer " + std::to_string(k) + " input does not match previous output",
                              ws.header_offset, wn);
        }
        mlp.layers.push_back(std::move(l));
    }
    return mlp;
}

void check_mlp(const Mlp& mlp, std::uint32_t in, std::uint32_t out, const char* name) {
    if (mlp.layers.empty() || mlp.input_dim() != in || mlp.output_dim() != out) {
        throw ValidationError(std::string(name) + " expects " + std::to_string(in) + " -> " + std::to_string(out));
    }
    for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
        const Linear& l = mlp.layers[k];
        if (l.weight.size() != std::size_t(l.in) * l.out || l.bias.size() != l.out ||
            (k > 0 && mlp.layers[k - 1].out != l.in)) {
            throw ValidationError(std::string(name) + " layer " + std::to_string(k) + " has inconsistent shape");
        }
        for (float v : l.weight)
            if (!std::isfinite(v)) throw ValidationError(std::string(name) + " has non-finite weights");
    }
}

}  // namespace

std::span<const float> StudentBundle::embedding(std::size_t frame) const {
    if (frame >= config.frame_count) throw DimensionError("embedding row " + std::to_string(frame) + " out of range");
    return {embeddings.data() + frame * config.embedding_dim, config.embedding_dim};
}

std::span<float> StudentBundle::embedding(std::size_t frame) {
    if (frame >= config.frame_count) throw DimensionError("embedding row " + std::to_string(frame) + " out of range");
    return {embeddings.data() + frame * config.embedding_dim, config.embedding_dim};
}

StudentConfig student_config_for(const RiggedTemplate& tpl, const GaussianTexture& tex, std::uint32_t frames) {
    StudentConfig c;
    c.theta_dim = std::uint32_t(tpl.theta_dim());
    c.expression_dim = tpl.expression_count;
    c.gaussian_count = std::uint32_t(tex.size());
    c.frame_count = std::max<std::uint32_t>(frames, 1);
    return c;
}

StudentBundle make_student(const StudentConfig& config, std::uint64_t seed) {
    if (config.layers < 2) throw Error(ErrorCode::invalid_argument, "deformation mlp needs at least 2 layers");
    Rng rng(seed);
    StudentBundle b;
    b.config = config;
    std::vector<std::uint32_t> dims{config.input_dim()};
    for (std::uint32_t k = 0; k + 1 < config.layers; ++k) dims.push_back(config.hidden);
    dims.push_back(3);
    b.body = make_mlp(dims, rng, 0.1);
    b.cloth = make_mlp(dims, rng, 0.1);
    b.head_map = make_mlp({std::max<std::uint32_t>(config.expression_dim, 1), config.map_hidden, config.head_coeffs}, rng);
    b.body_map = make_mlp({std::max<std::uint32_t>(config.theta_dim, 1), config.map_hidden, config.body_coeffs}, rng);
    b.embeddings.assign(std::size_t(config.frame_count) * config.embedding_dim, 0.0f);
    const std::size_t shapes = std::size_t(config.gaussian_count) * 3 * config.coeff_dim();
    b.position_shapes.assign(shapes, 0.0f);
    b.color_shapes.assign(shapes, 0.0f);
    return b;
}

void validate(const StudentBundle& b) {
    const StudentConfig& c = b.config;
    if (c.frame_count == 0) throw ValidationError("bundle needs at least one embedding row");
    check_mlp(b.body, c.input_dim(), 3, "S_b");
    check_mlp(b.cloth, c.input_dim(), 3, "S_c");
    check_mlp(b.head_map, std::max<std::uint32_t>(c.expression_dim, 1), c.head_coeffs, "H");
    check_mlp(b.body_map, std::max<std::uint32_t>(c.theta_dim, 1), c.body_coeffs, "B");
    if (b.embeddings.size() != std::size_t(c.frame_count) * c.embedding_dim) {
        throw ValidationError("embedding table size != frame_count x embedding_dim");
    }
    const std::size_t shapes = std::size_t(c.gaussian_count) * 3 * c.coeff_dim();
    if (b.position_shapes.size() != shapes || b.color_shapes.size() != shapes) {
        throw ValidationError("blend shape size != gaussians x 3 x coefficients");
    }
}

void validate(const StudentBundle& b, const RiggedTemplate& tpl, const GaussianTexture& tex) {
    validate(b);
    if (b.config.theta_dim != tpl.theta_dim()) {
        throw DimensionError("bundle expects theta of " + std::to_string(b.config.theta_dim) + " values, template has " +
                             std::to_string(tpl.theta_dim()));
    }
    if (b.config.expression_dim != tpl.expression_count) {
        throw DimensionError("bundle expression size differs from the template");
    }
    if (b.config.gaussian_count != tex.size()) {
        throw DimensionError("bundle blend shapes cover " + std::to_string(b.config.gaussian_count) +
                             " gaussians, texture has " + std::to_string(tex.size()));
    }
}

std::string encode_bundle(const StudentBundle& b) {
    validate(b);
    const StudentConfig& c = b.config;
    const std::vector<std::uint32_t> cfg{c.pe_levels,      c.hidden,      c.layers,      c.theta_dim,
                                         c.embedding_dim,  c.frame_count, c.expression_dim, c.head_coeffs,
                                         c.body_coeffs,    c.map_hidden,  c.gaussian_count};
    ContainerWriter w(kBundleMagic, kBundleVersion);
    w.add_u32("config", 1, std::uint32_t(cfg.size()), cfg);
    w.add_scalar_u32("precision", b.half_precision ? 1 : 0);
    write_mlp(w, "sb", b.body, b.half_precision);
    write_mlp(w, "sc", b.cloth, b.half_precision);
    write_mlp(w, "hm", b.head_map, b.half_precision);
    write_mlp(w, "bm", b.body_map, b.half_precision);
    w.add_f32("embeddings", c.frame_count, c.embedding_dim, b.embeddings);
    w.add_f32("pos_shapes", c.gaussian_count, 3 * c.coeff_dim(), b.position_shapes);
    w.add_f32("col_shapes", c.gaussian_count, 3 * c.coeff_dim(), b.color_shapes);
    return w.finish();
}

StudentBundle decode_bundle(std::string bytes) {
    ContainerReader r(std::move(bytes), kBundleMagic, kBundleVersion);
    const auto cfg = r.u32("config", 1, 11);
    StudentBundle b;
    StudentConfig& c = b.config;
    c.pe_levels = cfg[0];
    c.hidden = cfg[1];
    c.layers = cfg[2];
    c.theta_dim = cfg[3];
    c.embedding_dim = cfg[4];
    c.frame_count = cfg[5];
    c.expression_dim = cfg[6];
    c.head_coeffs = cfg[7];
    c.body_coeffs = cfg[8];
    c.map_hidden = cfg[9];
    c.gaussian_count = cfg[10];
    const std::uint32_t precision = r.scalar_u32("precision");
    if (precision > 1) throw FormatError("unknown precision tag", r.section("precision").payload_offset, "precision");
    b.half_precision = precision == 1;
    b.body = read_mlp(r, "sb", b.half_precision);
    b.cloth = read_mlp(r, "sc", b.half_precision);
    b.head_map = read_mlp(r, "hm", b.half_precision);
    b.body_map = read_mlp(r, "bm", b.half_precision);
    b.embeddings = r.f32("embeddings", c.frame_count, c.embedding_dim);
    b.position_shapes = r.f32("pos_shapes", c.gaussian_count, 3 * c.coeff_dim());
    b.color_shapes = r.f32("col_shapes", c.gaussian_count, 3 * c.coeff_dim());
    validate(b);
    return b;
}

void save_bundle(const std::string& path, const StudentBundle& b) { write_file_atomic(path, encode_bundle(b)); }

StudentBundle load_bundle(const std::string& path) { return decode_bundle(read_file(path)); }

VecX pose_code(const StudentBundle& bundle, const FrameInput& frame) {
    const StudentConfig& c = bundle.config;
    if (frame.theta.size() != c.theta_dim) throw DimensionError("theta size differs from the bundle");
    VecX code(c.theta_dim + c.embedding_dim);
    for (std::uint32_t k = 0; k < c.theta_dim; ++k) code[k] = frame.theta[k];
    std::span<const float> z = frame.z;
    if (z.empty()) z = bundle.embedding(0);
    if (z.size() != c.embedding_dim) throw DimensionError("frame embedding size differs from the bundle");
    for (std::uint32_t k = 0; k < c.embedding_dim; ++k) code[c.theta_dim + k] = z[k];
    return code;
}

StudentTape student_forward(const StudentBundle& bundle, const RiggedTemplate& tpl, const FrameInput& frame) {
    const std::size_t nv = tpl.vertices.size();
    StudentTape tape;
    tape.code = pose_code(bundle, frame);
    std::vector<Vec3> canonical(nv);
    for (std::size_t i = 0; i < nv; ++i) canonical[i] = tpl.vertices[i].cast<double>();
    for (std::size_t i = 0; i < nv; ++i)
        if (tpl.cloth_mask[i]) tape.cloth.push_back(i);

    tape.delta.assign(nv, Vec3::Zero());
    tape.body_chunks.resize((nv + kChunk - 1) / kChunk);
    parallel_for(tape.body_chunks.size(), 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t ch = begin; ch < end; ++ch) {
            const std::size_t lo = ch * kChunk, hi = std::min(nv, lo + kChunk);
            const MatX enc = encode_vertices(std::span(canonical).subspan(lo, hi - lo), bundle.config.pe_levels);
            const MatX y = mlp_forward(bundle.body, enc, tape.code, &tape.body_chunks[ch]);
            for (std::size_t i = lo; i < hi; ++i) tape.delta[i] = y.col(Eigen::Index(i - lo));
        }
    });
    const std::size_t nc = tape.cloth.size();
    tape.cloth_chunks.resize((nc + kChunk - 1) / kChunk);
    parallel_for(tape.cloth_chunks.size(), 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t ch = begin; ch < end; ++ch) {
            const std::size_t lo = ch * kChunk, hi = std::min(nc, lo + kChunk);
            std::vector<Vec3> pts;
            for (std::size_t k = lo; k < hi; ++k) pts.push_back(canonical[tape.cloth[k]]);
            const MatX y = mlp_forward(bundle.cloth, encode_vertices(pts, bundle.config.pe_levels), tape.code,
                                       &tape.cloth_chunks[ch]);
            for (std::size_t k = lo; k < hi; ++k) tape.delta[tape.cloth[k]] += Vec3(y.col(Eigen::Index(k - lo)));
        }
    });
    return tape;
}

std::vector<Vec3> student_deform(const StudentBundle& bundle, const RiggedTemplate& tpl, const FrameInput& frame) {
    return student_forward(bundle, tpl, frame).delta;
}

VecX student_backward(const StudentBundle& bundle, const StudentTape& tape, std::span<const Vec3> grad_delta,
                      MlpGrad& body, MlpGrad& cloth) {
    const std::size_t nv = tape.delta.size();
    if (grad_delta.size() != nv) throw DimensionError("delta gradient count != vertex count");
    const std::size_t shared = std::size_t(tape.code.size());
    VecX grad_code = VecX::Zero(tape.code.size());
    // Serial over chunks: parameter gradients are summed in a fixed order.
    for (std::size_t ch = 0; ch < tape.body_chunks.size(); ++ch) {
        const std::size_t lo = ch * kChunk, hi = std::min(nv, lo + kChunk);
        MatX g(3, Eigen::Index(hi - lo));
        for (std::size_t i = lo; i < hi; ++i) g.col(Eigen::Index(i - lo)) = grad_delta[i];
        grad_code += mlp_backward(bundle.body, tape.body_chunks[ch], g, shared, body);
    }
    const std::size_t nc = tape.cloth.size();
    for (std::size_t ch = 0; ch < tape.cloth_chunks.size(); ++ch) {
        const std::size_t lo = ch * kChunk, hi = std::min(nc, lo + kChunk);
        MatX g(3, Eigen::Index(hi - lo));
        for (std::size_t k = lo; k < hi; ++k) g.col(Eigen::Index(k - lo)) = grad_delta[tape.cloth[k]];
        grad_code += mlp_backward(bundle.cloth, tape.cloth_chunks[ch], g, shared, cloth);
    }
    return grad_code;
}

CoeffTape blend_coeffs_forward(const StudentBundle& bundle, const FrameInput& frame) {
    const StudentConfig& c = bundle.config;
    if (frame.theta.size() != c.theta_dim) throw DimensionError("theta size differs from the bundle");
    if (!frame.epsilon.empty() && frame.epsilon.size() != c.expression_dim) {
        throw DimensionError("epsilon size differs from the bundle");
    }
    CoeffTape t;
    t.eps = VecX::Zero(std::max<std::uint32_t>(c.expression_dim, 1));
    for (std::size_t k = 0; k < frame.epsilon.size(); ++k) t.eps[Eigen::Index(k)] = frame.epsilon[k];
    t.theta = VecX::Zero(std::max<std::uint32_t>(c.theta_dim, 1));
    for (std::size_t k = 0; k < frame.theta.size(); ++k) t.theta[Eigen::Index(k)] = frame.theta[k];
    t.coeffs.resize(c.coeff_dim());
    t.coeffs.head(c.head_coeffs) = mlp_forward(bundle.head_map, MatX(0, 1), t.eps, &t.head).col(0);
    t.coeffs.tail(c.body_coeffs) = mlp_forward(bundle.body_map, MatX(0, 1), t.theta, &t.body).col(0);
    return t;
}

VecX blend_coeffs(const StudentBundle& bundle, const FrameInput& frame) {
    return blend_coeffs_forward(bundle, frame).coeffs;
}

void blend_coeffs_backward(const StudentBundle& bundle, const CoeffTape& tape, const VecX& grad_coeffs,
                           MlpGrad& head, MlpGrad& body) {
    const StudentConfig& c = bundle.config;
    if (grad_coeffs.size() != c.coeff_dim()) throw DimensionError("coefficient gradient size mismatch");
    mlp_backward(bundle.head_map, tape.head, MatX(grad_coeffs.head(c.head_coeffs)), std::size_t(tape.eps.size()),
                 head);
    mlp_backward(bundle.body_map, tape.body, MatX(grad_coeffs.tail(c.body_coeffs)),
                 std::size_t(tape.theta.size()), body);
}

}  // namespace meshsplat
