// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Student animation stack: positional encoding, the dual deformation MLPs,
// blend-shape mapping networks, Gaussian blend shapes and the per-frame
// pose -> image pipeline.
#pragma once

#include "meshsplat/skinning.hpp"
#include "meshsplat/splat.hpp"

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace meshsplat {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

/// 3 + 6L: raw coordinate, then sin and cos of 2^k pi v for k < L.
constexpr std::size_t encoding_dim(std::uint32_t levels) { return 3 + 6 * std::size_t(levels); }
void positional_encode(const Vec3& v, std::uint32_t levels, double* out);
VecX positional_encode(const Vec3& v, std::uint32_t levels);

// --- MLP -------------------------------------------------------------------

/// Fully connected layer y = W x + b, W row-major (out x in).
struct Linear {
    std::uint32_t in = 0, out = 0;
    std::vector<float> weight;
    std::vector<float> bias;
};

/// SiLU between layers, linear output.
struct Mlp {
    std::vector<Linear> layers;
    std::uint32_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::uint32_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    std::size_t parameter_count() const;
};

/// dims = {in, hidden..., out}. Uniform(-1/sqrt(in), 1/sqrt(in)) init; the
/// output layer is scaled by `output_scale`.
Mlp make_mlp(const std::vector<std::uint32_t>& dims, Rng& rng, double output_scale = 1.0);
void zero_mlp(Mlp& mlp);

/// Gradients with the same layout as an Mlp.
struct MlpGrad {
    std::vector<MatX> weight;
    std::vector<VecX> bias;
    static MlpGrad zeros_like(const Mlp& mlp);
    void add(const MlpGrad& other);
};

/// Activations kept for the backward pass.
struct MlpCache {
    std::vector<MatX> pre;   // pre-activation per layer
    std::vector<MatX> post;  // input to each layer (post[0] = per-column layer-0 input)
    VecX shared;             // shared layer-0 input
};

/// Batched forward. Inputs to the first layer are [x_var; x_shared]: the
/// per-column part `x_var` (rows = in - shared) and a vector shared by every
/// column (folded into the bias). Either part may be empty.
MatX mlp_forward(const Mlp& mlp, const MatX& x_var, const VecX& x_shared, MlpCache* cache = nullptr);

/// Backward for one forward batch. Accumulates parameter gradients into
/// `grad` and returns d loss / d x_shared.
VecX mlp_backward(const Mlp& mlp, const MlpCache& cache, const MatX& grad_out, std::size_t shared_dim,
                  MlpGrad& grad, MatX* grad_x_var = nullptr);

/// Flattened parameter views (weights then bias, layer by layer).
std::vector<double> mlp_parameters(const Mlp& mlp);
void set_mlp_parameters(Mlp& mlp, std::span<const double> values);
std::vector<double> flatten(const MlpGrad& grad);

// --- student bundle ---------------------------------------------------------

struct StudentConfig {
    std::uint32_t pe_levels = 6;
    std::uint32_t hidden = 128;
    std::uint32_t layers = 5;          // linear layers per deformation MLP
    std::uint32_t theta_dim = 63;
    std::uint32_t embedding_dim = 32;
    std::uint32_t frame_count = 1;     // rows of the embedding table
    std::uint32_t expression_dim = 10;
    std::uint32_t head_coeffs = 8;     // n_h
    std::uint32_t body_coeffs = 20;    // n_b
    std::uint32_t map_hidden = 64;
    std::uint32_t gaussian_count = 0;

    std::uint32_t input_dim() const { return std::uint32_t(encoding_dim(pe_levels)) + theta_dim + embedding_dim; }
    std::uint32_t coeff_dim() const { return head_coeffs + body_coeffs; }
};

/// Deformation MLPs S_b and S_c, mapping networks H (expression) and B
/// (pose), per-frame embeddings and blend shapes U (position) and C (color).
struct StudentBundle {
    StudentConfig config;
    Mlp body, cloth;
    Mlp head_map, body_map;
    std::vector<float> embeddings;  // frame_count x embedding_dim
    // gaussian_count x 3 x coeff_dim, row-major per Gaussian.
    std::vector<float> position_shapes;
    std::vector<float> color_shapes;
    bool half_precision = false;  // network weights hold binary16 values

    std::span<const float> embedding(std::size_t frame) const;
    std::span<float> embedding(std::size_t frame);
};

/// Student for a template/texture pair. Deformation output layers start at
/// 0.1x scale, blend shapes at zero, embeddings at zero.
StudentBundle make_student(const StudentConfig& config, std::uint64_t seed);
StudentConfig student_config_for(const RiggedTemplate& tpl, const GaussianTexture& tex, std::uint32_t frames);

void validate(const StudentBundle& bundle);
/// Bundle dimensions against a template and texture.
void validate(const StudentBundle& bundle, const RiggedTemplate& tpl, const GaussianTexture& tex);

std::string encode_bundle(const StudentBundle& bundle);
StudentBundle decode_bundle(std::string bytes);
void save_bundle(const std::string& path, const StudentBundle& bundle);
StudentBundle load_bundle(const std::string& path);

/// The [theta; z] vector of a frame (z falls back to embedding row 0).
VecX pose_code(const StudentBundle& bundle, const FrameInput& frame);

/// Encoded canonical positions, one column per vertex.
MatX encode_vertices(std::span<const Vec3> canonical, std::uint32_t levels);

/// Delta_i = S_c(g_i) m_i + S_b(g_i) over all vertices. S_c runs on cloth
/// vertices only (its masked contribution is zero elsewhere).
std::vector<Vec3> student_deform(const StudentBundle& bundle, const RiggedTemplate& tpl, const FrameInput& frame);

/// student_deform plus the activations needed to differentiate it. Vertices
/// are processed in fixed 256-column chunks.
struct StudentTape {
    VecX code;
    std::vector<std::size_t> cloth;  // cloth vertex indices
    std::vector<MlpCache> body_chunks, cloth_chunks;
    std::vector<Vec3> delta;
};
StudentTape student_forward(const StudentBundle& bundle, const RiggedTemplate& tpl, const FrameInput& frame);
/// Accumulates S_b / S_c gradients for per-vertex d loss / d Delta and
/// returns d loss / d [theta; z].
VecX student_backward(const StudentBundle& bundle, const StudentTape& tape, std::span<const Vec3> grad_delta,
                      MlpGrad& body, MlpGrad& cloth);

/// z_h (+) z_b = H(epsilon) (+) B(theta).
VecX blend_coeffs(const StudentBundle& bundle, const FrameInput& frame);

struct CoeffTape {
    VecX eps, theta;
    MlpCache head, body;
    VecX coeffs;
};
CoeffTape blend_coeffs_forward(const StudentBundle& bundle, const FrameInput& frame);
/// Accumulates H / B gradients for d loss / d coeffs.
void blend_coeffs_backward(const StudentBundle& bundle, const CoeffTape& tape, const VecX& grad_coeffs,
                           MlpGrad& head, MlpGrad& body);

/// delta_g = M_g coeffs for every Gaussian; M is gaussian x 3 x n.
std::vector<Vec3> blend_shape_apply(std::span<const float> shapes, std::size_t gaussians, const VecX& coeffs);
/// Accumulates d/dM and returns d/dcoeffs for upstream per-Gaussian gradients.
VecX blend_shape_backward(std::span<const float> shapes, const VecX& coeffs, std::span<const Vec3> grad,
                          std::span<double> grad_shapes);

// --- per-frame pipeline -----------------------------------------------------

struct AnimateOptions {
    RenderOptions render;
    bool use_student = true;        // mesh deformation field
    bool use_blend_shapes = true;   // delta_u / delta_c
    bool render_image = true;
    std::span<const Vec3> extra_delta;     // canonical offsets added after the student
    std::span<const Vec3> semantic;        // per-Gaussian semantic labels
    std::optional<std::size_t> frame_index;  // embedding row; nullopt -> frame.z or row 0
};

/// Everything animate_frame computes, kept for gradients and tests.
struct FrameState {
    std::vector<Vec3> canonical;     // template + expression offsets
    std::vector<Vec3> student_delta; // empty when the student is off
    std::vector<Vec3> deformed;      // canonical + deltas
    PosedSkeleton skeleton;
    std::vector<Vec3> posed;
    VecX coeffs;                     // empty when blend shapes are off
    std::vector<Vec3> delta_u, delta_c;
    std::vector<WorldGaussian> gaussians;
    RenderTarget target;
};

/// expression -> student deformation -> LBS -> triangle frames -> blend
/// shapes -> local-to-world -> render. `bundle` may be null.
FrameState animate_frame(const RiggedTemplate& tpl, const GaussianTexture& tex, const StudentBundle* bundle,
                         const FrameInput& frame, const Camera& cam, const AnimateOptions& options = {});

/// Synthetic throughput run: clothed capsule rig, random student, orbiting
/// motion, every stage of animate_frame timed separately.
struct BenchConfig {
    std::uint32_t gaussians = 20000;
    std::uint32_t width = 512, height = 512;
    std::uint32_t frames = 50;
    std::uint64_t seed = 0;
    bool student = true;
    SortMode sort = SortMode::exact_f32;
};

/// Per-frame averages in milliseconds.
struct BenchResult {
    std::size_t gaussians = 0, vertices = 0, frames = 0;
    double fps = 0;
    double student_ms = 0, skinning_ms = 0, gaussians_ms = 0;
    double project_ms = 0, sort_ms = 0, bin_ms = 0, raster_ms = 0, total_ms = 0;
};

BenchResult run_bench(const BenchConfig& config);

/// Canonical vertices with the expression basis applied.
std::vector<Vec3> expression_canonical(const RiggedTemplate& tpl, std::span<const float> epsilon);

}  // namespace meshsplat
