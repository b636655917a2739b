// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Losses, finite-difference gradient checks, the per-frame forward/backward
// used by both training stages, baking, fine-tuning and FP16 quantization.
#pragma once

#include "meshsplat/deform.hpp"
#include "meshsplat/teacher.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace meshsplat {

struct LossWeights {
    double ssim = 0.2;
    double lpips = 0.0;  // accepted for config compatibility, always treated as 0
    double normal = 0.02;
    double nonrigid = 0.1;
    double semantic = 1.0;
};

void validate(const LossWeights& w);

/// Scalar loss and its gradient with respect to the prediction.
struct LossResult {
    double value = 0.0;
    std::vector<double> grad;
};

/// Mean absolute difference over all elements.
LossResult loss_l1(std::span<const double> pred, std::span<const double> gt);

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over pixels and channels of interleaved images (zero padding).
double ssim(std::span<const double> a, std::span<const double> b, std::uint32_t width, std::uint32_t height,
            std::uint32_t channels);
/// (1 - SSIM) / 2 with its gradient with respect to `pred`.
LossResult loss_dssim(std::span<const double> pred, std::span<const double> gt, std::uint32_t width,
                      std::uint32_t height, std::uint32_t channels);

/// Mean absolute difference of 3-channel normals over pixels with mask != 0.
LossResult loss_normal(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask);

/// Non-rigid map loss: for each side, the mean over pixels valid in both
/// maps of the per-pixel L1 norm of the difference; the two sides are added.
struct NonrigidLoss {
    double value = 0.0;
    double front = 0.0, back = 0.0;
    std::vector<Vec3> grad_front, grad_back;  // per pixel, d value / d student map
    double mask_disagreement = 0.0;           // fraction of pixels where the masks differ
    bool warning = false;                     // disagreement above 20%
};
NonrigidLoss loss_nonrigid(const DeformationMap& student, const DeformationMap& teacher);

/// Vertex gradient of loss_nonrigid through the fixed canonical rasters.
std::vector<Vec3> nonrigid_vertex_grad(const MapRasters& rasters, const NonrigidLoss& loss,
                                       std::size_t vertex_count);

constexpr double kDefaultTau = 25.0;  // 1/m

/// e_i = c_i + sin(tau * v_i) componentwise, over the canonical template.
std::vector<Vec3> semantic_labels(const RiggedTemplate& tpl, double tau);
/// Labels interpolated at each Gaussian's barycentric point.
std::vector<Vec3> gaussian_semantic_labels(const RiggedTemplate& tpl, const GaussianTexture& tex, double tau);

/// Mesh semantic image E_s: perspective raster of `posed` carrying the
/// canonical labels. 3 values per pixel; `covered` marks raster coverage.
struct MeshSemantic {
    std::vector<double> values;
    std::vector<std::uint8_t> covered;
};
MeshSemantic render_mesh_semantic(std::span<const Vec3> posed, std::span<const Face> faces,
                                  std::span<const Vec3> labels, const Camera& cam);

/// Mean over the union of mesh-covered and Gaussian-covered (alpha > 0)
/// pixels of the per-pixel L1 difference. The union size is treated as a
/// constant by the gradient.
LossResult loss_semantic(std::span<const double> gaussian_semantic, std::span<const double> gaussian_alpha,
                         const MeshSemantic& mesh);

// --- gradient checks -------------------------------------------------------------

struct GradCheckReport {
    std::string name;
    double tolerance = 0.0;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    std::vector<std::size_t> failing;  // coordinate indices
    double seconds = 0.0;

    bool passed() const { return failing.empty() && checked > 0; }
};

struct GradCheckOptions {
    double h = 1e-4;
    /// Rounds a perturbed parameter to what storage can hold (for float
    /// parameters); the actual step is used in the quotient.
    std::function<double(double)> representable;
    /// Coordinates to check; empty = all.
    std::vector<std::size_t> coords;
};

/// Central differences of `f` at `params` against `analytic`. Relative error
/// is |a - n| / max(|a|, |n|, 1e-3 max_k |a_k|).
GradCheckReport grad_check(const std::string& name, const std::function<double(std::span<const double>)>& f,
                           std::vector<double> params, std::span<const double> analytic, double tol,
                           const GradCheckOptions& options = {});

double float_representable(double x);
/// `count` distinct coordinates of [0, n), ascending, seed-reproducible.
std::vector<std::size_t> sample_coords(std::size_t n, std::size_t count, std::uint64_t seed);

constexpr double kSmoothTolerance = 1e-3;
constexpr double kSplatTolerance = 1e-2;

/// Every gradient suite the trainers rely on. `quick` checks fewer coordinates.
std::vector<GradCheckReport> preflight(std::uint64_t seed, bool quick = false);

// --- optimizer -------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

/// Adam over a flat double parameter vector.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t size, AdamConfig config);
    void step(std::span<double> params, std::span<const double> grad);
    std::size_t steps() const { return t_; }
    void set_lr(double lr) { cfg_.lr = lr; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

// --- per-frame forward / backward ----------------------------------------------

/// Ground truth for one frame. Spans may be empty to disable a term.
struct FrameTargets {
    std::span<const double> color;   // 3 per pixel, [0, 1]
    std::span<const double> normal;  // 3 per pixel, [-1, 1]
    std::span<const double> alpha;   // 1 per pixel
    const DeformationMap* maps = nullptr;
};

struct StepSwitches {
    bool student = false;      // S_b, S_c and the frame embedding
    bool texture = false;      // opacity, SH, gamma
    bool blend_shapes = false; // H, B, U, C
};

struct LossTerms {
    double l1 = 0, dssim = 0, normal = 0, nonrigid = 0, semantic = 0, total = 0;
    double mask_disagreement = 0;
};

struct StepGradients {
    MlpGrad body, cloth, head_map, body_map;
    std::vector<double> embedding;      // d / d z of this frame
    std::vector<double> opacity_logit;  // per Gaussian
    std::vector<double> sh;             // texture layout
    std::vector<double> gamma;
    std::vector<double> position_shapes, color_shapes;
    std::vector<Vec3> delta;            // d / d student Delta (canonical)
};

struct StepContext {
    const RiggedTemplate* tpl = nullptr;
    const GaussianTexture* tex = nullptr;
    const StudentBundle* bundle = nullptr;
    const MapRasters* rasters = nullptr;          // required when L_non is on
    std::span<const Vec3> vertex_labels;          // required when L_sem is on
    std::span<const Vec3> gaussian_labels;
    LossWeights weights;
    StepSwitches switches;
    std::span<const Vec3> extra_delta;            // canonical offsets added like the student's
    std::span<const Vec3> extra_delta_u;          // per-Gaussian offsets added to U's output
    std::span<const Vec3> extra_delta_c;
};

struct StepResult {
    LossTerms loss;
    StepGradients grad;
    RenderTarget target;
    std::vector<Vec3> student_delta;
};

/// Loss and gradients of one frame. `embedding_row` selects z.
StepResult train_step(const StepContext& ctx, const FrameInput& frame, std::size_t embedding_row,
                      const Camera& cam, const FrameTargets& targets, bool need_grad = true);

// --- training stages --------------------------------------------------------------

struct LearningRates {
    double attributes = 1e-3;
    double mlp = 5e-4;
    double embeddings = 1e-3;
    double blend_shapes = 1e-3;
};

struct TrainConfig {
    std::uint32_t iterations = 2000;
    std::uint32_t batch_size = 1;
    LearningRates lr;
    /// Final learning rate as a fraction of the initial one, reached by
    /// exponential decay over the run. 1 keeps rates constant.
    double lr_final_ratio = 1.0;
    std::uint64_t seed = 0;
    std::uint32_t map_width = 64, map_height = 64;
    double tau = kDefaultTau;
    LossWeights weights;
    bool freeze_student = false;
    bool freeze_texture = false;
    bool freeze_head_map = false, freeze_body_map = false;
    bool freeze_position_shapes = false, freeze_color_shapes = false;
    std::uint32_t checkpoint_every = 100;  // iterations between last-good snapshots
    std::ostream* log = nullptr;           // line-delimited records
    std::uint32_t log_every = 50;
};

void validate(const TrainConfig& c);

struct LossRecord {
    std::uint32_t iteration = 0;
    LossTerms loss;
    double seconds = 0.0;
};

std::string format_record(const LossRecord& r);

struct TrainResult {
    StudentBundle bundle;
    GaussianTexture texture;
    std::vector<LossRecord> curve;
    bool diverged = false;
    std::uint32_t last_good_iteration = 0;
};

/// Optimizes S_b, S_c, the frame embeddings and the texture's opacity, SH
/// and gamma against L_rec + l_non L_non + l_sem L_sem. Blend shapes stay
/// at zero. Frame t of the teacher pairs with frame t of the sequence.
TrainResult bake(const RiggedTemplate& tpl, const GaussianTexture& tex, const StudentBundle& bundle,
                 const TeacherSource& teacher, const MotionSequence& seq, const TrainConfig& config);

/// Ground-truth images for fine-tuning, one entry per sequence frame.
struct FinetuneFrame {
    std::vector<double> color, normal, alpha;
};

/// Optimizes H, B, U and C against L_rec with S frozen.
TrainResult finetune(const RiggedTemplate& tpl, const GaussianTexture& tex, const StudentBundle& bundle,
                     std::span<const FinetuneFrame> frames, const MotionSequence& seq, const TrainConfig& config);

FinetuneFrame finetune_frame_from(const TeacherFrame& frame);

/// Held-out L_non of a bundle against a teacher (student maps from the
/// bundle's fallback embedding row 0 when frames carry no z).
double evaluate_nonrigid(const RiggedTemplate& tpl, const StudentBundle& bundle, const TeacherSource& teacher,
                         const MotionSequence& seq);

// --- quantization ---------------------------------------------------------------------

constexpr double kQuantizeBound = 1e-2;

struct QuantizeReport {
    double max_rel_deviation = 0.0;  // max |q - f| / max |f| over all outputs
    std::size_t samples = 0;
    bool within_bound = false;
};

/// Rounds every MLP and mapping-net weight to binary16 and marks the bundle.
StudentBundle quantize_bundle(const StudentBundle& bundle);

/// Paired inference of `full` and `quantized` on random vertex/pose inputs.
QuantizeReport measure_quantization(const StudentBundle& full, const StudentBundle& quantized, std::size_t samples,
                                    std::uint64_t seed);

}  // namespace meshsplat
