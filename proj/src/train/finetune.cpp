// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"
#include "train/stage_common.hpp"

#include <cmath>
#include <ostream>

namespace meshsplat {

using detail::Group;

TrainResult finetune(const RiggedTemplate& tpl, const GaussianTexture& tex, const StudentBundle& bundle_in,
                     std::span<const FinetuneFrame> frames, const MotionSequence& seq, const TrainConfig& config) {
    validate(config);
    validate(seq);
    validate(bundle_in, tpl, tex);
    const std::size_t nf = seq.frames.size();
    if (frames.size() != nf) throw DimensionError("ground-truth and sequence frame counts differ");
    for (std::size_t t = 0; t < nf; ++t) {
        const Camera& cam = seq.cameras[seq.camera_index[t]];
        const std::size_t np = std::size_t(cam.width) * cam.height;
        if (frames[t].color.size() != np * 3 || (!frames[t].normal.empty() && frames[t].normal.size() != np * 3) ||
            (!frames[t].alpha.empty() && frames[t].alpha.size() != np)) {
            throw DimensionError("ground-truth frame " + std::to_string(t) + " resolution differs from its camera");
        }
    }

    TrainResult out;
    out.bundle = bundle_in;
    out.texture = tex;
    StudentBundle& b = out.bundle;

    Group head, body, U, C;
    head.init(mlp_parameters(b.head_map), config.lr.mlp, config.freeze_head_map);
    body.init(mlp_parameters(b.body_map), config.lr.mlp, config.freeze_body_map);
    U.init(detail::to_doubles(b.position_shapes), config.lr.blend_shapes, config.freeze_position_shapes);
    C.init(detail::to_doubles(b.color_shapes), config.lr.blend_shapes, config.freeze_color_shapes);

    StepContext ctx;
    ctx.tpl = &tpl;
    ctx.tex = &tex;
    ctx.bundle = &b;
    ctx.weights = config.weights;
    ctx.weights.lpips = 0.0;
    ctx.weights.nonrigid = 0.0;
    ctx.weights.semantic = 0.0;
    ctx.switches.blend_shapes = true;

    StudentBundle good = b;
    Rng rng(config.seed);
    const auto t0 = std::chrono::steady_clock::now();
    const double inv_batch = 1.0 / double(config.batch_size);

    for (std::uint32_t it = 1; it <= config.iterations; ++it) {
        for (Group* g : {&head, &body, &U, &C}) g->zero();
        LossTerms terms;
        for (std::uint32_t k = 0; k < config.batch_size; ++k) {
            const std::size_t t = std::size_t(rng.uniform_int(0, int(nf) - 1));
            const FinetuneFrame& f = frames[t];
            FrameTargets targets{f.color, f.normal, f.alpha, nullptr};
            const StepResult r = train_step(ctx, seq.frames[t], t, seq.cameras[seq.camera_index[t]], targets);
            detail::add_terms(terms, r.loss, inv_batch);
            head.add(flatten(r.grad.head_map), inv_batch);
            body.add(flatten(r.grad.body_map), inv_batch);
            U.add(r.grad.position_shapes, inv_batch);
            C.add(r.grad.color_shapes, inv_batch);
        }
        LossRecord rec{it, terms, detail::seconds_since(t0)};
        if (!std::isfinite(terms.total)) {
            out.diverged = true;
            b = good;
            if (config.log) *config.log << "diverged iter=" << it << " restored=" << out.last_good_iteration << "\n";
            break;
        }
        out.curve.push_back(rec);
        if (config.log && (it == 1 || it % config.log_every == 0 || it == config.iterations)) {
            *config.log << format_record(rec) << "\n";
        }
        for (Group* g : {&head, &body, &U, &C}) g->step(detail::lr_scale(config.lr_final_ratio, it, config.iterations));
        set_mlp_parameters(b.head_map, head.value);
        set_mlp_parameters(b.body_map, body.value);
        detail::to_floats(U.value, b.position_shapes);
        detail::to_floats(C.value, b.color_shapes);
        if (config.checkpoint_every > 0 && it % config.checkpoint_every == 0) {
            good = b;
            out.last_good_iteration = it;
        }
    }
    return out;
}

}  // namespace meshsplat
