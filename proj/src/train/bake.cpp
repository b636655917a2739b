// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/train.hpp"
#include "train/stage_common.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace meshsplat {

using detail::Group;

void validate(const TrainConfig& c) {
    if (c.iterations == 0) throw ValidationError("iterations must be > 0");
    if (c.batch_size == 0) throw ValidationError("batch size must be > 0");
    if (c.map_width == 0 || c.map_height == 0) throw ValidationError("map resolution must be positive");
    if (!(c.tau > 0.0)) throw ValidationError("tau must be positive");
    for (double lr : {c.lr.attributes, c.lr.mlp, c.lr.embeddings, c.lr.blend_shapes}) {
        if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("learning rates must be finite and >= 0");
    }
    if (!(c.lr_final_ratio > 0.0 && c.lr_final_ratio <= 1.0)) throw ValidationError("lr_final_ratio must be in (0, 1]");
    validate(c.weights);
}

std::string format_record(const LossRecord& r) {
    std::ostringstream s;
    s << std::setprecision(9) << "iter=" << r.iteration << " total=" << r.loss.total << " l1=" << r.loss.l1
      << " dssim=" << r.loss.dssim << " normal=" << r.loss.normal << " nonrigid=" << r.loss.nonrigid
      << " semantic=" << r.loss.semantic << " seconds=" << std::setprecision(4) << r.seconds;
    return s.str();
}

namespace {

struct GtFrame {
    std::vector<double> color, normal, alpha;
};

GtFrame decode_teacher(const TeacherFrame& f) {
    GtFrame g;
    g.color = f.color.rgb;
    g.normal.resize(f.normal.rgb.size());
    for (std::size_t i = 0; i < g.normal.size(); ++i) g.normal[i] = 2.0 * f.normal.rgb[i] - 1.0;
    const std::size_t n = std::size_t(f.alpha.width) * f.alpha.height;
    g.alpha.resize(n);
    for (std::size_t p = 0; p < n; ++p) g.alpha[p] = f.alpha.rgb[p * 3];
    return g;
}

std::vector<Vec3> template_vertices(const RiggedTemplate& tpl) {
    std::vector<Vec3> v(tpl.vertices.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = tpl.vertices[i].cast<double>();
    return v;
}

}  // namespace

FinetuneFrame finetune_frame_from(const TeacherFrame& frame) {
    GtFrame g = decode_teacher(frame);
    return {std::move(g.color), std::move(g.normal), std::move(g.alpha)};
}

TrainResult bake(const RiggedTemplate& tpl, const GaussianTexture& tex, const StudentBundle& bundle_in,
                 const TeacherSource& teacher, const MotionSequence& seq, const TrainConfig& config) {
    validate(config);
    validate(teacher);
    validate(seq);
    validate(bundle_in, tpl, tex);
    const std::size_t nf = seq.frames.size();
    if (teacher.frames.size() != nf) throw DimensionError("teacher and sequence frame counts differ");
    if (bundle_in.config.frame_count != nf) {
        throw DimensionError("bundle has " + std::to_string(bundle_in.config.frame_count) +
                             " embedding rows for a " + std::to_string(nf) + "-frame sequence");
    }
    const DeformationMap& m0 = teacher.frames[0].maps;
    if (m0.front.width != config.map_width || m0.front.height != config.map_height) {
        throw DimensionError("teacher maps do not match the configured map resolution");
    }
    for (std::size_t t = 0; t < nf; ++t) {
        const Camera& cam = seq.cameras[seq.camera_index[t]];
        if (teacher.frames[t].color.width != cam.width || teacher.frames[t].color.height != cam.height) {
            throw DimensionError("teacher frame " + std::to_string(t) + " resolution differs from its camera");
        }
    }

    TrainResult out;
    out.bundle = bundle_in;
    out.texture = tex;
    StudentBundle& b = out.bundle;
    GaussianTexture& tx = out.texture;

    const MapRasters rasters = make_map_rasters(template_vertices(tpl), tpl.faces, config.map_width, config.map_height);
    const std::vector<Vec3> vlabels = semantic_labels(tpl, config.tau);
    const std::vector<Vec3> glabels = interpolate_vertex_attribute(tpl.faces, tx, vlabels);
    std::vector<GtFrame> gt;
    for (const auto& f : teacher.frames) gt.push_back(decode_teacher(f));

    const std::size_t nbody = b.body.parameter_count();
    Group mlp, emb, opa, sh, gam;
    mlp.init(detail::concat(mlp_parameters(b.body), mlp_parameters(b.cloth)), config.lr.mlp, config.freeze_student);
    emb.init(detail::to_doubles(b.embeddings), config.lr.embeddings, config.freeze_student);
    opa.init(detail::to_doubles(tx.opacity_logit), config.lr.attributes, config.freeze_texture);
    sh.init(detail::to_doubles(tx.sh), config.lr.attributes, config.freeze_texture);
    gam.init(detail::to_doubles(tx.gamma), config.lr.attributes, config.freeze_texture);

    StepContext ctx;
    ctx.tpl = &tpl;
    ctx.tex = &tx;
    ctx.bundle = &b;
    ctx.rasters = &rasters;
    ctx.vertex_labels = vlabels;
    ctx.gaussian_labels = glabels;
    ctx.weights = config.weights;
    ctx.weights.lpips = 0.0;
    ctx.switches.student = !config.freeze_student;
    ctx.switches.texture = !config.freeze_texture;

    StudentBundle good_bundle = b;
    GaussianTexture good_tex = tx;
    Rng rng(config.seed);
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint32_t ed = b.config.embedding_dim;
    const double inv_batch = 1.0 / double(config.batch_size);

    for (std::uint32_t it = 1; it <= config.iterations; ++it) {
        for (Group* g : {&mlp, &emb, &opa, &sh, &gam}) g->zero();
        LossTerms terms;
        for (std::uint32_t k = 0; k < config.batch_size; ++k) {
            const std::size_t t = std::size_t(rng.uniform_int(0, int(nf) - 1));
            const GtFrame& g = gt[t];
            FrameTargets targets{g.color, g.normal, g.alpha, &teacher.frames[t].maps};
            const StepResult r = train_step(ctx, seq.frames[t], t, seq.cameras[seq.camera_index[t]], targets);
            detail::add_terms(terms, r.loss, inv_batch);
            if (ctx.switches.student) {
                mlp.add(flatten(r.grad.body), inv_batch);
                mlp.add(flatten(r.grad.cloth), inv_batch, nbody);
                emb.add(r.grad.embedding, inv_batch, t * ed);
            }
            if (ctx.switches.texture) {
                opa.add(r.grad.opacity_logit, inv_batch);
                sh.add(r.grad.sh, inv_batch);
                gam.add(r.grad.gamma, inv_batch);
            }
        }
        LossRecord rec{it, terms, detail::seconds_since(t0)};
        if (!std::isfinite(terms.total)) {
            out.diverged = true;
            b = good_bundle;
            tx = good_tex;
            if (config.log) *config.log << "diverged iter=" << it << " restored=" << out.last_good_iteration << "\n";
            break;
        }
        out.curve.push_back(rec);
        if (config.log && (it == 1 || it % config.log_every == 0 || it == config.iterations)) {
            *config.log << format_record(rec) << "\n";
        }

        for (Group* g : {&mlp, &emb, &opa, &sh, &gam}) g->step(detail::lr_scale(config.lr_final_ratio, it, config.iterations));
        set_mlp_parameters(b.body, std::span<const double>(mlp.value).subspan(0, nbody));
        set_mlp_parameters(b.cloth, std::span<const double>(mlp.value).subspan(nbody));
        detail::to_floats(emb.value, b.embeddings);
        detail::to_floats(opa.value, tx.opacity_logit);
        detail::to_floats(sh.value, tx.sh);
        detail::to_floats(gam.value, tx.gamma);

        if (config.checkpoint_every > 0 && it % config.checkpoint_every == 0) {
            good_bundle = b;
            good_tex = tx;
            out.last_good_iteration = it;
        }
    }
    return out;
}

double evaluate_nonrigid(const RiggedTemplate& tpl, const StudentBundle& bundle, const TeacherSource& teacher,
                         const MotionSequence& seq) {
    if (teacher.frames.size() != seq.frames.size()) throw DimensionError("teacher and sequence frame counts differ");
    if (seq.frames.empty()) return 0.0;
    const DeformationMap& m0 = teacher.frames[0].maps;
    const MapRasters rasters = make_map_rasters(template_vertices(tpl), tpl.faces, m0.front.width, m0.front.height);
    double sum = 0.0;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const std::vector<Vec3> delta = student_deform(bundle, tpl, seq.frames[t]);
        sum += loss_nonrigid(rasterize_mesh_maps(rasters, delta), teacher.frames[t].maps).value;
    }
    return sum / double(seq.frames.size());
}

}  // namespace meshsplat
