// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/meshsplat.h"

#include "meshsplat/train.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <string>

using namespace meshsplat;

struct ms_template { RiggedTemplate value; };
struct ms_texture { GaussianTexture value; };
struct ms_motion { MotionSequence value; };
struct ms_bundle { StudentBundle value; };
struct ms_teacher { TeacherSource value; };

namespace {

thread_local std::string g_last_error;

ms_status status_of(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument: return MS_ERR_INVALID_ARGUMENT;
        case ErrorCode::validation: return MS_ERR_VALIDATION;
        case ErrorCode::format: return MS_ERR_FORMAT;
        case ErrorCode::io: return MS_ERR_IO;
        case ErrorCode::runtime: return MS_ERR_RUNTIME;
    }
    return MS_ERR_RUNTIME;
}

template <typename F>
ms_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return MS_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return MS_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MS_ERR_RUNTIME;
    }
}

void require(const void* p, const char* what) {
    if (!p) throw Error(ErrorCode::invalid_argument, std::string(what) + " is null");
}

TrainConfig train_config(const ms_train_config* c) {
    TrainConfig t;
    t.iterations = c->iterations;
    t.batch_size = c->batch_size;
    t.seed = c->seed;
    t.lr = {c->lr_attributes, c->lr_mlp, c->lr_embeddings, c->lr_blend_shapes};
    t.lr_final_ratio = c->lr_final_ratio;
    t.weights = {c->lambda_ssim, c->lambda_lpips, c->lambda_normal, c->lambda_nonrigid, c->lambda_semantic};
    t.tau = c->tau;
    t.map_width = c->map_width;
    t.map_height = c->map_height;
    t.freeze_student = c->freeze_student != 0;
    t.freeze_texture = c->freeze_texture != 0;
    t.log_every = c->log_every ? c->log_every : 50;
    return t;
}

// Forwards completed lines of the trainer's log stream to a callback.
class LineSink : public std::stringbuf {
public:
    LineSink(ms_log_fn fn, void* user) : fn_(fn), user_(user) {}
    int sync() override {
        flush_lines();
        return 0;
    }
    void flush_lines() {
        std::string s = str();
        std::size_t start = 0, nl;
        while ((nl = s.find('\n', start)) != std::string::npos) {
            if (fn_) fn_(s.substr(start, nl - start).c_str(), user_);
            start = nl + 1;
        }
        str(s.substr(start));
    }

private:
    ms_log_fn fn_;
    void* user_;
};

class LogStream {
public:
    LogStream(ms_log_fn fn, void* user) : sink_(fn, user), os_(&sink_) {}
    ~LogStream() { sink_.flush_lines(); }
    std::ostream* get() { return &os_; }
    void flush() {
        os_.flush();
        sink_.flush_lines();
    }

private:
    LineSink sink_;
    std::ostream os_;
};

void fill_summary(const TrainResult& r, double seconds, ms_train_summary* s) {
    if (!s) return;
    *s = {};
    s->iterations = std::uint32_t(r.curve.size());
    if (!r.curve.empty()) {
        s->first_loss = r.curve.front().loss.total;
        s->final_loss = r.curve.back().loss.total;
        s->final_nonrigid = r.curve.back().loss.nonrigid;
    }
    s->diverged = r.diverged ? 1 : 0;
    s->last_good_iteration = r.last_good_iteration;
    s->seconds = seconds;
}

Camera default_camera(const RiggedTemplate& tpl, std::uint32_t w, std::uint32_t h) {
    MotionConfig mc;
    mc.frames = 1;
    mc.camera_count = 1;
    mc.width = w;
    mc.height = h;
    return make_motion(tpl, mc).cameras[0];
}

}  // namespace

extern "C" {

const char* ms_version(void) { return "0.1.0"; }
const char* ms_last_error(void) { return g_last_error.c_str(); }
void ms_set_threads(unsigned count) { set_thread_count(count); }

// --- templates ---------------------------------------------------------------

void ms_rig_config_default(ms_rig_config* c) {
    if (!c) return;
    const CapsuleRigConfig d;
    *c = {d.joint_count, d.radial_segments, d.rings_per_bone, d.expression_count, d.cloth ? 1 : 0, d.seed};
}

ms_status ms_template_generate(const ms_rig_config* c, ms_template** out) {
    return guarded([&] {
        require(c, "config");
        require(out, "out");
        CapsuleRigConfig rc;
        rc.joint_count = c->joints;
        rc.radial_segments = c->radial_segments;
        rc.rings_per_bone = c->rings_per_bone;
        rc.expression_count = c->expressions;
        rc.cloth = c->cloth != 0;
        rc.seed = c->seed;
        *out = new ms_template{make_capsule_rig(rc)};
    });
}

ms_status ms_template_load(const char* path, ms_template** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new ms_template{load_template(path)};
    });
}

ms_status ms_template_save(const ms_template* tpl, const char* path) {
    return guarded([&] {
        require(tpl, "template");
        require(path, "path");
        save_template(path, tpl->value);
    });
}

ms_status ms_template_add_garment(const ms_template* body, const char* obj_path, float r, float g, float b,
                                  ms_template** out) {
    return guarded([&] {
        require(body, "template");
        require(obj_path, "path");
        require(out, "out");
        ClothingComponent comp;
        comp.mesh = load_obj(obj_path);
        comp.color = Vec3f(r, g, b);
        *out = new ms_template{build_clothed_template(body->value, {comp}, FrameInput::rest(body->value))};
    });
}

void ms_template_free(ms_template* tpl) { delete tpl; }

ms_status ms_template_get_info(const ms_template* tpl, ms_template_info* info) {
    return guarded([&] {
        require(tpl, "template");
        require(info, "info");
        const RiggedTemplate& t = tpl->value;
        info->vertices = t.vertices.size();
        info->faces = t.faces.size();
        info->joints = t.joints.size();
        info->cloth_vertices = 0;
        for (auto m : t.cloth_mask) info->cloth_vertices += m ? 1 : 0;
        info->theta_dim = std::uint32_t(t.theta_dim());
        info->expressions = t.expression_count;
    });
}

// --- textures ------------------------------------------------------------------

ms_status ms_texture_bind(const ms_template* tpl, uint32_t k_min, uint32_t k_max, uint32_t sh_degree, uint64_t seed,
                          ms_texture** out) {
    return guarded([&] {
        require(tpl, "template");
        require(out, "out");
        GaussianTexture tex = init_texture(tpl->value, k_min, k_max, seed, sh_degree);
        paint_from_segmentation(tex, tpl->value);
        *out = new ms_texture{std::move(tex)};
    });
}

ms_status ms_texture_load(const char* path, ms_texture** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new ms_texture{load_texture(path)};
    });
}

ms_status ms_texture_save(const ms_texture* tex, const char* path) {
    return guarded([&] {
        require(tex, "texture");
        require(path, "path");
        save_texture(path, tex->value);
    });
}

size_t ms_texture_size(const ms_texture* tex) { return tex ? tex->value.size() : 0; }
void ms_texture_free(ms_texture* tex) { delete tex; }

// --- motion ----------------------------------------------------------------------

void ms_motion_config_default(ms_motion_config* c) {
    if (!c) return;
    const MotionConfig d;
    *c = {d.frames, d.camera_count, d.width, d.height, d.pose_amplitude, d.camera_distance, d.fov_y_deg,
          d.time_offset, d.seed};
}

ms_status ms_motion_generate(const ms_template* tpl, const ms_motion_config* c, ms_motion** out) {
    return guarded([&] {
        require(tpl, "template");
        require(c, "config");
        require(out, "out");
        MotionConfig mc;
        mc.frames = c->frames;
        mc.camera_count = c->cameras;
        mc.width = c->width;
        mc.height = c->height;
        mc.pose_amplitude = c->pose_amplitude;
        mc.camera_distance = c->camera_distance;
        mc.fov_y_deg = c->fov_y_deg;
        mc.time_offset = c->time_offset;
        mc.seed = c->seed;
        *out = new ms_motion{make_motion(tpl->value, mc)};
    });
}

ms_status ms_motion_load(const char* path, ms_motion** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new ms_motion{load_motion(path)};
    });
}

ms_status ms_motion_save(const ms_motion* m, const char* path) {
    return guarded([&] {
        require(m, "motion");
        require(path, "path");
        save_motion(path, m->value);
    });
}

size_t ms_motion_frames(const ms_motion* m) { return m ? m->value.frames.size() : 0; }
void ms_motion_free(ms_motion* m) { delete m; }

// --- bundles ---------------------------------------------------------------------

void ms_student_config_default(ms_student_config* c) {
    if (!c) return;
    const StudentConfig d;
    *c = {d.pe_levels, d.hidden, d.layers, d.embedding_dim, d.head_coeffs, d.body_coeffs, d.map_hidden};
}

ms_status ms_bundle_create(const ms_template* tpl, const ms_texture* tex, uint32_t frames,
                           const ms_student_config* c, uint64_t seed, ms_bundle** out) {
    return guarded([&] {
        require(tpl, "template");
        require(tex, "texture");
        require(out, "out");
        StudentConfig sc = student_config_for(tpl->value, tex->value, frames);
        if (c) {
            sc.pe_levels = c->pe_levels;
            sc.hidden = c->hidden;
            sc.layers = c->layers;
            sc.embedding_dim = c->embedding_dim;
            sc.head_coeffs = c->head_coeffs;
            sc.body_coeffs = c->body_coeffs;
            sc.map_hidden = c->map_hidden;
        }
        *out = new ms_bundle{make_student(sc, seed)};
    });
}

ms_status ms_bundle_load(const char* path, ms_bundle** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new ms_bundle{load_bundle(path)};
    });
}

ms_status ms_bundle_save(const ms_bundle* b, const char* path) {
    return guarded([&] {
        require(b, "bundle");
        require(path, "path");
        save_bundle(path, b->value);
    });
}

ms_status ms_bundle_zero(ms_bundle* b) {
    return guarded([&] {
        require(b, "bundle");
        StudentBundle& s = b->value;
        for (Mlp* m : {&s.body, &s.cloth, &s.head_map, &s.body_map}) zero_mlp(*m);
        std::fill(s.embeddings.begin(), s.embeddings.end(), 0.0f);
        std::fill(s.position_shapes.begin(), s.position_shapes.end(), 0.0f);
        std::fill(s.color_shapes.begin(), s.color_shapes.end(), 0.0f);
    });
}

void ms_bundle_free(ms_bundle* b) { delete b; }

ms_status ms_bundle_quantize(const ms_bundle* b, size_t samples, uint64_t seed, ms_bundle** out,
                             ms_quantize_report* report) {
    return guarded([&] {
        require(b, "bundle");
        require(out, "out");
        StudentBundle q = quantize_bundle(b->value);
        const QuantizeReport r = measure_quantization(b->value, q, samples ? samples : 1000, seed);
        if (report) *report = {r.max_rel_deviation, kQuantizeBound, r.samples, r.within_bound ? 1 : 0};
        *out = new ms_bundle{std::move(q)};
    });
}

// --- teachers -----------------------------------------------------------------------

ms_status ms_teacher_procedural(const ms_template* tpl, const ms_texture* tex, const ms_motion* motion,
                                ms_field field, double amplitude, uint64_t seed, uint32_t map_width,
                                uint32_t map_height, ms_teacher** out) {
    return guarded([&] {
        require(tpl, "template");
        require(tex, "texture");
        require(motion, "motion");
        require(out, "out");
        ProceduralTeacherConfig pc;
        switch (field) {
            case MS_FIELD_NONE: pc.field = TeacherField::none; break;
            case MS_FIELD_SWAY: pc.field = TeacherField::sway; break;
            case MS_FIELD_BREATHING: pc.field = TeacherField::breathing; break;
            default: throw Error(ErrorCode::invalid_argument, "unknown teacher field");
        }
        pc.amplitude = amplitude;
        pc.seed = seed;
        pc.map_width = map_width;
        pc.map_height = map_height;
        *out = new ms_teacher{procedural_teacher(tpl->value, tex->value, motion->value, pc)};
    });
}

ms_status ms_teacher_export(const ms_teacher* t, const char* dir) {
    return guarded([&] {
        require(t, "teacher");
        require(dir, "dir");
        export_teacher(t->value, dir);
    });
}

ms_status ms_teacher_ingest(const char* dir, ms_teacher** out) {
    return guarded([&] {
        require(dir, "dir");
        require(out, "out");
        *out = new ms_teacher{ingest_teacher(dir)};
    });
}

void ms_teacher_free(ms_teacher* t) { delete t; }

// --- training ---------------------------------------------------------------------------

void ms_train_config_default(ms_train_config* c) {
    if (!c) return;
    const TrainConfig d;
    *c = {};
    c->iterations = d.iterations;
    c->batch_size = d.batch_size;
    c->seed = d.seed;
    c->lr_attributes = d.lr.attributes;
    c->lr_mlp = d.lr.mlp;
    c->lr_embeddings = d.lr.embeddings;
    c->lr_blend_shapes = d.lr.blend_shapes;
    c->lr_final_ratio = d.lr_final_ratio;
    c->lambda_ssim = d.weights.ssim;
    c->lambda_lpips = d.weights.lpips;
    c->lambda_normal = d.weights.normal;
    c->lambda_nonrigid = d.weights.nonrigid;
    c->lambda_semantic = d.weights.semantic;
    c->tau = d.tau;
    c->map_width = d.map_width;
    c->map_height = d.map_height;
    c->log_every = d.log_every;
}

ms_status ms_bake(const ms_template* tpl, const ms_texture* tex, const ms_bundle* bundle, const ms_teacher* teacher,
                  const ms_motion* motion, const ms_train_config* config, ms_log_fn log, void* user,
                  ms_bundle** out_bundle, ms_texture** out_texture, ms_train_summary* summary) {
    return guarded([&] {
        require(tpl, "template");
        require(tex, "texture");
        require(bundle, "bundle");
        require(teacher, "teacher");
        require(motion, "motion");
        require(config, "config");
        require(out_bundle, "out_bundle");
        TrainConfig tc = train_config(config);
        LogStream ls(log, user);
        tc.log = ls.get();
        const auto t0 = std::chrono::steady_clock::now();
        TrainResult r = bake(tpl->value, tex->value, bundle->value, teacher->value, motion->value, tc);
        ls.flush();
        fill_summary(r, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), summary);
        *out_bundle = new ms_bundle{std::move(r.bundle)};
        if (out_texture) *out_texture = new ms_texture{std::move(r.texture)};
    });
}

ms_status ms_finetune(const ms_template* tpl, const ms_texture* tex, const ms_bundle* bundle,
                      const ms_teacher* teacher, const ms_motion* motion, const ms_train_config* config,
                      ms_log_fn log, void* user, ms_bundle** out_bundle, ms_train_summary* summary) {
    return guarded([&] {
        require(tpl, "template");
        require(tex, "texture");
        require(bundle, "bundle");
        require(teacher, "teacher");
        require(motion, "motion");
        require(config, "config");
        require(out_bundle, "out_bundle");
        TrainConfig tc = train_config(config);
        LogStream ls(log, user);
        tc.log = ls.get();
        std::vector<FinetuneFrame> frames;
        for (const auto& f : teacher->value.frames) frames.push_back(finetune_frame_from(f));
        const auto t0 = std::chrono::steady_clock::now();
        TrainResult r = finetune(tpl->value, tex->value, bundle->value, frames, motion->value, tc);
        ls.flush();
        fill_summary(r, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), summary);
        *out_bundle = new ms_bundle{std::move(r.bundle)};
    });
}

ms_status ms_evaluate_nonrigid(const ms_template* tpl, const ms_bundle* bundle, const ms_teacher* teacher,
                               const ms_motion* motion, double* out) {
    return guarded([&] {
        require(tpl, "template");
        require(bundle, "bundle");
        require(teacher, "teacher");
        require(motion, "motion");
        require(out, "out");
        *out = evaluate_nonrigid(tpl->value, bundle->value, teacher->value, motion->value);
    });
}

ms_status ms_preflight(uint64_t seed, int quick, ms_check_fn callback, void* user, size_t* failed) {
    return guarded([&] {
        const auto reports = preflight(seed, quick != 0);
        std::size_t bad = 0;
        for (const auto& r : reports) {
            if (!r.passed()) ++bad;
            if (callback) {
                const ms_check_report c{r.name.c_str(), r.tolerance, r.max_rel_error, r.checked, r.failing.size(),
                                        r.seconds};
                callback(&c, user);
            }
        }
        if (failed) *failed = bad;
    });
}

// --- rendering -------------------------------------------------------------------------------

void ms_render_options_default(ms_render_options* o) {
    if (!o) return;
    *o = {};
    o->light_dir[0] = 0.3;
    o->light_dir[1] = -1.0;
    o->light_dir[2] = 0.6;
    o->ambient = 0.25;
    o->use_bundle_blend = 1;
}

ms_status ms_render_frame(const ms_template* tpl, const ms_texture* tex, const ms_bundle* bundle,
                          const ms_motion* motion, size_t frame, const ms_render_options* options, const char* path) {
    return guarded([&] {
        require(tpl, "template");
        require(tex, "texture");
        require(path, "path");
        ms_render_options o;
        ms_render_options_default(&o);
        if (options) o = *options;
        const RiggedTemplate& t = tpl->value;
        FrameInput input = FrameInput::rest(t);
        Camera cam;
        if (motion) {
            const MotionSequence& m = motion->value;
            if (frame >= m.frames.size()) {
                throw Error(ErrorCode::invalid_argument, "frame " + std::to_string(frame) + " is out of range");
            }
            input = m.frames[frame];
            cam = m.cameras[m.camera_index[frame]];
            if (o.width && o.height && (o.width != cam.width || o.height != cam.height)) {
                const double sx = double(o.width) / cam.width, sy = double(o.height) / cam.height;
                cam.fx *= float(sx);
                cam.cx *= float(sx);
                cam.fy *= float(sy);
                cam.cy *= float(sy);
                cam.width = o.width;
                cam.height = o.height;
            }
        } else {
            cam = default_camera(t, o.width ? o.width : 256, o.height ? o.height : 256);
        }
        if (bundle) validate(bundle->value, t, tex->value);
        AnimateOptions ao;
        ao.render.normal = o.normal || o.relight;
        ao.render.sort = o.sort_u16 ? SortMode::quant_u16 : SortMode::exact_f32;
        ao.use_blend_shapes = o.use_bundle_blend != 0;
        const FrameState st = animate_frame(t, tex->value, bundle ? &bundle->value : nullptr, input, cam, ao);
        Image img;
        if (o.normal) {
            img = normal_image(st.target);
        } else if (o.relight) {
            Light light;
            light.direction = Vec3(o.light_dir[0], o.light_dir[1], o.light_dir[2]);
            light.ambient = Vec3::Constant(o.ambient);
            img.width = st.target.width;
            img.height = st.target.height;
            img.rgb = relight(st.target.color, st.target.normal, light);
        } else {
            img = color_image(st.target);
        }
        write_image(path, img, image_format_from_path(path));
    });
}

ms_status ms_bench(const ms_bench_config* c, ms_bench_result* result) {
    return guarded([&] {
        require(c, "config");
        require(result, "result");
        BenchConfig bc;
        bc.gaussians = c->gaussians;
        bc.width = c->width;
        bc.height = c->height;
        bc.frames = c->frames;
        bc.seed = c->seed;
        bc.sort = c->sort_u16 ? SortMode::quant_u16 : SortMode::exact_f32;
        const BenchResult r = run_bench(bc);
        *result = {r.gaussians, r.vertices, r.frames, r.fps, r.student_ms, r.skinning_ms, r.gaussians_ms,
                   r.project_ms, r.sort_ms, r.bin_ms, r.raster_ms, r.total_ms};
    });
}

}  // extern "C"
