/* Copyright Contributors to the meshsplat Project
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libmeshsplat. Objects are opaque handles released with the
 * matching *_free function. Every fallible call returns ms_status; on error
 * ms_last_error() holds a one-line message for the calling thread.
 */
#ifndef MESHSPLAT_H
#define MESHSPLAT_H

#include <stddef.h>
#include <stdint.h>

#if defined(MESHSPLAT_BUILDING_LIBRARY)
#define MS_API __attribute__((visibility("default")))
#else
#define MS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ms_status {
    MS_OK = 0,
    MS_ERR_INVALID_ARGUMENT = 1,
    MS_ERR_VALIDATION = 2,
    MS_ERR_FORMAT = 3,
    MS_ERR_IO = 4,
    MS_ERR_RUNTIME = 5
} ms_status;

typedef struct ms_template ms_template;
typedef struct ms_texture ms_texture;
typedef struct ms_motion ms_motion;
typedef struct ms_bundle ms_bundle;
typedef struct ms_teacher ms_teacher;

MS_API const char* ms_version(void);
MS_API const char* ms_last_error(void);
/* 0 selects the host core count. */
MS_API void ms_set_threads(unsigned count);

/* --- templates ------------------------------------------------------------ */

typedef struct ms_rig_config {
    uint32_t joints;          /* >= 6 */
    uint32_t radial_segments;
    uint32_t rings_per_bone;
    uint32_t expressions;
    int cloth;                /* nonzero: add a skirt component */
    uint64_t seed;
} ms_rig_config;

MS_API void ms_rig_config_default(ms_rig_config* config);
MS_API ms_status ms_template_generate(const ms_rig_config* config, ms_template** out);
MS_API ms_status ms_template_load(const char* path, ms_template** out);
MS_API ms_status ms_template_save(const ms_template* tpl, const char* path);
/* Appends an OBJ garment (rest pose of the body) as a clothing component. */
MS_API ms_status ms_template_add_garment(const ms_template* body, const char* obj_path, float r, float g, float b,
                                         ms_template** out);
MS_API void ms_template_free(ms_template* tpl);

typedef struct ms_template_info {
    size_t vertices, faces, joints, cloth_vertices;
    uint32_t theta_dim, expressions;
} ms_template_info;
MS_API ms_status ms_template_get_info(const ms_template* tpl, ms_template_info* info);

/* --- Gaussian textures ----------------------------------------------------- */

MS_API ms_status ms_texture_bind(const ms_template* tpl, uint32_t k_min, uint32_t k_max, uint32_t sh_degree,
                                 uint64_t seed, ms_texture** out);
MS_API ms_status ms_texture_load(const char* path, ms_texture** out);
MS_API ms_status ms_texture_save(const ms_texture* tex, const char* path);
MS_API size_t ms_texture_size(const ms_texture* tex);
MS_API void ms_texture_free(ms_texture* tex);

/* --- motion ---------------------------------------------------------------- */

typedef struct ms_motion_config {
    uint32_t frames;
    uint32_t cameras;
    uint32_t width, height;
    double pose_amplitude;  /* rad */
    double camera_distance; /* m */
    double fov_y_deg;
    double time_offset;
    uint64_t seed;
} ms_motion_config;

MS_API void ms_motion_config_default(ms_motion_config* config);
MS_API ms_status ms_motion_generate(const ms_template* tpl, const ms_motion_config* config, ms_motion** out);
MS_API ms_status ms_motion_load(const char* path, ms_motion** out);
MS_API ms_status ms_motion_save(const ms_motion* motion, const char* path);
MS_API size_t ms_motion_frames(const ms_motion* motion);
MS_API void ms_motion_free(ms_motion* motion);

/* --- student bundles --------------------------------------------------------- */

typedef struct ms_student_config {
    uint32_t pe_levels, hidden, layers, embedding_dim;
    uint32_t head_coeffs, body_coeffs, map_hidden;
} ms_student_config;

MS_API void ms_student_config_default(ms_student_config* config);
/* Sizes are taken from the template, texture and frame count. */
MS_API ms_status ms_bundle_create(const ms_template* tpl, const ms_texture* tex, uint32_t frames,
                                  const ms_student_config* config, uint64_t seed, ms_bundle** out);
MS_API ms_status ms_bundle_load(const char* path, ms_bundle** out);
MS_API ms_status ms_bundle_save(const ms_bundle* bundle, const char* path);
/* Zeroes every weight, embedding and blend shape. */
MS_API ms_status ms_bundle_zero(ms_bundle* bundle);
MS_API void ms_bundle_free(ms_bundle* bundle);

typedef struct ms_quantize_report {
    double max_rel_deviation;
    double bound;
    size_t samples;
    int within_bound;
} ms_quantize_report;

MS_API ms_status ms_bundle_quantize(const ms_bundle* bundle, size_t samples, uint64_t seed, ms_bundle** out,
                                    ms_quantize_report* report);

/* --- teachers ---------------------------------------------------------------- */

typedef enum ms_field { MS_FIELD_NONE = 0, MS_FIELD_SWAY = 1, MS_FIELD_BREATHING = 2 } ms_field;

MS_API ms_status ms_teacher_procedural(const ms_template* tpl, const ms_texture* tex, const ms_motion* motion,
                                       ms_field field, double amplitude, uint64_t seed, uint32_t map_width,
                                       uint32_t map_height, ms_teacher** out);
MS_API ms_status ms_teacher_export(const ms_teacher* teacher, const char* dir);
MS_API ms_status ms_teacher_ingest(const char* dir, ms_teacher** out);
MS_API void ms_teacher_free(ms_teacher* teacher);

/* --- training ------------------------------------------------------------------ */

typedef struct ms_train_config {
    uint32_t iterations;
    uint32_t batch_size;
    uint64_t seed;
    double lr_attributes, lr_mlp, lr_embeddings, lr_blend_shapes;
    double lr_final_ratio; /* exponential decay target, 1 = constant */
    double lambda_ssim, lambda_lpips, lambda_normal, lambda_nonrigid, lambda_semantic;
    double tau; /* 1/m */
    uint32_t map_width, map_height;
    int freeze_student, freeze_texture;
    uint32_t log_every;
} ms_train_config;

MS_API void ms_train_config_default(ms_train_config* config);

typedef struct ms_train_summary {
    uint32_t iterations;
    double first_loss, final_loss;
    double final_nonrigid;
    int diverged;
    uint32_t last_good_iteration;
    double seconds;
} ms_train_summary;

/* Called once per logged iteration with a key=value record. */
typedef void (*ms_log_fn)(const char* line, void* user);

MS_API ms_status ms_bake(const ms_template* tpl, const ms_texture* tex, const ms_bundle* bundle,
                         const ms_teacher* teacher, const ms_motion* motion, const ms_train_config* config,
                         ms_log_fn log, void* user, ms_bundle** out_bundle, ms_texture** out_texture,
                         ms_train_summary* summary);
/* Ground truth comes from the teacher's images; its maps are ignored. */
MS_API ms_status ms_finetune(const ms_template* tpl, const ms_texture* tex, const ms_bundle* bundle,
                             const ms_teacher* teacher, const ms_motion* motion, const ms_train_config* config,
                             ms_log_fn log, void* user, ms_bundle** out_bundle, ms_train_summary* summary);
/* Mean non-rigid map loss of the bundle against a teacher (m). */
MS_API ms_status ms_evaluate_nonrigid(const ms_template* tpl, const ms_bundle* bundle, const ms_teacher* teacher,
                                      const ms_motion* motion, double* out);

typedef struct ms_check_report {
    const char* name;
    double tolerance;
    double max_rel_error;
    size_t checked, failing;
    double seconds;
} ms_check_report;
typedef void (*ms_check_fn)(const ms_check_report* report, void* user);

/* Runs every gradient suite; *failed receives the number of failing suites. */
MS_API ms_status ms_preflight(uint64_t seed, int quick, ms_check_fn callback, void* user, size_t* failed);

/* --- rendering ------------------------------------------------------------------ */

typedef struct ms_render_options {
    uint32_t width, height;   /* 0: use the motion's camera */
    int normal;               /* write a normal image instead of color */
    int relight;              /* shade color with the light below */
    double light_dir[3];
    double ambient;
    int sort_u16;
    int use_bundle_blend;     /* apply H, B, U, C when a bundle is given */
} ms_render_options;

MS_API void ms_render_options_default(ms_render_options* options);

/* Renders frame `frame` of `motion` (NULL motion: rest pose, front camera).
 * `bundle` may be NULL. The image is written to `path` (.ppm or .png). */
MS_API ms_status ms_render_frame(const ms_template* tpl, const ms_texture* tex, const ms_bundle* bundle,
                                 const ms_motion* motion, size_t frame, const ms_render_options* options,
                                 const char* path);

typedef struct ms_bench_config {
    uint32_t gaussians;
    uint32_t width, height;
    uint32_t frames;
    uint64_t seed;
    int sort_u16;
} ms_bench_config;

typedef struct ms_bench_result {
    size_t gaussians, vertices, frames;
    double fps;
    double student_ms, skinning_ms, gaussians_ms, project_ms, sort_ms, bin_ms, raster_ms, total_ms;
} ms_bench_result;

MS_API ms_status ms_bench(const ms_bench_config* config, ms_bench_result* result);

#ifdef __cplusplus
}
#endif

#endif /* MESHSPLAT_H */
