// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// meshsplat command-line tool. Every subcommand prints one key=value
// summary line on stdout; diagnostics go to stderr.

#include "meshsplat/meshsplat.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kUsage = 2, kValidation = 3, kRuntime = 4 };

int log_level() {
    const char* v = std::getenv("MESHSPLAT_LOG");
    if (!v) return 1;
    const std::string s = v;
    if (s == "quiet" || s == "error") return 0;
    if (s == "debug") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << msg << "\n";
}

struct Failure {
    ms_status status;
    std::string message;
};

void check(ms_status s) {
    if (s != MS_OK) throw Failure{s, ms_last_error()};
}

int exit_for(ms_status s) {
    switch (s) {
        case MS_OK: return kOk;
        case MS_ERR_INVALID_ARGUMENT: return kUsage;
        case MS_ERR_VALIDATION:
        case MS_ERR_FORMAT: return kValidation;
        default: return kRuntime;
    }
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(p); }
    T** out() {
        Free(p);
        p = nullptr;
        return &p;
    }
    T* get() const { return p; }
};

using Template = Handle<ms_template, ms_template_free>;
using Texture = Handle<ms_texture, ms_texture_free>;
using Motion = Handle<ms_motion, ms_motion_free>;
using Bundle = Handle<ms_bundle, ms_bundle_free>;
using Teacher = Handle<ms_teacher, ms_teacher_free>;

struct Resolution {
    std::uint32_t w = 0, h = 0;
};

// "WxH" in pixels.
CLI::Validator resolution_validator() {
    return CLI::Validator(
        [](std::string& s) -> std::string {
            unsigned w = 0, h = 0;
            char x = 0;
            std::istringstream in(s);
            if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || w == 0 || h == 0) {
                return "expected WIDTHxHEIGHT in pixels";
            }
            return {};
        },
        "WxH");
}

Resolution parse_res(const std::string& s) {
    Resolution r;
    char x = 0;
    std::istringstream in(s);
    in >> r.w >> x >> r.h;
    return r;
}

std::string summary_prefix(const std::string& cmd) { return "status=ok cmd=" + cmd; }

void log_line(const char* line, void*) {
    if (log_level() >= 1) std::cerr << line << "\n";
}

void require_file(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path)) {
        throw Failure{MS_ERR_IO, std::string(what) + " not found: " + path};
    }
}

struct TeacherArgs {
    std::string dir;
    std::string field = "sway";
    double amplitude = 0.03;
    std::string map_res = "64x64";
    std::string export_dir;
};

void add_teacher_flags(CLI::App* sub, TeacherArgs& t) {
    sub->add_option("--teacher-dir", t.dir, "Directory with an exported teacher (manifest.txt); overrides --field");
    sub->add_option("--field", t.field, "Procedural teacher field: none, sway or breathing")
        ->check(CLI::IsMember({"none", "sway", "breathing"}));
    sub->add_option("--amplitude", t.amplitude, "Procedural field amplitude (m)")->check(CLI::NonNegativeNumber);
    sub->add_option("--map-res", t.map_res, "Deformation map resolution (pixels, WxH)")->check(resolution_validator());
    sub->add_option("--export-teacher", t.export_dir, "Write the teacher to this directory");
}

ms_field field_of(const std::string& s) {
    if (s == "none") return MS_FIELD_NONE;
    if (s == "breathing") return MS_FIELD_BREATHING;
    return MS_FIELD_SWAY;
}

void make_teacher(const TeacherArgs& a, const ms_template* tpl, const ms_texture* tex, const ms_motion* motion,
                  std::uint64_t seed, Teacher& out) {
    if (!a.dir.empty()) {
        check(ms_teacher_ingest(a.dir.c_str(), out.out()));
    } else {
        const Resolution r = parse_res(a.map_res);
        check(ms_teacher_procedural(tpl, tex, motion, field_of(a.field), a.amplitude, seed, r.w, r.h, out.out()));
    }
    if (!a.export_dir.empty()) check(ms_teacher_export(out.get(), a.export_dir.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meshsplat: mesh-bound Gaussian avatar runtime and training tools"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI configuration file; subcommand options go under [subcommand]");
    unsigned threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--threads", threads, "Worker threads (0 = host cores, 1 = reproducible reductions)");
    app.add_option("--seed", seed, "Random seed");

    // gen-rig
    auto* gen = app.add_subcommand("gen-rig", "Generate a synthetic capsule rig template");
    ms_rig_config rig;
    ms_rig_config_default(&rig);
    std::string rig_out, motion_out, motion_res = "64x64";
    bool cloth = false;
    ms_motion_config mcfg;
    ms_motion_config_default(&mcfg);
    gen->add_option("--out", rig_out, "Output template (.tpl)")->required();
    gen->add_option("--joints", rig.joints, "Joint count (>= 6)");
    gen->add_option("--radial", rig.radial_segments, "Segments around each capsule");
    gen->add_option("--rings", rig.rings_per_bone, "Rings along each bone");
    gen->add_option("--expressions", rig.expressions, "Expression basis size");
    gen->add_flag("--cloth", cloth, "Add a skirt bound by weight transfer");
    gen->add_option("--motion-out", motion_out, "Also write a synthetic motion sequence (.mot)");
    gen->add_option("--frames", mcfg.frames, "Motion frames");
    gen->add_option("--cameras", mcfg.cameras, "Orbit cameras in the motion");
    gen->add_option("--res", motion_res, "Motion camera resolution (pixels, WxH)")->check(resolution_validator());
    gen->add_option("--pose-amplitude", mcfg.pose_amplitude, "Pose trajectory amplitude (rad)");
    gen->add_option("--camera-distance", mcfg.camera_distance, "Camera orbit radius (m)");
    gen->add_option("--fov", mcfg.fov_y_deg, "Vertical field of view (degrees)");
    gen->add_option("--time-offset", mcfg.time_offset, "Trajectory phase shift (frames; held-out poses)");

    // build-template
    auto* build = app.add_subcommand("build-template", "Attach an OBJ garment to a body template");
    std::string body_path, garment_path, build_out;
    std::vector<float> garment_color{0.2f, 0.3f, 0.8f};
    build->add_option("--body", body_path, "Body template (.tpl)")->required();
    build->add_option("--garment", garment_path, "Garment mesh in the body's rest pose (.obj, m)")->required();
    build->add_option("--color", garment_color, "Garment segmentation color (r g b in [0, 1])")->expected(3);
    build->add_option("--out", build_out, "Output template (.tpl)")->required();

    // bind
    auto* bind = app.add_subcommand("bind", "Bind Gaussians to the template's triangles");
    std::string bind_tpl, bind_out;
    std::uint32_t k_min = 1, k_max = 3, sh_degree = 2;
    bind->add_option("--template", bind_tpl, "Template (.tpl)")->required();
    bind->add_option("--out", bind_out, "Output texture (.gtx)")->required();
    bind->add_option("--k-min", k_min, "Minimum Gaussians per triangle");
    bind->add_option("--k-max", k_max, "Maximum Gaussians per triangle");
    bind->add_option("--sh-degree", sh_degree, "Spherical harmonics degree (0-3)")->check(CLI::Range(0, 3));

    // bake / finetune shared options
    ms_train_config tc;
    ms_train_config_default(&tc);
    std::string tr_tpl, tr_tex, tr_motion, tr_bundle, tr_out, tr_tex_out, map_res_dummy;
    TeacherArgs teacher_args;
    ms_student_config scfg;
    ms_student_config_default(&scfg);
    auto add_train_flags = [&](CLI::App* sub) {
        sub->add_option("--template", tr_tpl, "Template (.tpl)")->required();
        sub->add_option("--texture", tr_tex, "Gaussian texture (.gtx)")->required();
        sub->add_option("--motion", tr_motion, "Motion sequence (.mot)")->required();
        sub->add_option("--out", tr_out, "Output bundle (.stu)")->required();
        sub->add_option("--iterations", tc.iterations, "Optimizer steps");
        sub->add_option("--batch", tc.batch_size, "Frames per step");
        sub->add_option("--lambda-ssim", tc.lambda_ssim, "D-SSIM weight");
        sub->add_option("--lambda-lpips", tc.lambda_lpips, "Perceptual weight (accepted, always 0)");
        sub->add_option("--lambda-normal", tc.lambda_normal, "Normal loss weight");
        sub->add_option("--lr-mlp", tc.lr_mlp, "Learning rate of network weights");
        sub->add_option("--lr-blend", tc.lr_blend_shapes, "Learning rate of blend shapes");
        sub->add_option("--lr-final-ratio", tc.lr_final_ratio, "Final/initial learning rate (exponential decay)")
            ->check(CLI::Range(1e-9, 1.0));
        sub->add_option("--log-every", tc.log_every, "Iterations between log records");
        add_teacher_flags(sub, teacher_args);
    };

    auto* bake = app.add_subcommand("bake", "Distill a teacher into the student deformation field");
    add_train_flags(bake);
    bake->add_option("--bundle", tr_bundle, "Initial bundle (.stu); a new one is created when absent");
    bake->add_option("--texture-out", tr_tex_out, "Write the refined texture (.gtx)");
    bake->add_option("--lambda-nonrigid", tc.lambda_nonrigid, "Deformation map loss weight");
    bake->add_option("--lambda-semantic", tc.lambda_semantic, "Semantic loss weight");
    bake->add_option("--tau", tc.tau, "Semantic label frequency (1/m)")->check(CLI::PositiveNumber);
    bake->add_option("--lr-attributes", tc.lr_attributes, "Learning rate of Gaussian attributes");
    bake->add_option("--lr-embeddings", tc.lr_embeddings, "Learning rate of frame embeddings");
    bake->add_option("--hidden", scfg.hidden, "Hidden width of a new student");
    bake->add_option("--layers", scfg.layers, "Linear layers per deformation network of a new student");
    bake->add_option("--embedding-dim", scfg.embedding_dim, "Frame embedding size of a new student");
    bake->add_flag("--freeze-texture", tc.freeze_texture, "Keep Gaussian attributes fixed");

    auto* fine = app.add_subcommand("finetune", "Fit mapping networks and blend shapes with the student frozen");
    add_train_flags(fine);
    fine->add_option("--bundle", tr_bundle, "Baked bundle (.stu)")->required();

    // render / animate
    std::string r_tpl, r_tex, r_bundle, r_motion, r_out, r_res, r_format = "ppm";
    std::size_t r_frame = 0;
    bool r_normal = false, r_relight = false, r_u16 = false, r_zero_bundle = false;
    auto add_render_flags = [&](CLI::App* sub) {
        sub->add_option("--template", r_tpl, "Template (.tpl)")->required();
        sub->add_option("--texture", r_tex, "Gaussian texture (.gtx)")->required();
        sub->add_option("--bundle", r_bundle, "Student bundle (.stu); omitted = no deformation field");
        sub->add_option("--res", r_res, "Override the camera resolution (pixels, WxH)")->check(resolution_validator());
        sub->add_flag("--normal", r_normal, "Write normals mapped to [0, 1]");
        sub->add_flag("--relight", r_relight, "Shade the rendered color by the rendered normals");
        sub->add_flag("--sort-u16", r_u16, "16-bit depth keys");
        sub->add_flag("--zero-bundle", r_zero_bundle, "Zero every bundle weight before rendering");
    };
    auto* rend = app.add_subcommand("render", "Render one frame");
    add_render_flags(rend);
    rend->add_option("--motion", r_motion, "Motion sequence (.mot); omitted = rest pose, front camera");
    rend->add_option("--frame", r_frame, "Frame index in the motion");
    rend->add_option("--out", r_out, "Output image (.ppm or .png)")->required();
    auto* anim = app.add_subcommand("animate", "Render every frame of a motion");
    add_render_flags(anim);
    anim->add_option("--motion", r_motion, "Motion sequence (.mot)")->required();
    anim->add_option("--out-dir", r_out, "Output directory")->required();
    anim->add_option("--format", r_format, "Image format")->check(CLI::IsMember({"ppm", "png"}));

    // bench
    auto* bench = app.add_subcommand("bench", "Measure per-frame throughput on a synthetic rig");
    ms_bench_config bc{20000, 512, 512, 50, 0, 0};
    std::string bench_res = "512x512";
    bool bench_u16 = false;
    bench->add_option("--gaussians", bc.gaussians, "Approximate Gaussian count");
    bench->add_option("--res", bench_res, "Resolution (pixels, WxH)")->check(resolution_validator());
    bench->add_option("--frames", bc.frames, "Frames to time");
    bench->add_flag("--sort-u16", bench_u16, "16-bit depth keys");

    // quantize
    auto* quant = app.add_subcommand("quantize", "Store network weights in half precision");
    std::string q_in, q_out;
    std::size_t q_samples = 1000;
    quant->add_option("--bundle", q_in, "Input bundle (.stu)")->required();
    quant->add_option("--out", q_out, "Output bundle (.stu)")->required();
    quant->add_option("--samples", q_samples, "Random inputs for the deviation check");

    // preflight
    auto* pre = app.add_subcommand("preflight", "Run every finite-difference gradient check");
    bool quick = false;
    pre->add_flag("--quick", quick, "Check fewer coordinates");

    // The config file is read by the top-level parser, which maps [bake] etc.
    // onto subcommands; accept it after the subcommand name too.
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    for (std::size_t i = args.size(); i-- > 0;) {
        const std::string& a = args[i];
        if (a == "--config" && i > 0) {
            std::vector<std::string> moved{args[i - 1], a};
            args.erase(args.begin() + std::ptrdiff_t(i - 1), args.begin() + std::ptrdiff_t(i + 1));
            args.insert(args.end(), moved.begin(), moved.end());
            break;
        }
        if (a.rfind("--config=", 0) == 0) {
            std::string moved = a;
            args.erase(args.begin() + std::ptrdiff_t(i));
            args.push_back(moved);
            break;
        }
    }

    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    ms_set_threads(threads);
    std::ostringstream summary;
    try {
        if (*gen) {
            rig.cloth = cloth ? 1 : 0;
            rig.seed = seed;
            Template tpl;
            check(ms_template_generate(&rig, tpl.out()));
            check(ms_template_save(tpl.get(), rig_out.c_str()));
            ms_template_info ti;
            check(ms_template_get_info(tpl.get(), &ti));
            summary << summary_prefix("gen-rig") << " vertices=" << ti.vertices << " faces=" << ti.faces
                    << " joints=" << ti.joints << " cloth_vertices=" << ti.cloth_vertices
                    << " theta_dim=" << ti.theta_dim << " out=" << rig_out;
            if (!motion_out.empty()) {
                const Resolution r = parse_res(motion_res);
                mcfg.width = r.w;
                mcfg.height = r.h;
                mcfg.seed = seed;
                Motion m;
                check(ms_motion_generate(tpl.get(), &mcfg, m.out()));
                check(ms_motion_save(m.get(), motion_out.c_str()));
                summary << " frames=" << ms_motion_frames(m.get()) << " motion=" << motion_out;
            }
        } else if (*build) {
            require_file(body_path, "body template");
            require_file(garment_path, "garment");
            Template body, out;
            check(ms_template_load(body_path.c_str(), body.out()));
            check(ms_template_add_garment(body.get(), garment_path.c_str(), garment_color[0], garment_color[1],
                                          garment_color[2], out.out()));
            check(ms_template_save(out.get(), build_out.c_str()));
            ms_template_info ti;
            check(ms_template_get_info(out.get(), &ti));
            summary << summary_prefix("build-template") << " vertices=" << ti.vertices << " faces=" << ti.faces
                    << " cloth_vertices=" << ti.cloth_vertices << " out=" << build_out;
        } else if (*bind) {
            require_file(bind_tpl, "template");
            Template tpl;
            Texture tex;
            check(ms_template_load(bind_tpl.c_str(), tpl.out()));
            check(ms_texture_bind(tpl.get(), k_min, k_max, sh_degree, seed, tex.out()));
            check(ms_texture_save(tex.get(), bind_out.c_str()));
            summary << summary_prefix("bind") << " gaussians=" << ms_texture_size(tex.get())
                    << " sh_degree=" << sh_degree << " out=" << bind_out;
        } else if (*bake || *fine) {
            const bool is_bake = bool(*bake);
            for (const auto& [p, what] : {std::pair{tr_tpl, "template"}, {tr_tex, "texture"}, {tr_motion, "motion"}})
                require_file(p, what);
            if (!tr_bundle.empty()) require_file(tr_bundle, "bundle");
            if (!teacher_args.dir.empty()) require_file(teacher_args.dir, "teacher directory");
            Template tpl;
            Texture tex;
            Motion motion;
            Bundle bundle, out;
            Teacher teacher;
            check(ms_template_load(tr_tpl.c_str(), tpl.out()));
            check(ms_texture_load(tr_tex.c_str(), tex.out()));
            check(ms_motion_load(tr_motion.c_str(), motion.out()));
            make_teacher(teacher_args, tpl.get(), tex.get(), motion.get(), seed, teacher);
            const Resolution mr = parse_res(teacher_args.map_res);
            tc.map_width = mr.w;
            tc.map_height = mr.h;
            tc.seed = seed;
            if (!tr_bundle.empty()) {
                check(ms_bundle_load(tr_bundle.c_str(), bundle.out()));
            } else {
                check(ms_bundle_create(tpl.get(), tex.get(), std::uint32_t(ms_motion_frames(motion.get())), &scfg,
                                       seed, bundle.out()));
            }
            ms_train_summary s;
            if (is_bake) {
                Texture tex_out;
                check(ms_bake(tpl.get(), tex.get(), bundle.get(), teacher.get(), motion.get(), &tc, log_line, nullptr,
                              out.out(), tex_out.out(), &s));
                if (!tr_tex_out.empty()) check(ms_texture_save(tex_out.get(), tr_tex_out.c_str()));
            } else {
                check(ms_finetune(tpl.get(), tex.get(), bundle.get(), teacher.get(), motion.get(), &tc, log_line,
                                  nullptr, out.out(), &s));
            }
            check(ms_bundle_save(out.get(), tr_out.c_str()));
            summary << summary_prefix(is_bake ? "bake" : "finetune") << " iterations=" << s.iterations
                    << " first_loss=" << s.first_loss << " final_loss=" << s.final_loss;
            if (is_bake) {
                double non = 0.0;
                check(ms_evaluate_nonrigid(tpl.get(), out.get(), teacher.get(), motion.get(), &non));
                summary << " nonrigid=" << non;
            }
            summary << " diverged=" << s.diverged << " out=" << tr_out << " seconds=" << s.seconds;
            if (s.diverged) {
                std::cout << summary.str() << "\n";
                std::cerr << "meshsplat: training diverged; wrote the checkpoint from iteration "
                          << s.last_good_iteration << "\n";
                return kRuntime;
            }
        } else if (*rend || *anim) {
            require_file(r_tpl, "template");
            require_file(r_tex, "texture");
            Template tpl;
            Texture tex;
            Bundle bundle;
            Motion motion;
            check(ms_template_load(r_tpl.c_str(), tpl.out()));
            check(ms_texture_load(r_tex.c_str(), tex.out()));
            if (!r_bundle.empty()) {
                require_file(r_bundle, "bundle");
                check(ms_bundle_load(r_bundle.c_str(), bundle.out()));
                if (r_zero_bundle) check(ms_bundle_zero(bundle.get()));
            }
            if (!r_motion.empty()) {
                require_file(r_motion, "motion");
                check(ms_motion_load(r_motion.c_str(), motion.out()));
            }
            ms_render_options ro;
            ms_render_options_default(&ro);
            if (!r_res.empty()) {
                const Resolution r = parse_res(r_res);
                ro.width = r.w;
                ro.height = r.h;
            }
            ro.normal = r_normal;
            ro.relight = r_relight;
            ro.sort_u16 = r_u16;
            if (*rend) {
                check(ms_render_frame(tpl.get(), tex.get(), bundle.get(), motion.get(), r_frame, &ro, r_out.c_str()));
                summary << summary_prefix("render") << " frame=" << r_frame << " out=" << r_out;
            } else {
                std::filesystem::create_directories(r_out);
                const std::size_t n = ms_motion_frames(motion.get());
                for (std::size_t f = 0; f < n; ++f) {
                    char name[64];
                    std::snprintf(name, sizeof name, "frame_%05zu.%s", f, r_format.c_str());
                    const std::string path = (std::filesystem::path(r_out) / name).string();
                    check(ms_render_frame(tpl.get(), tex.get(), bundle.get(), motion.get(), f, &ro, path.c_str()));
                    if (log_level() >= 2) info(path);
                }
                summary << summary_prefix("animate") << " frames=" << n << " out=" << r_out;
            }
        } else if (*bench) {
            const Resolution r = parse_res(bench_res);
            bc.width = r.w;
            bc.height = r.h;
            bc.seed = seed;
            bc.sort_u16 = bench_u16;
            ms_bench_result br;
            check(ms_bench(&bc, &br));
            summary << summary_prefix("bench") << " gaussians=" << br.gaussians << " vertices=" << br.vertices
                    << " res=" << r.w << "x" << r.h << " frames=" << br.frames << " fps=" << br.fps
                    << " student_ms=" << br.student_ms << " skinning_ms=" << br.skinning_ms
                    << " gaussians_ms=" << br.gaussians_ms << " project_ms=" << br.project_ms
                    << " sort_ms=" << br.sort_ms << " bin_ms=" << br.bin_ms << " raster_ms=" << br.raster_ms
                    << " total_ms=" << br.total_ms;
        } else if (*quant) {
            require_file(q_in, "bundle");
            Bundle in, out;
            check(ms_bundle_load(q_in.c_str(), in.out()));
            ms_quantize_report rep;
            check(ms_bundle_quantize(in.get(), q_samples, seed, out.out(), &rep));
            summary << summary_prefix("quantize") << " max_rel_deviation=" << rep.max_rel_deviation
                    << " bound=" << rep.bound << " samples=" << rep.samples << " within_bound=" << rep.within_bound;
            if (!rep.within_bound) {
                std::cout << summary.str() << "\n";
                std::cerr << "meshsplat: half-precision deviation exceeds the bound; nothing written\n";
                return kValidation;
            }
            check(ms_bundle_save(out.get(), q_out.c_str()));
            summary << " out=" << q_out;
        } else if (*pre) {
            std::size_t failed = 0, suites = 0;
            auto cb = [](const ms_check_report* r, void* user) {
                ++*static_cast<std::size_t*>(user);
                std::cerr << "check=\"" << r->name << "\" checked=" << r->checked << " failing=" << r->failing
                          << " max_rel_error=" << r->max_rel_error << " tolerance=" << r->tolerance
                          << (r->failing == 0 && r->checked > 0 ? " PASS" : " FAIL") << "\n";
            };
            check(ms_preflight(seed, quick ? 1 : 0, cb, &suites, &failed));
            summary << summary_prefix("preflight") << " suites=" << suites << " failed=" << failed;
            if (failed) {
                std::cout << "status=fail" << summary.str().substr(std::strlen("status=ok")) << "\n";
                return kValidation;
            }
        }
    } catch (const Failure& f) {
        std::cerr << "meshsplat: " << f.message << "\n";
        return exit_for(f.status);
    } catch (const std::exception& e) {
        std::cerr << "meshsplat: " << e.what() << "\n";
        return kRuntime;
    }
    std::cout << summary.str() << "\n";
    return kOk;
}
