// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace meshsplat {

const char* field_name(TeacherField f) {
    switch (f) {
        case TeacherField::none: return "none";
        case TeacherField::sway: return "sway";
        case TeacherField::breathing: return "breathing";
    }
    return "?";
}

TeacherField parse_field(const std::string& name) {
    if (name == "none") return TeacherField::none;
    if (name == "sway") return TeacherField::sway;
    if (name == "breathing") return TeacherField::breathing;
    throw Error(ErrorCode::invalid_argument, "unknown teacher field '" + name + "' (none, sway, breathing)");
}

std::vector<double> phase_direction(std::size_t theta_dim, std::uint64_t seed) {
    Rng rng(seed ^ 0x7068617365ull);
    std::vector<double> d(theta_dim);
    double norm = 0.0;
    for (auto& v : d) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (auto& v : d) v /= norm;
    return d;
}

std::vector<Vec3> teacher_field(const RiggedTemplate& tpl, const FrameInput& frame,
                                const ProceduralTeacherConfig& config) {
    if (!(config.amplitude >= 0.0)) throw Error(ErrorCode::invalid_argument, "teacher amplitude must be >= 0");
    const std::size_t nv = tpl.vertices.size();
    std::vector<Vec3> out(nv, Vec3::Zero());
    if (config.field == TeacherField::none || nv == 0) return out;
    const std::vector<double> d = phase_direction(tpl.theta_dim(), config.seed);
    if (frame.theta.size() != d.size()) throw DimensionError("theta size differs from the template");
    double phase = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) phase += double(frame.theta[k]) * d[k];
    const double s = config.amplitude * std::sin(phase);

    if (config.field == TeacherField::sway) {
        double top = -1e30, bottom = 1e30;
        for (std::size_t i = 0; i < nv; ++i) {
            if (!tpl.cloth_mask[i]) continue;
            top = std::max(top, double(tpl.vertices[i].z()));
            bottom = std::min(bottom, double(tpl.vertices[i].z()));
        }
        if (top <= bottom) return out;
        for (std::size_t i = 0; i < nv; ++i) {
            if (!tpl.cloth_mask[i]) continue;
            const double fall = std::clamp((top - double(tpl.vertices[i].z())) / (top - bottom), 0.0, 1.0);
            out[i] = Vec3(s * fall, 0.0, 0.0);
        }
        return out;
    }

    // Breathing: radial expansion of the middle of the body.
    double zmin = 1e30, zmax = -1e30;
    Vec3 center = Vec3::Zero();
    for (const auto& v : tpl.vertices) {
        zmin = std::min(zmin, double(v.z()));
        zmax = std::max(zmax, double(v.z()));
        center += v.cast<double>();
    }
    center /= double(nv);
    const double lo = zmin + 0.45 * (zmax - zmin), hi = zmin + 0.75 * (zmax - zmin);
    for (std::size_t i = 0; i < nv; ++i) {
        const Vec3 v = tpl.vertices[i].cast<double>();
        if (v.z() < lo || v.z() > hi) continue;
        const double t = (v.z() - lo) / (hi - lo);
        const double window = std::sin(M_PI * t);
        Vec3 radial(v.x() - center.x(), v.y() - center.y(), 0.0);
        const double r = radial.norm();
        if (r <= 0.0) continue;
        out[i] = s * window * radial / r;
    }
    return out;
}

TeacherSource procedural_teacher(const RiggedTemplate& tpl, const GaussianTexture& tex, const MotionSequence& seq,
                                 const ProceduralTeacherConfig& config) {
    validate(seq);
    TeacherSource src;
    src.kind = TeacherSource::Kind::procedural;
    std::ostringstream prov;
    prov << "procedural field=" << field_name(config.field) << " amplitude=" << config.amplitude
         << " seed=" << config.seed;
    src.provenance = prov.str();
    std::vector<Vec3> canonical(tpl.vertices.size());
    for (std::size_t i = 0; i < canonical.size(); ++i) canonical[i] = tpl.vertices[i].cast<double>();
    const MapRasters rasters = make_map_rasters(canonical, tpl.faces, config.map_width, config.map_height);

    src.frames.resize(seq.frames.size());
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const FrameInput& frame = seq.frames[t];
        const std::vector<Vec3> delta = teacher_field(tpl, frame, config);
        TeacherFrame& out = src.frames[t];
        out.maps = rasterize_mesh_maps(rasters, delta);
        AnimateOptions opt;
        opt.render.normal = true;
        opt.extra_delta = delta;
        const FrameState st = animate_frame(tpl, tex, nullptr, frame, seq.cameras[seq.camera_index[t]], opt);
        out.color = quantize_8bit(color_image(st.target));
        out.normal = quantize_8bit(normal_image(st.target));
        out.alpha = quantize_8bit(alpha_image(st.target));
    }
    return src;
}

}  // namespace meshsplat
