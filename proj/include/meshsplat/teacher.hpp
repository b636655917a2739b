// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Teacher sources for baking: a procedural pose-driven deformation field
// with pseudo ground truth rendered by the runtime, and a directory reader
// for externally produced maps and images.
#pragma once

#include "meshsplat/deform.hpp"

#include <string>
#include <vector>

namespace meshsplat {

enum class TeacherField { none, sway, breathing };

const char* field_name(TeacherField f);
TeacherField parse_field(const std::string& name);

struct TeacherFrame {
    DeformationMap maps;
    Image color;   // 8-bit quantized
    Image normal;  // n * 0.5 + 0.5, 8-bit quantized
    Image alpha;   // gray, 8-bit quantized
};

struct TeacherSource {
    enum class Kind { procedural, external };
    Kind kind = Kind::procedural;
    std::string provenance;  // parameters or directory
    std::vector<TeacherFrame> frames;
};

/// Checks every frame against the first: map and image resolutions, masks.
void validate(const TeacherSource& source);

struct ProceduralTeacherConfig {
    TeacherField field = TeacherField::sway;
    double amplitude = 0.03;  // m
    std::uint64_t seed = 0;
    std::uint32_t map_width = 64, map_height = 64;
};

/// Unit pose direction used for phase(theta) = theta . d.
std::vector<double> phase_direction(std::size_t theta_dim, std::uint64_t seed);

/// Canonical per-vertex deformation of the field for one frame.
///  sway:      a sin(phase) falloff(z) e_x on cloth vertices, falloff rising
///             linearly from 0 at the top of the cloth to 1 at the hem
///  breathing: a sin(phase) radial (x, y) expansion in a torso height band
std::vector<Vec3> teacher_field(const RiggedTemplate& tpl, const FrameInput& frame,
                                const ProceduralTeacherConfig& config);

TeacherSource procedural_teacher(const RiggedTemplate& tpl, const GaussianTexture& tex, const MotionSequence& seq,
                                 const ProceduralTeacherConfig& config);

/// Writes <dir>/manifest.txt plus one .dmap and three .ppm files per frame.
void export_teacher(const TeacherSource& source, const std::string& dir);

/// Reads a manifest (lines: frame dmap color normal alpha, '#' comments).
/// Errors name the offending frame.
TeacherSource ingest_teacher(const std::string& dir, const std::string& manifest = "manifest.txt");

}  // namespace meshsplat
