// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/assets.hpp"
#include "meshsplat/skinning.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace meshsplat {

namespace {

enum Chain { spine = 0, leg_l, leg_r, arm_l, arm_r, head, chain_count };

struct Bone {
    std::int32_t owner;        // joint carrying the segment
    std::int32_t start_blend;  // joint blended in near the start (-1: none)
    std::int32_t end_blend;    // joint blended in near the end (-1: none)
    Vec3 a, b;
    double radius;
    bool head_region;
};

double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * (3.0 - 2.0 * x);
}

// Frame-normal convention: n = (v1 - v2) x (v3 - v1) must point away from `inside`.
void orient_outward(std::array<std::uint32_t, 3>& f, const std::vector<Vec3f>& verts, const Vec3& inside) {
    const Vec3 v1 = verts[f[0]].cast<double>(), v2 = verts[f[1]].cast<double>(), v3 = verts[f[2]].cast<double>();
    const Vec3 n = (v1 - v2).cross(v3 - v1);
    const Vec3 c = (v1 + v2 + v3) / 3.0;
    if (n.dot(c - inside) < 0.0) std::swap(f[1], f[2]);
}

Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b, double* t_out) {
    const Vec3 d = b - a;
    const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    if (t_out) *t_out = t;
    return a + t * d;
}

void append_capsule(RiggedTemplate& tpl, const Bone& bone, std::uint32_t radial, std::uint32_t rings,
                    std::vector<std::uint8_t>& head_flags) {
    const Vec3 axis = (bone.b - bone.a).normalized();
    Vec3 u = axis.unitOrthogonal();
    const Vec3 w = axis.cross(u);
    const std::uint32_t cap_rings = std::max<std::uint32_t>(2, radial / 4);
    const double len = (bone.b - bone.a).norm();

    // Rings from the a-pole to the b-pole: (axial offset, ring radius).
    std::vector<std::pair<double, double>> profile;
    for (std::uint32_t k = 1; k <= cap_rings; ++k) {
        const double phi = 0.5 * M_PI * double(k) / double(cap_rings);
        profile.emplace_back(-bone.radius * std::cos(phi), bone.radius * std::sin(phi));
    }
    for (std::uint32_t k = 1; k < rings; ++k) {
        profile.emplace_back(len * double(k) / double(rings), bone.radius);
    }
    for (std::uint32_t k = cap_rings; k >= 1; --k) {
        const double phi = 0.5 * M_PI * double(k) / double(cap_rings);
        profile.emplace_back(len + bone.radius * std::cos(phi), bone.radius * std::sin(phi));
    }

    const auto base = std::uint32_t(tpl.vertices.size());
    std::vector<Vec3> positions;
    positions.push_back(bone.a - bone.radius * axis);
    for (const auto& [along, r] : profile) {
        for (std::uint32_t s = 0; s < radial; ++s) {
            const double ang = 2.0 * M_PI * double(s) / double(radial);
            positions.push_back(bone.a + along * axis + r * (std::cos(ang) * u + std::sin(ang) * w));
        }
    }
    positions.push_back(bone.b + bone.radius * axis);

    for (const Vec3& p : positions) {
        tpl.vertices.push_back(p.cast<float>());
        double t = 0.0;
        closest_on_segment(p, bone.a, bone.b, &t);
        std::vector<std::pair<std::int32_t, double>> entries{{bone.owner, 1.0}};
        if (bone.start_blend >= 0 && t < 0.25) {
            const double keep = 0.5 + 0.5 * smoothstep(t / 0.25);
            entries = {{bone.owner, keep}, {bone.start_blend, 1.0 - keep}};
        } else if (bone.end_blend >= 0 && t > 0.75) {
            const double give = 0.5 * smoothstep((t - 0.75) / 0.25);
            entries = {{bone.owner, 1.0 - give}, {bone.end_blend, give}};
        }
        tpl.skin.push_back(make_skin_row(entries));
        tpl.labels.push_back(ComponentLabel::body);
        tpl.cloth_mask.push_back(0);
        head_flags.push_back(bone.head_region ? 1 : 0);
    }

    const std::uint32_t ring_count = std::uint32_t(profile.size());
    const std::uint32_t pole_a = base;
    const std::uint32_t pole_b = base + 1 + ring_count * radial;
    auto ring_vertex = [&](std::uint32_t ring, std::uint32_t s) { return base + 1 + ring * radial + (s % radial); };
    auto emit = [&](std::uint32_t i, std::uint32_t j, std::uint32_t k) {
        std::array<std::uint32_t, 3> f{i, j, k};
        const Vec3 c = (tpl.vertices[i] + tpl.vertices[j] + tpl.vertices[k]).cast<double>() / 3.0;
        orient_outward(f, tpl.vertices, closest_on_segment(c, bone.a, bone.b, nullptr));
        tpl.faces.push_back(f);
    };
    for (std::uint32_t s = 0; s < radial; ++s) {
        emit(pole_a, ring_vertex(0, s), ring_vertex(0, s + 1));
        emit(pole_b, ring_vertex(ring_count - 1, s + 1), ring_vertex(ring_count - 1, s));
    }
    for (std::uint32_t r = 0; r + 1 < ring_count; ++r) {
        for (std::uint32_t s = 0; s < radial; ++s) {
            emit(ring_vertex(r, s), ring_vertex(r + 1, s), ring_vertex(r + 1, s + 1));
            emit(ring_vertex(r, s), ring_vertex(r + 1, s + 1), ring_vertex(r, s + 1));
        }
    }
}

}  // namespace

RiggedTemplate make_capsule_rig(const CapsuleRigConfig& config) {
    if (config.joint_count < 2) {
        throw Error(ErrorCode::invalid_argument, "capsule rig needs at least 2 joints");
    }
    if (config.radial_segments < 3 || config.rings_per_bone < 1) {
        throw Error(ErrorCode::invalid_argument, "capsule tessellation too coarse");
    }
    Rng rng(config.seed);
    auto jitter = [&](double scale) { return 1.0 + scale * rng.uniform(-1.0, 1.0); };

    // Distribute non-root joints over the six chains round-robin.
    std::array<std::uint32_t, chain_count> per_chain{};
    for (std::uint32_t k = 0; k + 1 < config.joint_count; ++k) per_chain[k % chain_count]++;

    const double pelvis_z = 1.0;
    const double r_torso = 0.12 * jitter(0.08);
    const double r_leg = 0.065 * jitter(0.08);
    const double r_arm = 0.045 * jitter(0.08);
    const double r_head = 0.085 * jitter(0.08);

    RiggedTemplate tpl;
    std::vector<Vec3> pos;
    std::vector<int> chain_of;
    auto add_joint = [&](std::int32_t parent, const Vec3& p, int chain) {
        Joint j;
        j.parent = parent;
        j.rest_translation = p.cast<float>();
        tpl.joints.push_back(j);
        pos.push_back(p);
        chain_of.push_back(chain);
        return std::int32_t(tpl.joints.size() - 1);
    };
    add_joint(-1, Vec3(0, 0, pelvis_z), -1);

    std::int32_t spine_top = 0;
    {
        const double length = 0.5 * jitter(0.05);
        std::int32_t parent = 0;
        for (std::uint32_t k = 0; k < per_chain[spine]; ++k) {
            const double z = pelvis_z + length * double(k + 1) / double(per_chain[spine]);
            parent = add_joint(parent, Vec3(0, 0, z), spine);
        }
        spine_top = parent;
    }
    for (int side : {0, 1}) {
        const double sx = side == 0 ? 1.0 : -1.0;
        const int chain = side == 0 ? leg_l : leg_r;
        std::int32_t parent = 0;
        const double length = 0.85 * jitter(0.05);
        for (std::uint32_t k = 0; k < per_chain[chain]; ++k) {
            const Vec3 p = k == 0 ? Vec3(sx * 0.1, 0, pelvis_z - 0.05)
                                  : Vec3(sx * 0.1, 0, pelvis_z - 0.05 - length * double(k) / double(per_chain[chain]));
            parent = add_joint(parent, p, chain);
        }
    }
    const double top_z = pos[std::size_t(spine_top)][2];
    for (int side : {0, 1}) {
        const double sx = side == 0 ? 1.0 : -1.0;
        const int chain = side == 0 ? arm_l : arm_r;
        std::int32_t parent = spine_top;
        const double length = 0.6 * jitter(0.05);
        for (std::uint32_t k = 0; k < per_chain[chain]; ++k) {
            const double x = 0.08 + length * double(k) / double(per_chain[chain]);
            parent = add_joint(parent, Vec3(sx * x, 0, top_z - 0.04), chain);
        }
    }
    {
        std::int32_t parent = spine_top;
        for (std::uint32_t k = 0; k < per_chain[head]; ++k) {
            const double z = top_z + 0.08 + 0.12 * double(k) / double(std::max<std::uint32_t>(1, per_chain[head]));
            parent = add_joint(parent, Vec3(0, 0, z), head);
        }
    }

    const std::size_t nj = tpl.joints.size();
    std::vector<int> child_count(nj, 0);
    for (std::size_t j = 1; j < nj; ++j) child_count[std::size_t(tpl.joints[j].parent)]++;

    auto radius_of = [&](int chain) {
        switch (chain) {
            case leg_l: case leg_r: return r_leg;
            case arm_l: case arm_r: return r_arm;
            case head: return r_head;
            default: return r_torso;
        }
    };
    auto direction_of = [&](int chain, double sx) -> Vec3 {
        switch (chain) {
            case leg_l: case leg_r: return Vec3(0, 0, -1);
            case arm_l: case arm_r: return Vec3(sx, 0, 0);
            default: return Vec3(0, 0, 1);
        }
    };

    std::vector<Bone> bones;
    for (std::size_t j = 1; j < nj; ++j) {
        const auto p = tpl.joints[j].parent;
        const int chain = chain_of[j];
        Bone b;
        b.owner = p;
        b.start_blend = tpl.joints[std::size_t(p)].parent;
        b.end_blend = std::int32_t(j);
        b.a = pos[std::size_t(p)];
        b.b = pos[j];
        b.radius = radius_of(chain);
        if ((chain == leg_l || chain == leg_r) && p == 0) b.radius = r_leg * 1.2;  // hip
        if (chain == head && p == spine_top) b.radius = r_arm * 1.2;                 // neck
        b.head_region = chain == head;
        bones.push_back(b);
    }
    for (std::size_t j = 1; j < nj; ++j) {
        if (child_count[j] != 0) continue;
        const int chain = chain_of[j];
        Bone b;
        b.owner = std::int32_t(j);
        b.start_blend = tpl.joints[j].parent;
        b.end_blend = -1;
        b.a = pos[j];
        const double sx = pos[j][0] >= 0 ? 1.0 : -1.0;
        const double tail = chain == head ? 0.12 : (chain == spine ? 0.15 : 0.1);
        b.b = pos[j] + tail * direction_of(chain, sx);
        b.radius = radius_of(chain);
        b.head_region = chain == head;
        bones.push_back(b);
    }
    if (nj == 1 || bones.empty()) {
        throw Error(ErrorCode::invalid_argument, "capsule rig produced no bones");
    }

    std::vector<std::uint8_t> head_flags;
    for (const Bone& b : bones) append_capsule(tpl, b, config.radial_segments, config.rings_per_bone, head_flags);

    const std::size_t nv = tpl.vertices.size();
    tpl.segmentation_colors.assign(nv, Vec3f(0.85f, 0.65f, 0.55f));
    for (std::size_t i = 0; i < nv; ++i) {
        if (head_flags[i]) tpl.segmentation_colors[i] = Vec3f(0.9f, 0.8f, 0.3f);
    }

    // Smooth random expression fields over head vertices (5 mm scale).
    tpl.expression_count = config.expression_count;
    tpl.expression_basis.assign(std::size_t(config.expression_count) * nv * 3, 0.0f);
    for (std::uint32_t e = 0; e < config.expression_count; ++e) {
        Vec3 freq_dir(rng.normal(), rng.normal(), rng.normal());
        Vec3 disp_dir(rng.normal(), rng.normal(), rng.normal());
        freq_dir.normalize();
        disp_dir.normalize();
        const double freq = rng.uniform(10.0, 30.0);
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        for (std::size_t i = 0; i < nv; ++i) {
            if (!head_flags[i]) continue;
            const Vec3 d = 0.005 * std::sin(freq * freq_dir.dot(tpl.vertices[i].cast<double>()) + phase) * disp_dir;
            for (int a = 0; a < 3; ++a) tpl.expression_basis[(e * nv + i) * 3 + a] = float(d[a]);
        }
    }
    validate(tpl);

    if (!config.cloth) return tpl;

    ClothingComponent skirt;
    skirt.mesh = make_skirt_mesh(tpl, std::max<std::uint32_t>(config.radial_segments + 4, 8),
                                 std::max<std::uint32_t>(config.rings_per_bone, 3));
    skirt.label = ComponentLabel::cloth;
    skirt.color = Vec3f(0.2f, 0.3f, 0.8f);
    return build_clothed_template(tpl, {skirt}, FrameInput::rest(tpl));
}

TriangleMesh make_skirt_mesh(const RiggedTemplate& body, std::uint32_t radial_segments, std::uint32_t rings) {
    if (body.joints.empty()) throw ValidationError("skirt needs a rigged body");
    const Vec3 pelvis = body.joints[0].rest_translation.cast<double>();
    // Torso radius from the body's vertices near the pelvis level, above it.
    double torso_r = 0.0;
    for (std::size_t i = 0; i < body.vertices.size(); ++i) {
        const Vec3 v = body.vertices[i].cast<double>();
        if (v[2] > pelvis[2] + 0.04 && v[2] < pelvis[2] + 0.12 && std::abs(v[0]) < 0.3) {
            torso_r = std::max(torso_r, std::hypot(v[0] - pelvis[0], v[1] - pelvis[1]));
        }
    }
    if (torso_r <= 0.0) torso_r = 0.12;
    const double radius = torso_r + 0.025;
    const double z_top = pelvis[2] + 0.12, z_bottom = pelvis[2] - 0.06;

    TriangleMesh mesh;
    for (std::uint32_t r = 0; r <= rings; ++r) {
        const double z = z_top + (z_bottom - z_top) * double(r) / double(rings);
        for (std::uint32_t s = 0; s < radial_segments; ++s) {
            const double ang = 2.0 * M_PI * double(s) / double(radial_segments);
            mesh.vertices.push_back(Vec3(pelvis[0] + radius * std::cos(ang), pelvis[1] + radius * std::sin(ang), z).cast<float>());
        }
    }
    auto at = [&](std::uint32_t r, std::uint32_t s) { return r * radial_segments + (s % radial_segments); };
    for (std::uint32_t r = 0; r < rings; ++r) {
        for (std::uint32_t s = 0; s < radial_segments; ++s) {
            std::array<std::uint32_t, 3> f1{at(r, s), at(r + 1, s), at(r + 1, s + 1)};
            std::array<std::uint32_t, 3> f2{at(r, s), at(r + 1, s + 1), at(r, s + 1)};
            for (auto* f : {&f1, &f2}) {
                const Vec3 c = (mesh.vertices[(*f)[0]] + mesh.vertices[(*f)[1]] + mesh.vertices[(*f)[2]]).cast<double>() / 3.0;
                orient_outward(*f, mesh.vertices, Vec3(pelvis[0], pelvis[1], c[2]));
                mesh.faces.push_back(*f);
            }
        }
    }
    return mesh;
}

}  // namespace meshsplat
