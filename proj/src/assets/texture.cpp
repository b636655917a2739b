// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/assets.hpp"
#include "meshsplat/container.hpp"

#include <cmath>
#include <limits>

namespace meshsplat {

namespace {
constexpr Magic kTextureMagic = {'M', 'S', 'P', 'L', 'G', 'T', 'X', '\0'};
constexpr std::uint32_t kTextureVersion = 1;
// sigmoid/exp stay strictly inside their open ranges in double precision.
constexpr float kMaxLogit = 30.0f;
constexpr float kMaxLogScale = 30.0f;
}  // namespace

void GaussianTexture::resize(std::size_t n) {
    face.resize(n, 0);
    uv.resize(n, Vec2f(1.0f / 3.0f, 1.0f / 3.0f));
    gamma.resize(n, 0.0f);
    rotation.resize(n, Vec4f(1, 0, 0, 0));
    log_scale.resize(n, Vec3f::Zero());
    opacity_logit.resize(n, 0.0f);
    sh.resize(n * sh_stride(), 0.0f);
}

void validate(const GaussianTexture& tex, std::size_t face_count) {
    const std::size_t n = tex.face.size();
    if (tex.sh_degree > 3) throw ValidationError("sh degree must be in [0,3]");
    if (tex.uv.size() != n || tex.gamma.size() != n || tex.rotation.size() != n ||
        tex.log_scale.size() != n || tex.opacity_logit.size() != n || tex.sh.size() != n * tex.sh_stride()) {
        throw ValidationError("texture attribute arrays have inconsistent lengths");
    }
    for (std::size_t g = 0; g < n; ++g) {
        if (face_count != std::numeric_limits<std::size_t>::max() && tex.face[g] >= face_count) {
            throw ValidationError("gaussian " + std::to_string(g) + " binds to face " +
                                      std::to_string(tex.face[g]) + " >= face count " +
                                      std::to_string(face_count),
                                  {g});
        }
        const Vec2f& uv = tex.uv[g];
        if (!(uv[0] >= 0.0f && uv[1] >= 0.0f && double(uv[0]) + double(uv[1]) <= 1.0 + 1e-6)) {
            throw ValidationError("gaussian " + std::to_string(g) + " barycentric outside triangle", {g});
        }
        if (std::abs(tex.rotation[g].cast<double>().norm() - 1.0) > 1e-6) {
            throw ValidationError("gaussian " + std::to_string(g) + " quaternion not unit", {g});
        }
        if (!std::isfinite(tex.gamma[g]) || !(std::abs(tex.opacity_logit[g]) <= kMaxLogit) ||
            !(tex.log_scale[g].cwiseAbs().maxCoeff() <= kMaxLogScale)) {
            throw ValidationError("gaussian " + std::to_string(g) + " has out-of-range attributes", {g});
        }
    }
    for (std::size_t k = 0; k < tex.sh.size(); ++k) {
        if (!std::isfinite(tex.sh[k])) {
            throw ValidationError("non-finite sh coefficient", {k / tex.sh_stride()});
        }
    }
}

std::string encode_texture(const GaussianTexture& tex) {
    validate(tex, std::numeric_limits<std::size_t>::max());
    const auto n = std::uint32_t(tex.size());
    std::vector<float> uv(n * 2), rot(n * 4), scale(n * 3);
    for (std::uint32_t g = 0; g < n; ++g) {
        for (int a = 0; a < 2; ++a) uv[g * 2 + a] = tex.uv[g][a];
        for (int a = 0; a < 4; ++a) rot[g * 4 + a] = tex.rotation[g][a];
        for (int a = 0; a < 3; ++a) scale[g * 3 + a] = tex.log_scale[g][a];
    }
    ContainerWriter w(kTextureMagic, kTextureVersion);
    w.add_scalar_u32("sh_degree", tex.sh_degree);
    w.add_u32("face", n, 1, tex.face);
    w.add_f32("uv", n, 2, uv);
    w.add_f32("gamma", n, 1, tex.gamma);
    w.add_f32("rotation", n, 4, rot);
    w.add_f32("log_scale", n, 3, scale);
    w.add_f32("opacity_logit", n, 1, tex.opacity_logit);
    w.add_f32("sh", n, std::uint32_t(tex.sh_stride()), tex.sh);
    return w.finish();
}

GaussianTexture decode_texture(std::string bytes) {
    ContainerReader r(std::move(bytes), kTextureMagic, kTextureVersion);
    GaussianTexture tex;
    tex.sh_degree = r.scalar_u32("sh_degree");
    if (tex.sh_degree > 3) {
        throw FormatError("sh degree out of range", r.section("sh_degree").payload_offset, "sh_degree");
    }
    tex.face = r.u32("face", 0, 1);
    const auto n = std::uint32_t(tex.face.size());
    const auto uv = r.f32("uv", n, 2);
    tex.gamma = r.f32("gamma", n, 1);
    const auto rot = r.f32("rotation", n, 4);
    const auto scale = r.f32("log_scale", n, 3);
    tex.opacity_logit = r.f32("opacity_logit", n, 1);
    tex.sh = r.f32("sh", n, std::uint32_t(tex.sh_stride()));
    tex.uv.resize(n);
    tex.rotation.resize(n);
    tex.log_scale.resize(n);
    for (std::uint32_t g = 0; g < n; ++g) {
        tex.uv[g] = Vec2f(uv[g * 2], uv[g * 2 + 1]);
        tex.rotation[g] = Vec4f(rot[g * 4], rot[g * 4 + 1], rot[g * 4 + 2], rot[g * 4 + 3]);
        tex.log_scale[g] = Vec3f(scale[g * 3], scale[g * 3 + 1], scale[g * 3 + 2]);
    }
    validate(tex, std::numeric_limits<std::size_t>::max());
    return tex;
}

void save_texture(const std::string& path, const GaussianTexture& tex) {
    write_file_atomic(path, encode_texture(tex));
}

GaussianTexture load_texture(const std::string& path) { return decode_texture(read_file(path)); }

}  // namespace meshsplat
