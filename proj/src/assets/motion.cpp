// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/assets.hpp"
#include "meshsplat/container.hpp"

#include <cmath>

namespace meshsplat {

namespace {
constexpr Magic kMotionMagic = {'M', 'S', 'P', 'L', 'M', 'O', 'T', '\0'};
constexpr std::uint32_t kMotionVersion = 1;
constexpr std::uint32_t kCameraParams = 15;
}  // namespace

void validate(const Camera& cam) {
    if (cam.width == 0 || cam.height == 0) throw ValidationError("camera resolution must be positive");
    if (cam.orthographic()) {
        if (!(cam.ortho_width > 0 && cam.ortho_height > 0)) {
            throw ValidationError("orthographic extent must be positive");
        }
    } else if (!(cam.fx > 0 && cam.fy > 0)) {
        throw ValidationError("focal lengths must be positive");
    }
    if (!(cam.near < cam.far)) throw ValidationError("camera near must be < far");
    if (std::abs(cam.rotation.cast<double>().norm() - 1.0) > 1e-5 || !cam.translation.allFinite()) {
        throw ValidationError("camera extrinsics are not rigid");
    }
}

void validate(const MotionSequence& seq) {
    if (seq.frames.empty()) throw ValidationError("motion sequence is empty");
    if (seq.camera_index.size() != seq.frames.size()) {
        throw ValidationError("camera index count != frame count");
    }
    const auto& first = seq.frames.front();
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const auto& f = seq.frames[t];
        if (f.theta.size() != first.theta.size() || f.epsilon.size() != first.epsilon.size() ||
            f.z.size() != first.z.size()) {
            throw ValidationError("frame " + std::to_string(t) + " dimensions differ from frame 0", {t});
        }
        if (seq.camera_index[t] >= seq.cameras.size()) {
            throw ValidationError("frame " + std::to_string(t) + " references a missing camera", {t});
        }
        if (std::abs(f.root_rotation.cast<double>().norm() - 1.0) > 1e-5) {
            throw ValidationError("frame " + std::to_string(t) + " root rotation is not unit", {t});
        }
    }
    for (const auto& cam : seq.cameras) validate(cam);
}

void validate(const FrameInput& frame, const RiggedTemplate& tpl) {
    if (frame.theta.size() != tpl.theta_dim()) {
        throw DimensionError("theta has " + std::to_string(frame.theta.size()) + " values, template needs " +
                             std::to_string(tpl.theta_dim()));
    }
    if (!frame.epsilon.empty() && frame.epsilon.size() != tpl.expression_count) {
        throw DimensionError("epsilon has " + std::to_string(frame.epsilon.size()) +
                             " values, template has " + std::to_string(tpl.expression_count) +
                             " expression channels");
    }
}

std::string encode_motion(const MotionSequence& seq) {
    validate(seq);
    const auto nf = std::uint32_t(seq.frames.size());
    const auto nc = std::uint32_t(seq.cameras.size());
    const auto dtheta = std::uint32_t(seq.frames[0].theta.size());
    const auto deps = std::uint32_t(seq.frames[0].epsilon.size());
    const auto dz = std::uint32_t(seq.frames[0].z.size());
    std::vector<float> theta, eps, z, root;
    theta.reserve(nf * dtheta);
    for (const auto& f : seq.frames) {
        theta.insert(theta.end(), f.theta.begin(), f.theta.end());
        eps.insert(eps.end(), f.epsilon.begin(), f.epsilon.end());
        z.insert(z.end(), f.z.begin(), f.z.end());
        for (int a = 0; a < 4; ++a) root.push_back(f.root_rotation[a]);
        for (int a = 0; a < 3; ++a) root.push_back(f.root_translation[a]);
    }
    std::vector<std::uint32_t> modes, sizes;
    std::vector<float> params;
    for (const auto& c : seq.cameras) {
        modes.push_back(std::uint32_t(c.mode));
        sizes.push_back(c.width);
        sizes.push_back(c.height);
        const float p[kCameraParams] = {c.fx, c.fy, c.cx, c.cy, c.ortho_width, c.ortho_height,
                                        c.rotation[0], c.rotation[1], c.rotation[2], c.rotation[3],
                                        c.translation[0], c.translation[1], c.translation[2],
                                        c.near, c.far};
        params.insert(params.end(), p, p + kCameraParams);
    }
    ContainerWriter w(kMotionMagic, kMotionVersion);
    w.add_f32("theta", nf, dtheta, theta);
    w.add_f32("epsilon", nf, deps, eps);
    w.add_f32("z", nf, dz, z);
    w.add_f32("root", nf, 7, root);
    w.add_u32("camera_index", nf, 1, seq.camera_index);
    w.add_u32("cam_mode", nc, 1, modes);
    w.add_u32("cam_size", nc, 2, sizes);
    w.add_f32("cam_params", nc, kCameraParams, params);
    return w.finish();
}

MotionSequence decode_motion(std::string bytes) {
    ContainerReader r(std::move(bytes), kMotionMagic, kMotionVersion);
    MotionSequence seq;
    const auto root = r.f32("root", 0, 7);
    const auto nf = std::uint32_t(root.size() / 7);
    const auto& theta_s = r.section("theta");
    const auto& eps_s = r.section("epsilon");
    const auto& z_s = r.section("z");
    const auto theta = r.f32("theta", nf, theta_s.cols);
    const auto eps = r.f32("epsilon", nf, eps_s.cols);
    const auto z = r.f32("z", nf, z_s.cols);
    seq.camera_index = r.u32("camera_index", nf, 1);
    const auto modes = r.u32("cam_mode", 0, 1);
    const auto nc = std::uint32_t(modes.size());
    const auto sizes = r.u32("cam_size", nc, 2);
    const auto params = r.f32("cam_params", nc, kCameraParams);

    seq.frames.resize(nf);
    for (std::uint32_t t = 0; t < nf; ++t) {
        auto& f = seq.frames[t];
        f.theta.assign(theta.begin() + t * theta_s.cols, theta.begin() + (t + 1) * theta_s.cols);
        f.epsilon.assign(eps.begin() + t * eps_s.cols, eps.begin() + (t + 1) * eps_s.cols);
        f.z.assign(z.begin() + t * z_s.cols, z.begin() + (t + 1) * z_s.cols);
        f.root_rotation = Vec4f(root[t * 7], root[t * 7 + 1], root[t * 7 + 2], root[t * 7 + 3]);
        f.root_translation = Vec3f(root[t * 7 + 4], root[t * 7 + 5], root[t * 7 + 6]);
    }
    seq.cameras.resize(nc);
    for (std::uint32_t k = 0; k < nc; ++k) {
        auto& c = seq.cameras[k];
        if (modes[k] > std::uint32_t(CameraMode::ortho_back)) {
            throw FormatError("unknown camera mode", r.section("cam_mode").payload_offset + 4 * k, "cam_mode");
        }
        c.mode = CameraMode(modes[k]);
        c.width = sizes[k * 2];
        c.height = sizes[k * 2 + 1];
        const float* p = params.data() + k * kCameraParams;
        c.fx = p[0];
        c.fy = p[1];
        c.cx = p[2];
        c.cy = p[3];
        c.ortho_width = p[4];
        c.ortho_height = p[5];
        c.rotation = Vec4f(p[6], p[7], p[8], p[9]);
        c.translation = Vec3f(p[10], p[11], p[12]);
        c.near = p[13];
        c.far = p[14];
    }
    validate(seq);
    return seq;
}

void save_motion(const std::string& path, const MotionSequence& seq) {
    write_file_atomic(path, encode_motion(seq));
}

MotionSequence load_motion(const std::string& path) { return decode_motion(read_file(path)); }

MotionSequence make_motion(const RiggedTemplate& tpl, const MotionConfig& config) {
    if (config.frames == 0) throw Error(ErrorCode::invalid_argument, "motion needs at least one frame");
    Rng rng(config.seed);
    const std::size_t dtheta = tpl.theta_dim();
    const std::uint32_t prims = std::max<std::uint32_t>(1, config.primitives);

    // Pose primitives: random joint-space directions with their own frequency and phase.
    std::vector<Eigen::VectorXd> basis(prims);
    std::vector<double> omega(prims), phase(prims);
    for (std::uint32_t k = 0; k < prims; ++k) {
        basis[k] = Eigen::VectorXd(dtheta);
        for (std::size_t i = 0; i < dtheta; ++i) basis[k][i] = rng.uniform(-1.0, 1.0);
        omega[k] = rng.uniform(0.15, 0.45);
        phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    }
    std::vector<double> expr_omega(tpl.expression_count), expr_phase(tpl.expression_count);
    for (std::uint32_t e = 0; e < tpl.expression_count; ++e) {
        expr_omega[e] = rng.uniform(0.2, 0.6);
        expr_phase[e] = rng.uniform(0.0, 2.0 * M_PI);
    }

    Vec3 lo = Vec3::Constant(1e30), hi = Vec3::Constant(-1e30);
    for (const auto& v : tpl.vertices) {
        lo = lo.cwiseMin(v.cast<double>());
        hi = hi.cwiseMax(v.cast<double>());
    }
    const Vec3 center = 0.5 * (lo + hi);

    MotionSequence seq;
    const std::uint32_t ncam = std::max<std::uint32_t>(1, config.camera_count);
    for (std::uint32_t k = 0; k < ncam; ++k) {
        // Orbit starting in front of the rig (the rig faces -y).
        const double angle = 2.0 * M_PI * double(k) / double(ncam);
        const Vec3 eye = center + config.camera_distance * Vec3(std::sin(angle), -std::cos(angle), 0.15);
        seq.cameras.push_back(Camera::look_at(eye, center, Vec3(0, 0, 1), config.fov_y_deg, config.width,
                                              config.height));
    }

    seq.frames.resize(config.frames);
    seq.camera_index.resize(config.frames);
    for (std::uint32_t t = 0; t < config.frames; ++t) {
        const double time = double(t) + config.time_offset;
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(dtheta);
        for (std::uint32_t k = 0; k < prims; ++k) {
            theta += basis[k] * std::sin(omega[k] * time + phase[k]);
        }
        theta *= config.pose_amplitude / std::sqrt(double(prims));
        auto& f = seq.frames[t];
        f.theta.resize(dtheta);
        for (std::size_t i = 0; i < dtheta; ++i) f.theta[i] = float(theta[i]);
        f.epsilon.resize(tpl.expression_count);
        for (std::uint32_t e = 0; e < tpl.expression_count; ++e) {
            f.epsilon[e] = float(0.8 * std::sin(expr_omega[e] * time + expr_phase[e]));
        }
        f.z.assign(config.embedding_dim, 0.0f);
        RigidTransform root;
        root.rotation = Eigen::AngleAxisd(0.1 * std::sin(0.2 * time), Vec3::UnitZ()).toRotationMatrix();
        root.translation = Vec3(0.03 * std::sin(0.3 * time), 0.0, 0.0);
        f.set_root(root);
        seq.camera_index[t] = t % ncam;
    }
    return seq;
}

}  // namespace meshsplat
