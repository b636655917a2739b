// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/assets.hpp"

#include <cmath>

namespace meshsplat {

namespace {

// Rows: right, down, forward (camera x right, y down, z forward).
Mat3 look_rotation(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 f = (target - eye).normalized();
    Vec3 r = f.cross(up);
    if (r.norm() < 1e-9) r = f.unitOrthogonal();
    r.normalize();
    const Vec3 d = f.cross(r);
    Mat3 R;
    R.row(0) = r;
    R.row(1) = d;
    R.row(2) = f;
    return R;
}

void set_extrinsics(Camera& cam, const Mat3& R, const Vec3& eye) {
    cam.rotation = wxyz_from_quat(Quat(R).normalized());
    // Recompute from the stored float quaternion so center() round-trips.
    const Mat3 Rf = quat_from_wxyz(cam.rotation).normalized().toRotationMatrix();
    cam.translation = (-(Rf * eye)).cast<float>();
}

}  // namespace

RigidTransform Camera::world_to_camera() const {
    return RigidTransform::from_quat(quat_from_wxyz(rotation), translation.cast<double>());
}

Vec3 Camera::center() const {
    const RigidTransform t = world_to_camera();
    return -(t.rotation.transpose() * t.translation);
}

Vec3 Camera::forward() const { return world_to_camera().rotation.row(2).transpose(); }

Vec2 Camera::project(const Vec3& p) const {
    if (orthographic()) {
        return {(p[0] / ortho_width + 0.5) * width, (p[1] / ortho_height + 0.5) * height};
    }
    return {fx * p[0] / p[2] + cx, fy * p[1] / p[2] + cy};
}

Eigen::Matrix<double, 2, 3> Camera::projection_jacobian(const Vec3& p) const {
    Eigen::Matrix<double, 2, 3> J = Eigen::Matrix<double, 2, 3>::Zero();
    if (orthographic()) {
        J(0, 0) = width / double(ortho_width);
        J(1, 1) = height / double(ortho_height);
        return J;
    }
    const double iz = 1.0 / p[2];
    J(0, 0) = fx * iz;
    J(0, 2) = -fx * p[0] * iz * iz;
    J(1, 1) = fy * iz;
    J(1, 2) = -fy * p[1] * iz * iz;
    return J;
}

Vec3 Camera::view_direction(const Vec3& world_point) const {
    if (orthographic()) return forward();
    return (world_point - center()).normalized();
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y_deg, std::uint32_t w,
                       std::uint32_t h) {
    Camera cam;
    cam.mode = CameraMode::perspective;
    cam.width = w;
    cam.height = h;
    const double f = 0.5 * h / std::tan(0.5 * fov_y_deg * M_PI / 180.0);
    cam.fx = cam.fy = float(f);
    cam.cx = 0.5f * float(w);
    cam.cy = 0.5f * float(h);
    set_extrinsics(cam, look_rotation(eye, target, up), eye);
    validate(cam);
    return cam;
}

Camera Camera::orthographic_look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double extent_w,
                                    double extent_h, std::uint32_t w, std::uint32_t h, CameraMode mode) {
    if (mode == CameraMode::perspective) throw Error(ErrorCode::invalid_argument, "orthographic mode required");
    Camera cam;
    cam.mode = mode;
    cam.width = w;
    cam.height = h;
    cam.ortho_width = float(extent_w);
    cam.ortho_height = float(extent_h);
    cam.cx = 0.5f * float(w);
    cam.cy = 0.5f * float(h);
    set_extrinsics(cam, look_rotation(eye, target, up), eye);
    validate(cam);
    return cam;
}

}  // namespace meshsplat
