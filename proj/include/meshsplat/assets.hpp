// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Asset data model: rigged template, Gaussian texture, motion, cameras and
// deformation maps, plus their binary containers (.tpl .gtx .mot .dmap).
// Persisted payloads are kept in single precision in memory so that a
// save/load round trip is the identity on every stored bit.
#pragma once

#include "meshsplat/common.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace meshsplat {

enum class ComponentLabel : std::uint8_t { body = 0, cloth = 1, hair = 2, shoes = 3 };

const char* label_name(ComponentLabel label);

constexpr int kMaxInfluences = 8;

/// Sparse skinning row. Unused slots hold joint -1 and weight 0.
struct SkinWeights {
    std::array<std::int32_t, kMaxInfluences> joint;
    std::array<float, kMaxInfluences> weight;

    SkinWeights() {
        joint.fill(-1);
        weight.fill(0.0f);
    }
    static SkinWeights single(std::int32_t j) {
        SkinWeights w;
        w.joint[0] = j;
        w.weight[0] = 1.0f;
        return w;
    }
    int count() const {
        int n = 0;
        for (auto j : joint) n += (j >= 0);
        return n;
    }
    double sum() const {
        double s = 0.0;
        for (int k = 0; k < kMaxInfluences; ++k)
            if (joint[k] >= 0) s += weight[k];
        return s;
    }
};

/// Builds a sparse row from dense (joint, weight) pairs: drops nonpositive
/// entries, keeps the kMaxInfluences largest, renormalizes to sum 1.
SkinWeights make_skin_row(std::vector<std::pair<std::int32_t, double>> entries);

struct Joint {
    std::int32_t parent = -1;
    Vec4f rest_rotation = Vec4f(1, 0, 0, 0);  // world bind rotation, wxyz
    Vec3f rest_translation = Vec3f::Zero();   // world bind position (m)

    RigidTransform rest() const {
        return RigidTransform::from_quat(quat_from_wxyz(rest_rotation), rest_translation.cast<double>());
    }
};

using Face = std::array<std::uint32_t, 3>;

struct TriangleMesh {
    std::vector<Vec3f> vertices;
    std::vector<Face> faces;
};

/// Canonical (T-pose) rigged mesh. Joints are stored in topological order:
/// joint 0 is the unique root and every parent index precedes its child.
struct RiggedTemplate {
    std::vector<Vec3f> vertices;
    std::vector<Face> faces;
    std::vector<Joint> joints;
    std::vector<SkinWeights> skin;
    std::vector<ComponentLabel> labels;
    std::vector<Vec3f> segmentation_colors;
    std::uint32_t expression_count = 0;
    // expression_count x vertex count x 3, channel-major.
    std::vector<float> expression_basis;
    std::vector<std::uint8_t> cloth_mask;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }
    std::size_t joint_count() const { return joints.size(); }
    std::size_t theta_dim() const { return joints.empty() ? 0 : 3 * (joints.size() - 1); }
    Vec3f expression_delta(std::size_t channel, std::size_t vertex) const {
        const std::size_t at = (channel * vertices.size() + vertex) * 3;
        return {expression_basis[at], expression_basis[at + 1], expression_basis[at + 2]};
    }
};

/// Throws ValidationError describing the first violated invariant.
void validate(const RiggedTemplate& tpl);

/// Per-Gaussian local attributes bound to parent triangles.
struct GaussianTexture {
    std::uint32_t sh_degree = 2;
    std::vector<std::uint32_t> face;
    std::vector<Vec2f> uv;
    std::vector<float> gamma;
    std::vector<Vec4f> rotation;  // wxyz, unit
    std::vector<Vec3f> log_scale;
    std::vector<float> opacity_logit;
    // size() x sh_coeffs() x 3, coefficient-major per Gaussian.
    std::vector<float> sh;

    std::size_t size() const { return face.size(); }
    std::size_t sh_coeffs() const { return std::size_t(sh_degree + 1) * (sh_degree + 1); }
    std::size_t sh_stride() const { return 3 * sh_coeffs(); }
    const float* sh_of(std::size_t g) const { return sh.data() + g * sh_stride(); }
    float* sh_of(std::size_t g) { return sh.data() + g * sh_stride(); }
    void resize(std::size_t n);
};

void validate(const GaussianTexture& tex, std::size_t face_count);

struct FrameInput {
    std::vector<float> theta;    // 3 x (joints - 1), axis-angle radians
    std::vector<float> epsilon;  // expression coefficients
    std::vector<float> z;        // per-frame embedding (empty -> bundle default)
    Vec4f root_rotation = Vec4f(1, 0, 0, 0);
    Vec3f root_translation = Vec3f::Zero();

    RigidTransform root() const {
        return RigidTransform::from_quat(quat_from_wxyz(root_rotation), root_translation.cast<double>());
    }
    void set_root(const RigidTransform& t) {
        root_rotation = wxyz_from_quat(Quat(t.rotation));
        root_translation = t.translation.cast<float>();
    }
    static FrameInput rest(const RiggedTemplate& tpl) {
        FrameInput f;
        f.theta.assign(tpl.theta_dim(), 0.0f);
        f.epsilon.assign(tpl.expression_count, 0.0f);
        return f;
    }
};

enum class CameraMode : std::uint32_t { perspective = 0, ortho_front = 1, ortho_back = 2 };

/// Pinhole or orthographic camera. Camera space is x right, y down, z
/// forward; pixel (row i, column j) has its center at (j + 0.5, i + 0.5).
struct Camera {
    CameraMode mode = CameraMode::perspective;
    float fx = 1, fy = 1, cx = 0, cy = 0;  // perspective intrinsics (pixels)
    float ortho_width = 1, ortho_height = 1;  // orthographic extent (m)
    Vec4f rotation = Vec4f(1, 0, 0, 0);  // world -> camera, wxyz
    Vec3f translation = Vec3f::Zero();
    std::uint32_t width = 1, height = 1;
    float near = 0.01f, far = 100.0f;

    bool orthographic() const { return mode != CameraMode::perspective; }
    RigidTransform world_to_camera() const;
    Vec3 center() const;
    Vec3 forward() const;
    Vec2 project(const Vec3& cam_point) const;
    /// d(pixel)/d(camera-space point).
    Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& cam_point) const;
    /// Unit direction from the camera toward a world point.
    Vec3 view_direction(const Vec3& world_point) const;

    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y_deg,
                          std::uint32_t width, std::uint32_t height);
    static Camera orthographic_look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                                       double extent_w, double extent_h, std::uint32_t width,
                                       std::uint32_t height, CameraMode mode = CameraMode::ortho_front);
};

void validate(const Camera& cam);

struct MotionSequence {
    std::vector<FrameInput> frames;
    std::vector<Camera> cameras;
    std::vector<std::uint32_t> camera_index;  // per frame
};

void validate(const MotionSequence& seq);
void validate(const FrameInput& frame, const RiggedTemplate& tpl);

/// Canonical-space framing for front/back orthographic maps (x across, z up).
struct MapFraming {
    float x_min = -1, x_max = 1, z_min = -1, z_max = 1;
};

struct MapImage {
    std::uint32_t width = 0, height = 0;
    std::vector<Vec3f> values;
    std::vector<std::uint8_t> mask;
};

struct DeformationMap {
    MapFraming framing;
    MapImage front, back;
};

void validate(const DeformationMap& map);

// --- serialization -------------------------------------------------------

std::string encode_template(const RiggedTemplate& tpl);
RiggedTemplate decode_template(std::string bytes);
void save_template(const std::string& path, const RiggedTemplate& tpl);
RiggedTemplate load_template(const std::string& path);

std::string encode_texture(const GaussianTexture& tex);
GaussianTexture decode_texture(std::string bytes);
void save_texture(const std::string& path, const GaussianTexture& tex);
GaussianTexture load_texture(const std::string& path);

std::string encode_motion(const MotionSequence& seq);
MotionSequence decode_motion(std::string bytes);
void save_motion(const std::string& path, const MotionSequence& seq);
MotionSequence load_motion(const std::string& path);

std::string encode_deformation_map(const DeformationMap& map);
DeformationMap decode_deformation_map(std::string bytes);
void save_deformation_map(const std::string& path, const DeformationMap& map);
DeformationMap load_deformation_map(const std::string& path);

/// Minimal Wavefront OBJ (v / f lines, polygons fan-triangulated).
TriangleMesh load_obj(const std::string& path);
void save_obj(const std::string& path, const TriangleMesh& mesh);

// --- synthetic rigs ------------------------------------------------------

struct CapsuleRigConfig {
    std::uint32_t joint_count = 22;
    bool cloth = false;
    std::uint64_t seed = 0;
    std::uint32_t radial_segments = 12;
    std::uint32_t rings_per_bone = 6;
    std::uint32_t expression_count = 10;
};

/// Humanoid capsule-limb rig: one closed capsule per bone, smooth skinning
/// across joints, optional skirt component bound via weight transfer.
RiggedTemplate make_capsule_rig(const CapsuleRigConfig& config);

/// Skirt tube around the pelvis of a capsule rig, in the rig's rest pose.
TriangleMesh make_skirt_mesh(const RiggedTemplate& body, std::uint32_t radial_segments,
                             std::uint32_t rings);

/// Motion with smooth low-dimensional pose trajectories and an orbit of
/// perspective cameras around the rig.
struct MotionConfig {
    std::uint32_t frames = 32;
    std::uint64_t seed = 0;
    double pose_amplitude = 0.35;  // rad
    std::uint32_t primitives = 3;
    std::uint32_t camera_count = 4;
    std::uint32_t width = 64, height = 64;
    double camera_distance = 3.0;  // m
    double fov_y_deg = 45.0;
    double time_offset = 0.0;  // shifts the trajectory phase (held-out poses)
    std::uint32_t embedding_dim = 0;  // 0: frames carry no z, the student uses its own table
};
MotionSequence make_motion(const RiggedTemplate& tpl, const MotionConfig& config);

}  // namespace meshsplat
