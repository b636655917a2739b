// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Shared math types, error hierarchy, deterministic RNG and the parallel-for
// used by every module.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace meshsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

using Vec2f = Eigen::Vector2f;
using Vec3f = Eigen::Vector3f;
using Vec4f = Eigen::Vector4f;

/// Rigid transform x -> R x + t.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    static RigidTransform from_quat(const Quat& q, const Vec3& t) {
        return {q.normalized().toRotationMatrix(), t};
    }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const {
        const Mat3 rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }
    RigidTransform operator*(const RigidTransform& rhs) const {
        return {rotation * rhs.rotation, rotation * rhs.translation + translation};
    }
};

// Quaternions are persisted as (w, x, y, z).
inline Quat quat_from_wxyz(const Vec4f& q) {
    return Quat(double(q[0]), double(q[1]), double(q[2]), double(q[3]));
}
inline Vec4f wxyz_from_quat(const Quat& q) {
    return Vec4f(float(q.w()), float(q.x()), float(q.y()), float(q.z()));
}

/// Rotation matrix of an axis-angle 3-vector (radians).
Mat3 axis_angle_matrix(const Vec3& axis_angle);

enum class ErrorCode : int {
    invalid_argument = 1,
    validation = 2,
    format = 3,
    io = 4,
    runtime = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Malformed container: carries the byte offset where decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset, std::string section = {});
    std::uint64_t offset() const noexcept { return offset_; }
    const std::string& section() const noexcept { return section_; }

private:
    std::uint64_t offset_;
    std::string section_;
};

/// A value that violates its type invariants, optionally naming offending indices.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what, std::vector<std::size_t> indices = {})
        : Error(ErrorCode::validation, what), indices_(std::move(indices)) {}
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }

private:
    std::vector<std::size_t> indices_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(ErrorCode::invalid_argument, what) {}
};

class IoError : public Error {
public:
    IoError(const std::string& what, std::string path)
        : Error(ErrorCode::io, what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// SplitMix-seeded xoshiro256** generator. Bit-reproducible across standard
/// libraries, unlike the std distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    double uniform();                           // [0, 1)
    double uniform(double lo, double hi);       // [lo, hi)
    int uniform_int(int lo, int hi);            // inclusive
    double normal();                            // standard normal

private:
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Worker count used by parallel_for. 0 selects the host core count.
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs body(begin, end) over [0, n) split into chunks of `grain`. Chunk
/// boundaries depend only on n and grain, never on the thread count.
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Writes `bytes` to path via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

}  // namespace meshsplat
