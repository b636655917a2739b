// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Software Gaussian splatting: projection, depth sorting, tiled front-to-back
// compositing and its backward pass; canonical front/back mesh maps; mesh
// rasterization for semantic maps; relighting and image files.
#pragma once

#include "meshsplat/gstexture.hpp"

#include <span>
#include <string>
#include <vector>

namespace meshsplat {

// --- splatting ---------------------------------------------------------------

enum class SortMode { exact_f32, quant_u16 };

constexpr int kTileSize = 16;
constexpr double kMinEigenvalue = 0.3;   // px^2, floor on projected covariance
constexpr double kCutoffSigma = 3.0;     // footprint radius in standard deviations
constexpr double kMaxAlpha = 0.99;
constexpr double kMinAlpha = 1.0 / 255.0;
constexpr double kMinTransmittance = 1e-6;

struct RenderOptions {
    bool color = true;
    bool normal = false;
    bool depth = false;
    bool semantic = false;
    SortMode sort = SortMode::exact_f32;
};

/// Per-pixel channels, row-major. Disabled channels are empty. `alpha` is
/// always present and equals sum_i alpha_i T_i.
struct RenderTarget {
    std::uint32_t width = 0, height = 0;
    std::vector<double> color;     // 3 per pixel
    std::vector<double> alpha;     // 1 per pixel
    std::vector<double> normal;    // 3 per pixel, alpha-weighted
    std::vector<double> depth;     // 1 per pixel, alpha-weighted camera z
    std::vector<double> semantic;  // 3 per pixel, alpha-weighted

    std::size_t pixels() const { return std::size_t(width) * height; }
};

struct ProjectedGaussian {
    bool visible = false;
    Vec2 mean = Vec2::Zero();   // pixels
    Mat2 cov = Mat2::Identity();
    Mat2 conic = Mat2::Identity();  // inverse of cov
    double depth = 0.0;         // camera z
    double radius = 0.0;        // pixels, kCutoffSigma * sqrt(largest eigenvalue)
    Eigen::Matrix<double, 2, 3> mean_jacobian = Eigen::Matrix<double, 2, 3>::Zero();  // d mean / d world
};

/// EWA projection. Gaussians with depth <= near or > far are invisible.
/// Throws ValidationError with the index of any non-finite Gaussian.
std::vector<ProjectedGaussian> project_gaussians(std::span<const WorldGaussian> gaussians, const Camera& cam);

/// u16 key over [near, far], floor-quantized.
std::uint16_t quantize_depth(double depth, double near, double far);

/// Front-to-back order of the Gaussians with depth in (near, far]. Ties
/// (equal keys) are ordered by index.
std::vector<std::uint32_t> sort_by_depth(std::span<const double> depths, double near, double far,
                                         SortMode mode);
std::vector<std::uint32_t> sort_by_depth(std::span<const ProjectedGaussian> projected, double near, double far,
                                         SortMode mode);

/// Optional per-stage wall time (milliseconds) and work counts.
struct RenderStats {
    double project_ms = 0, sort_ms = 0, bin_ms = 0, raster_ms = 0;
    std::size_t visible = 0, tile_entries = 0;
};

RenderTarget render(std::span<const WorldGaussian> gaussians, const Camera& cam,
                    const RenderOptions& options = {}, RenderStats* stats = nullptr);

/// Upstream gradients shaped like a RenderTarget (empty = zero).
struct RenderGradients {
    std::vector<double> color, alpha, normal, depth, semantic;
};

/// Gradients of the splat forward for fixed covariances, sort order and
/// view-dependent color: per-Gaussian color/normal/semantic features,
/// opacity, projected mean and the world mean it comes from.
struct SplatGradients {
    std::vector<Vec3> color, normal, semantic;
    std::vector<double> opacity;
    std::vector<Vec2> mean2d;
    std::vector<Vec3> mean3d;
};

SplatGradients render_backward(std::span<const WorldGaussian> gaussians, const Camera& cam,
                               const RenderOptions& options, const RenderGradients& upstream);

/// Forward and backward over already-projected Gaussians (used by gradient
/// checks that perturb 2D means directly).
RenderTarget render_projected(std::span<const WorldGaussian> gaussians,
                              std::span<const ProjectedGaussian> projected, const Camera& cam,
                              const RenderOptions& options, RenderStats* stats = nullptr);
SplatGradients render_projected_backward(std::span<const WorldGaussian> gaussians,
                                         std::span<const ProjectedGaussian> projected, const Camera& cam,
                                         const RenderOptions& options, const RenderGradients& upstream);

// --- mesh rasterization --------------------------------------------------------

enum class MapSide { front, back };

/// Per pixel: covering face (-1 when empty), its corners and fixed barycentric
/// weights, so rasterized attributes are exactly linear in vertex values.
struct MeshRaster {
    std::uint32_t width = 0, height = 0;
    std::vector<std::int32_t> face;
    std::vector<Face> corners;
    std::vector<Vec3> weights;

    bool covered(std::size_t pixel) const { return face[pixel] >= 0; }
    std::size_t coverage() const;
};

/// Canonical bounding box in (x, z) plus a relative margin per axis.
MapFraming map_framing(std::span<const Vec3> vertices, double margin = 0.05);

/// Orthographic along the y axis. Front looks toward +y (sees smallest y),
/// back toward -y. Column j spans x, row 0 is the top (largest z); both
/// sides share the same pixel -> (x, z) mapping, so silhouettes coincide.
/// Equal depths resolve to the lowest face index.
MeshRaster rasterize_ortho(std::span<const Vec3> vertices, std::span<const Face> faces, const MapFraming& framing,
                           MapSide side, std::uint32_t width, std::uint32_t height);

/// Perspective-correct z-buffered rasterization (faces crossing the near
/// plane are skipped).
MeshRaster rasterize_perspective(std::span<const Vec3> vertices, std::span<const Face> faces, const Camera& cam);

MapImage apply_raster(const MeshRaster& raster, std::span<const Vec3> attribute);
/// Transpose of apply_raster: scatters per-pixel gradients to vertices.
std::vector<Vec3> apply_raster_transpose(const MeshRaster& raster, std::span<const Vec3> pixel_grad,
                                         std::size_t vertex_count);

struct MapRasters {
    MapFraming framing;
    MeshRaster front, back;
};

MapRasters make_map_rasters(std::span<const Vec3> canonical, std::span<const Face> faces, std::uint32_t width,
                            std::uint32_t height);

/// Front and back maps of a per-vertex attribute over the canonical mesh.
DeformationMap rasterize_mesh_maps(const MapRasters& rasters, std::span<const Vec3> attribute);
DeformationMap rasterize_mesh_maps(std::span<const Vec3> canonical, std::span<const Face> faces,
                                   std::span<const Vec3> attribute, std::uint32_t width, std::uint32_t height);

// --- relighting and images -----------------------------------------------------

struct Light {
    Vec3 direction = Vec3(0, 0, 1);  // toward the light, normalized internally
    Vec3 intensity = Vec3::Ones();
    Vec3 ambient = Vec3::Zero();
};

/// out = base * (ambient + intensity * max(0, n . l)), clamped to [0, 1].
/// Normals are normalized per pixel; zero normals shade with ambient only.
std::vector<double> relight(std::span<const double> color, std::span<const double> normal, const Light& light);

/// RGB image with values nominally in [0, 1].
struct Image {
    std::uint32_t width = 0, height = 0;
    std::vector<double> rgb;
};

enum class ImageFormat { ppm, png };

Image color_image(const RenderTarget& target);
Image alpha_image(const RenderTarget& target);
/// Normals mapped from [-1, 1] to [0, 1].
Image normal_image(const RenderTarget& target);

/// 8-bit quantization, round to nearest: exactly what a file stores.
std::uint8_t quantize_unit(double v);
Image quantize_8bit(const Image& image);

std::string encode_ppm(const Image& image);
Image decode_ppm(const std::string& bytes);
void write_image(const std::string& path, const Image& image, ImageFormat format = ImageFormat::ppm);
Image read_ppm(const std::string& path);
ImageFormat image_format_from_path(const std::string& path);

}  // namespace meshsplat
