// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/splat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace meshsplat {

namespace {

MeshRaster empty_raster(std::uint32_t width, std::uint32_t height) {
    if (width == 0 || height == 0) throw Error(ErrorCode::invalid_argument, "raster size must be positive");
    MeshRaster r;
    r.width = width;
    r.height = height;
    const std::size_t n = std::size_t(width) * height;
    r.face.assign(n, -1);
    r.corners.assign(n, Face{0, 0, 0});
    r.weights.assign(n, Vec3::Zero());
    return r;
}

// Scan-converts one screen-space triangle; `accept(pixel, bary)` decides on
// the depth test and writes the pixel.
template <typename Accept>
void scan_triangle(const Vec2& a, const Vec2& b, const Vec2& c, std::uint32_t width, std::uint32_t height,
                   Accept&& accept) {
    const double area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    if (std::abs(area) < 1e-14) return;
    const double x_lo = std::min({a[0], b[0], c[0]}), x_hi = std::max({a[0], b[0], c[0]});
    const double y_lo = std::min({a[1], b[1], c[1]}), y_hi = std::max({a[1], b[1], c[1]});
    const int j0 = std::max(0, int(std::ceil(x_lo - 0.5))), j1 = std::min(int(width) - 1, int(std::floor(x_hi - 0.5)));
    const int i0 = std::max(0, int(std::ceil(y_lo - 0.5))), i1 = std::min(int(height) - 1, int(std::floor(y_hi - 0.5)));
    for (int i = i0; i <= i1; ++i) {
        for (int j = j0; j <= j1; ++j) {
            const double px = j + 0.5, py = i + 0.5;
            const double w0 = ((b[0] - px) * (c[1] - py) - (b[1] - py) * (c[0] - px)) / area;
            const double w1 = ((c[0] - px) * (a[1] - py) - (c[1] - py) * (a[0] - px)) / area;
            const double w2 = 1.0 - w0 - w1;
            if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
            accept(std::size_t(i) * width + std::size_t(j), Vec3(w0, w1, w2));
        }
    }
}

}  // namespace

std::size_t MeshRaster::coverage() const {
    return std::size_t(std::count_if(face.begin(), face.end(), [](std::int32_t f) { return f >= 0; }));
}

MapFraming map_framing(std::span<const Vec3> vertices, double margin) {
    if (vertices.empty()) throw ValidationError("map framing needs a non-empty mesh");
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (const Vec3& v : vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const double mx = std::max(hi[0] - lo[0], 1e-6) * margin, mz = std::max(hi[2] - lo[2], 1e-6) * margin;
    MapFraming f;
    f.x_min = float(lo[0] - mx);
    f.x_max = float(hi[0] + mx);
    f.z_min = float(lo[2] - mz);
    f.z_max = float(hi[2] + mz);
    return f;
}

MeshRaster rasterize_ortho(std::span<const Vec3> vertices, std::span<const Face> faces, const MapFraming& framing,
                           MapSide side, std::uint32_t width, std::uint32_t height) {
    if (vertices.empty() || faces.empty()) throw ValidationError("cannot rasterize an empty mesh");
    MeshRaster r = empty_raster(width, height);
    const double sx = width / (double(framing.x_max) - framing.x_min);
    const double sz = height / (double(framing.z_max) - framing.z_min);
    auto to_pixel = [&](const Vec3& v) { return Vec2((v[0] - framing.x_min) * sx, (framing.z_max - v[2]) * sz); };
    // Depth along the viewing direction: front sees small y, back sees large y.
    const double sign = side == MapSide::front ? 1.0 : -1.0;
    std::vector<double> zbuf(r.face.size(), std::numeric_limits<double>::infinity());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& face = faces[f];
        const Vec3 &a = vertices[face[0]], &b = vertices[face[1]], &c = vertices[face[2]];
        scan_triangle(to_pixel(a), to_pixel(b), to_pixel(c), width, height, [&](std::size_t pix, const Vec3& w) {
            const double depth = sign * (w[0] * a[1] + w[1] * b[1] + w[2] * c[1]);
            if (depth < zbuf[pix]) {
                zbuf[pix] = depth;
                r.face[pix] = std::int32_t(f);
                r.corners[pix] = face;
                r.weights[pix] = w;
            }
        });
    }
    return r;
}

MeshRaster rasterize_perspective(std::span<const Vec3> vertices, std::span<const Face> faces, const Camera& cam) {
    validate(cam);
    MeshRaster r = empty_raster(cam.width, cam.height);
    const RigidTransform w2c = cam.world_to_camera();
    std::vector<Vec3> cam_pts(vertices.size());
    std::vector<Vec2> screen(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        cam_pts[i] = w2c.apply(vertices[i]);
        screen[i] = cam.project(cam_pts[i]);
    }
    std::vector<double> zbuf(r.face.size(), std::numeric_limits<double>::infinity());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& face = faces[f];
        const double za = cam_pts[face[0]][2], zb = cam_pts[face[1]][2], zc = cam_pts[face[2]][2];
        if (za <= cam.near || zb <= cam.near || zc <= cam.near) continue;
        scan_triangle(screen[face[0]], screen[face[1]], screen[face[2]], cam.width, cam.height,
                      [&](std::size_t pix, const Vec3& s) {
                          Vec3 w = s;
                          double depth;
                          if (cam.orthographic()) {
                              depth = w[0] * za + w[1] * zb + w[2] * zc;
                          } else {
                              w = Vec3(s[0] / za, s[1] / zb, s[2] / zc);
                              const double inv_z = w.sum();
                              w /= inv_z;
                              depth = 1.0 / inv_z;
                          }
                          if (depth < zbuf[pix] && depth <= cam.far) {
                              zbuf[pix] = depth;
                              r.face[pix] = std::int32_t(f);
                              r.corners[pix] = face;
                              r.weights[pix] = w;
                          }
                      });
    }
    return r;
}

MapImage apply_raster(const MeshRaster& raster, std::span<const Vec3> attribute) {
    MapImage img;
    img.width = raster.width;
    img.height = raster.height;
    const std::size_t n = raster.face.size();
    img.values.assign(n, Vec3f::Zero());
    img.mask.assign(n, 0);
    for (std::size_t p = 0; p < n; ++p) {
        if (!raster.covered(p)) continue;
        const Face& c = raster.corners[p];
        const Vec3& w = raster.weights[p];
        img.values[p] = (w[0] * attribute[c[0]] + w[1] * attribute[c[1]] + w[2] * attribute[c[2]]).cast<float>();
        img.mask[p] = 1;
    }
    return img;
}

std::vector<Vec3> apply_raster_transpose(const MeshRaster& raster, std::span<const Vec3> pixel_grad,
                                         std::size_t vertex_count) {
    if (pixel_grad.size() != raster.face.size()) throw DimensionError("pixel gradient size != raster size");
    std::vector<Vec3> out(vertex_count, Vec3::Zero());
    for (std::size_t p = 0; p < raster.face.size(); ++p) {
        if (!raster.covered(p)) continue;
        const Face& c = raster.corners[p];
        const Vec3& w = raster.weights[p];
        for (int k = 0; k < 3; ++k) out[c[k]] += w[k] * pixel_grad[p];
    }
    return out;
}

MapRasters make_map_rasters(std::span<const Vec3> canonical, std::span<const Face> faces, std::uint32_t width,
                            std::uint32_t height) {
    MapRasters m;
    m.framing = map_framing(canonical);
    m.front = rasterize_ortho(canonical, faces, m.framing, MapSide::front, width, height);
    m.back = rasterize_ortho(canonical, faces, m.framing, MapSide::back, width, height);
    return m;
}

DeformationMap rasterize_mesh_maps(const MapRasters& rasters, std::span<const Vec3> attribute) {
    DeformationMap map;
    map.framing = rasters.framing;
    map.front = apply_raster(rasters.front, attribute);
    map.back = apply_raster(rasters.back, attribute);
    return map;
}

DeformationMap rasterize_mesh_maps(std::span<const Vec3> canonical, std::span<const Face> faces,
                                   std::span<const Vec3> attribute, std::uint32_t width, std::uint32_t height) {
    return rasterize_mesh_maps(make_map_rasters(canonical, faces, width, height), attribute);
}

}  // namespace meshsplat
