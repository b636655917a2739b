// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/assets.hpp"
#include "meshsplat/container.hpp"

namespace meshsplat {

namespace {
constexpr Magic kMapMagic = {'M', 'S', 'P', 'L', 'D', 'M', 'P', '\0'};
constexpr std::uint32_t kMapVersion = 1;

void validate_side(const MapImage& img, const char* side) {
    const std::size_t n = std::size_t(img.width) * img.height;
    if (img.width == 0 || img.height == 0) {
        throw ValidationError(std::string(side) + " map has zero size");
    }
    if (img.values.size() != n || img.mask.size() != n) {
        throw ValidationError(std::string(side) + " map buffers do not match its resolution");
    }
    for (std::size_t p = 0; p < n; ++p) {
        if (img.mask[p] > 1 || !img.values[p].allFinite()) {
            throw ValidationError(std::string(side) + " map pixel " + std::to_string(p) + " invalid", {p});
        }
    }
}

std::vector<float> flatten(const MapImage& img) {
    std::vector<float> out(img.values.size() * 3);
    for (std::size_t p = 0; p < img.values.size(); ++p) {
        for (int a = 0; a < 3; ++a) out[p * 3 + a] = img.values[p][a];
    }
    return out;
}

MapImage unflatten(const std::vector<float>& v, std::vector<std::uint8_t> mask, std::uint32_t w,
                   std::uint32_t h) {
    MapImage img;
    img.width = w;
    img.height = h;
    img.values.resize(std::size_t(w) * h);
    for (std::size_t p = 0; p < img.values.size(); ++p) {
        img.values[p] = Vec3f(v[p * 3], v[p * 3 + 1], v[p * 3 + 2]);
    }
    img.mask = std::move(mask);
    return img;
}
}  // namespace

void validate(const DeformationMap& map) {
    validate_side(map.front, "front");
    validate_side(map.back, "back");
    if (map.front.width != map.back.width || map.front.height != map.back.height) {
        throw ValidationError("front and back maps differ in resolution");
    }
    if (!(map.framing.x_min < map.framing.x_max && map.framing.z_min < map.framing.z_max)) {
        throw ValidationError("map framing is empty");
    }
}

std::string encode_deformation_map(const DeformationMap& map) {
    validate(map);
    const std::uint32_t w = map.front.width, h = map.front.height;
    const float framing[4] = {map.framing.x_min, map.framing.x_max, map.framing.z_min, map.framing.z_max};
    const std::uint32_t size[2] = {w, h};
    ContainerWriter out(kMapMagic, kMapVersion);
    out.add_f32("framing", 1, 4, framing);
    out.add_u32("size", 1, 2, size);
    out.add_f32("front", w * h, 3, flatten(map.front));
    out.add_u8("front_mask", w * h, 1, map.front.mask);
    out.add_f32("back", w * h, 3, flatten(map.back));
    out.add_u8("back_mask", w * h, 1, map.back.mask);
    return out.finish();
}

DeformationMap decode_deformation_map(std::string bytes) {
    ContainerReader r(std::move(bytes), kMapMagic, kMapVersion);
    const auto framing = r.f32("framing", 1, 4);
    const auto size = r.u32("size", 1, 2);
    const std::uint32_t w = size[0], h = size[1];
    DeformationMap map;
    map.framing = {framing[0], framing[1], framing[2], framing[3]};
    map.front = unflatten(r.f32("front", w * h, 3), r.u8("front_mask", w * h, 1), w, h);
    map.back = unflatten(r.f32("back", w * h, 3), r.u8("back_mask", w * h, 1), w, h);
    validate(map);
    return map;
}

void save_deformation_map(const std::string& path, const DeformationMap& map) {
    write_file_atomic(path, encode_deformation_map(map));
}

DeformationMap load_deformation_map(const std::string& path) {
    return decode_deformation_map(read_file(path));
}

}  // namespace meshsplat
