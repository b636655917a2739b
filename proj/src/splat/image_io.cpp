// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/splat.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace meshsplat {

namespace {

void require_nonempty(const Image& image) {
    if (image.width == 0 || image.height == 0) throw Error(ErrorCode::invalid_argument, "image has zero size");
    if (image.rgb.size() != std::size_t(image.width) * image.height * 3) {
        throw DimensionError("image buffer does not match its size");
    }
}

std::vector<std::uint8_t> to_bytes(const Image& image) {
    std::vector<std::uint8_t> bytes(image.rgb.size());
    for (std::size_t k = 0; k < bytes.size(); ++k) bytes[k] = quantize_unit(image.rgb[k]);
    return bytes;
}

void png_append(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), length);
}

std::string encode_png(const Image& image) {
    const auto bytes = to_bytes(image);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error(ErrorCode::runtime, "png encoder allocation failed");
    png_infop info = png_create_info_struct(png);
    std::string out;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::runtime, "png encoding failed");
    }
    png_set_write_fn(png, &out, png_append, nullptr);
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::uint32_t y = 0; y < image.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(bytes.data() + std::size_t(y) * image.width * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Image from_channels(const RenderTarget& t, const std::vector<double>& src, int stride, double scale, double bias) {
    if (src.empty()) throw Error(ErrorCode::invalid_argument, "render target channel is disabled");
    Image img;
    img.width = t.width;
    img.height = t.height;
    img.rgb.resize(t.pixels() * 3);
    for (std::size_t p = 0; p < t.pixels(); ++p) {
        for (int c = 0; c < 3; ++c) img.rgb[p * 3 + c] = src[p * stride + (stride == 3 ? c : 0)] * scale + bias;
    }
    return img;
}

}  // namespace

std::uint8_t quantize_unit(double v) {
    if (!(v > 0.0)) return 0;
    if (v >= 1.0) return 255;
    return std::uint8_t(std::lround(v * 255.0));
}

Image quantize_8bit(const Image& image) {
    Image out = image;
    for (double& v : out.rgb) v = quantize_unit(v) / 255.0;
    return out;
}

Image color_image(const RenderTarget& t) { return from_channels(t, t.color, 3, 1.0, 0.0); }
Image alpha_image(const RenderTarget& t) { return from_channels(t, t.alpha, 1, 1.0, 0.0); }
Image normal_image(const RenderTarget& t) { return from_channels(t, t.normal, 3, 0.5, 0.5); }

std::string encode_ppm(const Image& image) {
    require_nonempty(image);
    const auto bytes = to_bytes(image);
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return out;
}

Image decode_ppm(const std::string& bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&](const char* what) {
        skip_space();
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw FormatError(std::string("ppm header: expected ") + what, start);
        return std::stoul(bytes.substr(start, pos - start));
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary ppm (P6)", 0);
    pos = 2;
    Image img;
    img.width = std::uint32_t(read_int("width"));
    img.height = std::uint32_t(read_int("height"));
    const auto maxval = read_int("maxval");
    if (maxval != 255) throw FormatError("only 8-bit ppm is supported", pos);
    if (img.width == 0 || img.height == 0) throw FormatError("ppm has zero size", pos);
    ++pos;  // single whitespace before the raster
    const std::size_t n = std::size_t(img.width) * img.height * 3;
    if (bytes.size() < pos + n) throw FormatError("ppm raster truncated", bytes.size());
    img.rgb.resize(n);
    for (std::size_t k = 0; k < n; ++k) img.rgb[k] = static_cast<unsigned char>(bytes[pos + k]) / 255.0;
    return img;
}

ImageFormat image_format_from_path(const std::string& path) {
    std::string ext = path.size() >= 4 ? path.substr(path.size() - 4) : "";
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return ext == ".png" ? ImageFormat::png : ImageFormat::ppm;
}

void write_image(const std::string& path, const Image& image, ImageFormat format) {
    require_nonempty(image);
    write_file_atomic(path, format == ImageFormat::png ? encode_png(image) : encode_ppm(image));
}

Image read_ppm(const std::string& path) { return decode_ppm(read_file(path)); }

}  // namespace meshsplat
