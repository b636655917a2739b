// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/teacher.hpp"

#include <filesystem>
#include <sstream>

namespace meshsplat {

namespace fs = std::filesystem;

void validate(const TeacherSource& source) {
    if (source.frames.empty()) throw ValidationError("teacher source has no frames");
    const TeacherFrame& ref = source.frames.front();
    for (std::size_t t = 0; t < source.frames.size(); ++t) {
        const TeacherFrame& f = source.frames[t];
        const std::string at = "teacher frame " + std::to_string(t);
        try {
            validate(f.maps);
        } catch (const ValidationError& e) {
            throw ValidationError(at + ": " + e.what(), {t});
        }
        if (f.maps.front.width != ref.maps.front.width || f.maps.front.height != ref.maps.front.height) {
            throw ValidationError(at + ": map resolution differs from frame 0", {t});
        }
        for (const Image* img : {&f.color, &f.normal, &f.alpha}) {
            if (img->width != ref.color.width || img->height != ref.color.height ||
                img->rgb.size() != std::size_t(img->width) * img->height * 3) {
                throw ValidationError(at + ": image resolution differs from frame 0", {t});
            }
        }
    }
}

void export_teacher(const TeacherSource& source, const std::string& dir) {
    validate(source);
    fs::create_directories(dir);
    std::ostringstream manifest;
    manifest << "# frame dmap color normal alpha | " << source.provenance << "\n";
    for (std::size_t t = 0; t < source.frames.size(); ++t) {
        const std::string stem = "frame_" + std::to_string(t);
        const TeacherFrame& f = source.frames[t];
        save_deformation_map((fs::path(dir) / (stem + ".dmap")).string(), f.maps);
        write_image((fs::path(dir) / (stem + "_color.ppm")).string(), f.color);
        write_image((fs::path(dir) / (stem + "_normal.ppm")).string(), f.normal);
        write_image((fs::path(dir) / (stem + "_alpha.ppm")).string(), f.alpha);
        manifest << t << ' ' << stem << ".dmap " << stem << "_color.ppm " << stem << "_normal.ppm " << stem
                 << "_alpha.ppm\n";
    }
    write_file_atomic((fs::path(dir) / "manifest.txt").string(), manifest.str());
}

TeacherSource ingest_teacher(const std::string& dir, const std::string& manifest) {
    const std::string text = read_file((fs::path(dir) / manifest).string());
    TeacherSource src;
    src.kind = TeacherSource::Kind::external;
    src.provenance = "external " + dir;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::size_t frame = 0;
        std::string dmap, color, normal, alpha;
        if (!(ls >> frame >> dmap >> color >> normal >> alpha)) {
            throw ValidationError("manifest line " + std::to_string(lineno) + ": expected 'frame dmap color normal alpha'");
        }
        if (frame != src.frames.size()) {
            throw ValidationError("manifest line " + std::to_string(lineno) + ": frame " + std::to_string(frame) +
                                  " out of order (expected " + std::to_string(src.frames.size()) + ")", {frame});
        }
        TeacherFrame f;
        auto path = [&](const std::string& name) {
            const std::string p = (fs::path(dir) / name).string();
            if (!fs::exists(p)) {
                throw ValidationError("teacher frame " + std::to_string(frame) + ": missing file " + p, {frame});
            }
            return p;
        };
        f.maps = load_deformation_map(path(dmap));
        f.color = read_ppm(path(color));
        f.normal = read_ppm(path(normal));
        f.alpha = read_ppm(path(alpha));
        src.frames.push_back(std::move(f));
    }
    validate(src);
    return src;
}

}  // namespace meshsplat
