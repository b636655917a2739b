// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/assets.hpp"

#include <iomanip>
#include <sstream>

namespace meshsplat {

TriangleMesh load_obj(const std::string& path) {
    std::istringstream in(read_file(path));
    TriangleMesh mesh;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3f v;
            if (!(ls >> v[0] >> v[1] >> v[2])) {
                throw IoError("malformed vertex on line " + std::to_string(line_no), path);
            }
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<std::uint32_t> poly;
            std::string tok;
            while (ls >> tok) {
                // Accept "i", "i/t", "i//n", "i/t/n"; negative indices are relative.
                const long idx = std::stol(tok.substr(0, tok.find('/')));
                const long resolved = idx < 0 ? long(mesh.vertices.size()) + idx : idx - 1;
                if (resolved < 0) {
                    throw IoError("bad face index on line " + std::to_string(line_no), path);
                }
                poly.push_back(std::uint32_t(resolved));
            }
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
                mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
            }
        }
    }
    for (const auto& f : mesh.faces) {
        for (auto v : f) {
            if (v >= mesh.vertices.size()) throw IoError("face index out of range", path);
        }
    }
    return mesh;
}

void save_obj(const std::string& path, const TriangleMesh& mesh) {
    std::ostringstream out;
    out << std::setprecision(9);
    for (const auto& v : mesh.vertices) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    write_file_atomic(path, out.str());
}

}  // namespace meshsplat
