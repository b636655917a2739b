// Copyright Contributors to the meshsplat Project
// SPDX-License-Identifier: Apache-2.0
#include "meshsplat/assets.hpp"
#include "meshsplat/container.hpp"

#include <algorithm>
#include <cmath>

namespace meshsplat {

namespace {
constexpr Magic kTemplateMagic = {'M', 'S', 'P', 'L', 'T', 'P', 'L', '\0'};
constexpr std::uint32_t kTemplateVersion = 1;

std::string vidx(std::size_t i) { return std::to_string(i); }
}  // namespace

const char* label_name(ComponentLabel label) {
    switch (label) {
        case ComponentLabel::body: return "body";
        case ComponentLabel::cloth: return "cloth";
        case ComponentLabel::hair: return "hair";
        case ComponentLabel::shoes: return "shoes";
    }
    return "unknown";
}

SkinWeights make_skin_row(std::vector<std::pair<std::int32_t, double>> entries) {
    // Merge duplicates.
    std::sort(entries.begin(), entries.end());
    std::vector<std::pair<std::int32_t, double>> merged;
    for (const auto& e : entries) {
        if (!merged.empty() && merged.back().first == e.first) {
            merged.back().second += e.second;
        } else {
            merged.push_back(e);
        }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& e) { return !(e.second > 0.0) || e.first < 0; }),
                 merged.end());
    if (merged.empty()) {
        throw ValidationError("skin row has no positive weights");
    }
    std::stable_sort(merged.begin(), merged.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (merged.size() > std::size_t(kMaxInfluences)) {
        merged.resize(kMaxInfluences);
    }
    double total = 0.0;
    for (const auto& e : merged) total += e.second;

    SkinWeights row;
    for (std::size_t k = 0; k < merged.size(); ++k) {
        row.joint[k] = merged[k].first;
        row.weight[k] = float(merged[k].second / total);
    }
    // Fold the float rounding residue into the largest weight.
    const double residue = 1.0 - row.sum();
    row.weight[0] = float(double(row.weight[0]) + residue);
    return row;
}

void validate(const RiggedTemplate& tpl) {
    const std::size_t nv = tpl.vertices.size();
    const std::size_t nj = tpl.joints.size();
    if (nv == 0) throw ValidationError("template has no vertices");
    if (nj == 0) throw ValidationError("template has no joints");
    for (std::size_t i = 0; i < nv; ++i) {
        if (!tpl.vertices[i].allFinite()) throw ValidationError("non-finite vertex " + vidx(i), {i});
    }
    for (std::size_t f = 0; f < tpl.faces.size(); ++f) {
        const auto& face = tpl.faces[f];
        for (auto v : face) {
            if (v >= nv) {
                throw ValidationError("face " + vidx(f) + " references vertex " + vidx(v) +
                                          " >= vertex count " + vidx(nv),
                                      {f});
            }
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            throw ValidationError("face " + vidx(f) + " repeats a vertex", {f});
        }
    }
    if (tpl.joints[0].parent != -1) throw ValidationError("joint 0 must be the root (parent -1)");
    for (std::size_t j = 0; j < nj; ++j) {
        const auto& joint = tpl.joints[j];
        if (j > 0 && (joint.parent < 0 || std::size_t(joint.parent) >= j)) {
            throw ValidationError("joint " + vidx(j) +
                                      " must have a parent preceding it (single root, acyclic)",
                                  {j});
        }
        if (std::abs(joint.rest_rotation.cast<double>().norm() - 1.0) > 1e-5 ||
            !joint.rest_translation.allFinite()) {
            throw ValidationError("joint " + vidx(j) + " rest transform is not rigid", {j});
        }
    }
    if (tpl.skin.size() != nv) throw ValidationError("skin weight count != vertex count");
    for (std::size_t i = 0; i < nv; ++i) {
        const auto& row = tpl.skin[i];
        if (row.count() == 0) throw ValidationError("vertex " + vidx(i) + " has no skin weights", {i});
        for (int k = 0; k < kMaxInfluences; ++k) {
            if (row.joint[k] < 0) continue;
            if (std::size_t(row.joint[k]) >= nj) {
                throw ValidationError("vertex " + vidx(i) + " weights invalid joint", {i});
            }
            if (!(row.weight[k] >= 0.0f && row.weight[k] <= 1.0f)) {
                throw ValidationError("vertex " + vidx(i) + " weight outside [0,1]", {i});
            }
            for (int l = k + 1; l < kMaxInfluences; ++l) {
                if (row.joint[l] == row.joint[k]) {
                    throw ValidationError("vertex " + vidx(i) + " repeats a joint", {i});
                }
            }
        }
        if (std::abs(row.sum() - 1.0) > 1e-6) {
            throw ValidationError("vertex " + vidx(i) + " skin weights sum to " +
                                      std::to_string(row.sum()) + ", expected 1",
                                  {i});
        }
    }
    if (tpl.labels.size() != nv) throw ValidationError("label count != vertex count");
    if (tpl.segmentation_colors.size() != nv) throw ValidationError("color count != vertex count");
    for (std::size_t i = 0; i < nv; ++i) {
        const auto& c = tpl.segmentation_colors[i];
        if (!(c.minCoeff() >= 0.0f && c.maxCoeff() <= 1.0f)) {
            throw ValidationError("segmentation color of vertex " + vidx(i) + " outside [0,1]", {i});
        }
        if (std::uint8_t(tpl.labels[i]) > std::uint8_t(ComponentLabel::shoes)) {
            throw ValidationError("unknown component label at vertex " + vidx(i), {i});
        }
    }
    if (tpl.expression_basis.size() != std::size_t(tpl.expression_count) * nv * 3) {
        throw ValidationError("expression basis size != expression_count x vertices x 3");
    }
    if (tpl.cloth_mask.size() != nv) throw ValidationError("cloth mask count != vertex count");
    for (std::size_t i = 0; i < nv; ++i) {
        const bool cloth = tpl.labels[i] == ComponentLabel::cloth;
        if ((tpl.cloth_mask[i] != 0) != cloth || tpl.cloth_mask[i] > 1) {
            throw ValidationError("cloth mask of vertex " + vidx(i) + " disagrees with its label", {i});
        }
    }
}

std::string encode_template(const RiggedTemplate& tpl) {
    validate(tpl);
    const auto nv = std::uint32_t(tpl.vertices.size());
    const auto nf = std::uint32_t(tpl.faces.size());
    const auto nj = std::uint32_t(tpl.joints.size());

    std::vector<float> verts(nv * 3), colors(nv * 3), rest(nj * 7), skin_w(nv * kMaxInfluences);
    std::vector<std::uint32_t> faces(nf * 3);
    std::vector<std::int32_t> parents(nj), skin_j(nv * kMaxInfluences);
    std::vector<std::uint8_t> labels(nv);
    for (std::uint32_t i = 0; i < nv; ++i) {
        for (int a = 0; a < 3; ++a) {
            verts[i * 3 + a] = tpl.vertices[i][a];
            colors[i * 3 + a] = tpl.segmentation_colors[i][a];
        }
        for (int k = 0; k < kMaxInfluences; ++k) {
            skin_j[i * kMaxInfluences + k] = tpl.skin[i].joint[k];
            skin_w[i * kMaxInfluences + k] = tpl.skin[i].weight[k];
        }
        labels[i] = std::uint8_t(tpl.labels[i]);
    }
    for (std::uint32_t f = 0; f < nf; ++f) {
        for (int a = 0; a < 3; ++a) faces[f * 3 + a] = tpl.faces[f][a];
    }
    for (std::uint32_t j = 0; j < nj; ++j) {
        parents[j] = tpl.joints[j].parent;
        for (int a = 0; a < 4; ++a) rest[j * 7 + a] = tpl.joints[j].rest_rotation[a];
        for (int a = 0; a < 3; ++a) rest[j * 7 + 4 + a] = tpl.joints[j].rest_translation[a];
    }

    ContainerWriter w(kTemplateMagic, kTemplateVersion);
    w.add_f32("vertices", nv, 3, verts);
    w.add_u32("faces", nf, 3, faces);
    w.add_i32("joint_parent", nj, 1, parents);
    w.add_f32("joint_rest", nj, 7, rest);
    w.add_i32("skin_joint", nv, kMaxInfluences, skin_j);
    w.add_f32("skin_weight", nv, kMaxInfluences, skin_w);
    w.add_u8("labels", nv, 1, labels);
    w.add_f32("seg_colors", nv, 3, colors);
    w.add_scalar_u32("expr_count", tpl.expression_count);
    w.add_f32("expr_basis", tpl.expression_count * nv, 3, tpl.expression_basis);
    w.add_u8("cloth_mask", nv, 1, tpl.cloth_mask);
    return w.finish();
}

RiggedTemplate decode_template(std::string bytes) {
    ContainerReader r(std::move(bytes), kTemplateMagic, kTemplateVersion);
    RiggedTemplate tpl;
    const auto verts = r.f32("vertices", 0, 3);
    const auto nv = std::uint32_t(verts.size() / 3);
    const auto faces = r.u32("faces", 0, 3);
    const auto parents = r.i32("joint_parent", 0, 1);
    const auto nj = std::uint32_t(parents.size());
    const auto rest = r.f32("joint_rest", nj, 7);
    const auto skin_j = r.i32("skin_joint", nv, kMaxInfluences);
    const auto skin_w = r.f32("skin_weight", nv, kMaxInfluences);
    const auto labels = r.u8("labels", nv, 1);
    const auto colors = r.f32("seg_colors", nv, 3);
    tpl.expression_count = r.scalar_u32("expr_count");
    tpl.expression_basis = r.f32("expr_basis", tpl.expression_count * nv, 3);
    tpl.cloth_mask = r.u8("cloth_mask", nv, 1);

    tpl.vertices.resize(nv);
    tpl.segmentation_colors.resize(nv);
    tpl.skin.resize(nv);
    tpl.labels.resize(nv);
    for (std::uint32_t i = 0; i < nv; ++i) {
        tpl.vertices[i] = Vec3f(verts[i * 3], verts[i * 3 + 1], verts[i * 3 + 2]);
        tpl.segmentation_colors[i] = Vec3f(colors[i * 3], colors[i * 3 + 1], colors[i * 3 + 2]);
        for (int k = 0; k < kMaxInfluences; ++k) {
            tpl.skin[i].joint[k] = skin_j[i * kMaxInfluences + k];
            tpl.skin[i].weight[k] = skin_w[i * kMaxInfluences + k];
        }
        tpl.labels[i] = ComponentLabel(labels[i]);
    }
    tpl.faces.resize(faces.size() / 3);
    for (std::size_t f = 0; f < tpl.faces.size(); ++f) {
        tpl.faces[f] = {faces[f * 3], faces[f * 3 + 1], faces[f * 3 + 2]};
    }
    tpl.joints.resize(nj);
    for (std::uint32_t j = 0; j < nj; ++j) {
        tpl.joints[j].parent = parents[j];
        tpl.joints[j].rest_rotation = Vec4f(rest[j * 7], rest[j * 7 + 1], rest[j * 7 + 2], rest[j * 7 + 3]);
        tpl.joints[j].rest_translation = Vec3f(rest[j * 7 + 4], rest[j * 7 + 5], rest[j * 7 + 6]);
    }
    validate(tpl);
    return tpl;
}

void save_template(const std::string& path, const RiggedTemplate& tpl) {
    write_file_atomic(path, encode_template(tpl));
}

RiggedTemplate load_template(const std::string& path) { return decode_template(read_file(path)); }

}  // namespace meshsplat
