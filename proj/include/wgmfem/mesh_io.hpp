#pragma once

// Mesh files are JSON documents:
//   { "dimension": 2, "vertices": [[x, y], ...], "cells": [[i, j, k, ...], ...] }
// Cells are counter-clockwise, 0-based vertex loops. Unknown fields are rejected.

#include "wgmfem/error.hpp"
#include "wgmfem/mesh.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace wgmfem {

inline nlohmann::json mesh_to_json(const PolyMesh& mesh) {
    nlohmann::json j;
    j["dimension"] = mesh.dimension();
    auto& verts = j["vertices"] = nlohmann::json::array();
    for (const auto& p : mesh.vertices()) verts.push_back({p.x(), p.y()});
    j["cells"] = mesh.cells();
    return j;
}

inline PolyMesh mesh_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("mesh: top level must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key != "dimension" && key != "vertices" && key != "cells") throw ParseError("mesh: unknown field '" + key + "'");
    }
    for (const char* key : {"dimension", "vertices", "cells"}) {
        if (!j.contains(key)) throw ParseError(std::string("mesh: missing field '") + key + "'");
    }
    if (!j["dimension"].is_number_integer() || j["dimension"].get<int>() != 2) {
        throw ParseError("mesh: only dimension 2 is supported");
    }
    const auto& jv = j["vertices"];
    if (!jv.is_array()) throw ParseError("mesh: 'vertices' must be an array");
    std::vector<Point> vertices;
    vertices.reserve(jv.size());
    for (std::size_t i = 0; i < jv.size(); ++i) {
        const auto& v = jv[i];
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ParseError("mesh: vertex " + std::to_string(i) + " must be [x, y]");
        }
        vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    const auto& jc = j["cells"];
    if (!jc.is_array()) throw ParseError("mesh: 'cells' must be an array");
    std::vector<std::vector<int>> cells;
    cells.reserve(jc.size());
    for (std::size_t c = 0; c < jc.size(); ++c) {
        const auto& loop = jc[c];
        if (!loop.is_array()) throw ParseError("mesh: cell " + std::to_string(c) + " must be an array of vertex indices");
        std::vector<int> ids;
        for (const auto& id : loop) {
            if (!id.is_number_integer()) throw ParseError("mesh: cell " + std::to_string(c) + ": non-integer vertex index");
            ids.push_back(id.get<int>());
        }
        cells.push_back(std::move(ids));
    }
    try {
        return PolyMesh::from_cells(std::move(vertices), std::move(cells));
    } catch (const MeshInvalid& e) {
        throw ParseError(std::string("mesh: ") + e.what());
    }
}

inline PolyMesh read_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("mesh: cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    try {
        return mesh_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void write_mesh(const PolyMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write mesh to " + path.string());
    out << mesh_to_json(mesh).dump(1) << '\n';
}

} // namespace wgmfem
