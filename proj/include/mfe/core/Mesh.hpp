/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/core/Mesh.hpp
 *
 * Copyright 2026 The mfe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MFE_CORE_MESH_HPP_
#define MFE_CORE_MESH_HPP_

#include "Eigen/Core"

#include <filesystem>
#include <vector>

namespace mfe {

/**
 * A triangle mesh with one uv coordinate per vertex.
 *
 * Triangles index vertices 0-based and are counter-clockwise when seen from
 * the front, i.e. (v1 - v0) x (v2 - v0) points outwards. uv lives in [0,1]^2
 * with v = 0 at the bottom of the texture image.
 */
struct Mesh
{
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3i> triangles;
    std::vector<Eigen::Vector2d> uv;

    int num_vertices() const noexcept { return static_cast<int>(vertices.size()); }
    int num_triangles() const noexcept { return static_cast<int>(triangles.size()); }
};

/**
 * Checks the index and uv invariants. Throws TopologyError describing the
 * first violation.
 */
void validate(const Mesh& mesh);

/**
 * Per-vertex normals: the area-weighted average of incident face normals,
 * normalised. Vertices that only touch zero-area faces (or no face at all)
 * get (0, 0, 1) and are flagged in \c degenerate.
 */
struct VertexNormals
{
    std::vector<Eigen::Vector3d> normals;
    std::vector<bool> degenerate;
    bool any_degenerate = false;
};

VertexNormals vertex_normals(const Mesh& mesh);
VertexNormals vertex_normals(const std::vector<Eigen::Vector3d>& vertices,
                             const std::vector<Eigen::Vector3i>& triangles);

/// Wavefront OBJ writer: v, vt and f v/vt records, 1-based indices.
void write_obj(const Mesh& mesh, const std::filesystem::path& path);

/**
 * Reads v, vt and f records. Faces may be "v", "v/vt" or "v/vt/vn"; polygons
 * are fan-triangulated. Every vertex must resolve to exactly one uv.
 */
Mesh read_obj(const std::filesystem::path& path);

} // namespace mfe

#endif /* MFE_CORE_MESH_HPP_ */
