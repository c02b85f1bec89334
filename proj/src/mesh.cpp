/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/mesh.cpp
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
#include "mfe/core/Mesh.hpp"
#include "mfe/core/Error.hpp"

#include "Eigen/Geometry"

#include <cmath>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace mfe {

void validate(const Mesh& mesh)
{
    const int n = mesh.num_vertices();
    if (static_cast<int>(mesh.uv.size()) != n)
    {
        throw TopologyError("mesh has " + std::to_string(mesh.uv.size()) + " uv coordinates for " +
                            std::to_string(n) + " vertices");
    }
    for (int f = 0; f < mesh.num_triangles(); ++f)
    {
        const auto& t = mesh.triangles[f];
        for (int k = 0; k < 3; ++k)
        {
            if (t[k] < 0 || t[k] >= n)
                throw TopologyError("triangle " + std::to_string(f) + " references vertex " + std::to_string(t[k]));
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw TopologyError("triangle " + std::to_string(f) + " repeats a vertex");
    }
    for (int i = 0; i < n; ++i)
    {
        const auto& uv = mesh.uv[i];
        if (!(uv.x() >= 0.0 && uv.x() <= 1.0 && uv.y() >= 0.0 && uv.y() <= 1.0))
            throw TopologyError("uv of vertex " + std::to_string(i) + " outside [0,1]");
    }
}

VertexNormals vertex_normals(const std::vector<Eigen::Vector3d>& vertices,
                             const std::vector<Eigen::Vector3i>& triangles)
{
    std::vector<Eigen::Vector3d> sums(vertices.size(), Eigen::Vector3d::Zero());
    for (const auto& t : triangles)
    {
        // |cross| is twice the area, so summing crosses weights by area.
        const Eigen::Vector3d c = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
        for (int k = 0; k < 3; ++k)
            sums[t[k]] += c;
    }
    VertexNormals result;
    result.normals.resize(vertices.size());
    result.degenerate.assign(vertices.size(), false);
    for (std::size_t i = 0; i < vertices.size(); ++i)
    {
        const double len = sums[i].norm();
        if (len > 0.0 && std::isfinite(len))
        {
            result.normals[i] = sums[i] / len;
        } else
        {
            result.normals[i] = Eigen::Vector3d(0.0, 0.0, 1.0);
            result.degenerate[i] = true;
            result.any_degenerate = true;
        }
    }
    return result;
}

VertexNormals vertex_normals(const Mesh& mesh) { return vertex_normals(mesh.vertices, mesh.triangles); }

void write_obj(const Mesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    for (const auto& v : mesh.vertices)
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& uv : mesh.uv)
        out << "vt " << uv.x() << ' ' << uv.y() << '\n';
    const bool has_uv = !mesh.uv.empty();
    for (const auto& t : mesh.triangles)
    {
        out << 'f';
        for (int k = 0; k < 3; ++k)
        {
            out << ' ' << t[k] + 1;
            if (has_uv)
                out << '/' << t[k] + 1;
        }
        out << '\n';
    }
    if (!out)
        throw FormatError("failed writing " + path.string());
}

namespace {

int resolve_index(long index, std::size_t count, int line)
{
    const long resolved = index < 0 ? static_cast<long>(count) + index : index - 1;
    if (resolved < 0 || resolved >= static_cast<long>(count))
        throw ParseError("index " + std::to_string(index) + " out of range", line);
    return static_cast<int>(resolved);
}

} // namespace

Mesh read_obj(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open " + path.string());

    Mesh mesh;
    std::vector<Eigen::Vector2d> texcoords;
    std::vector<int> uv_of_vertex;
    std::vector<std::pair<int, int>> corner_refs; // (vertex, texcoord) per face corner, resolved at the end
    std::vector<int> corner_lines;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line))
    {
        ++line_number;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#')
            continue;
        if (tag == "v")
        {
            Eigen::Vector3d v;
            if (!(ls >> v.x() >> v.y() >> v.z()))
                throw ParseError("malformed vertex", line_number);
            mesh.vertices.push_back(v);
        } else if (tag == "vt")
        {
            Eigen::Vector2d t;
            if (!(ls >> t.x() >> t.y()))
                throw ParseError("malformed texture coordinate", line_number);
            texcoords.push_back(t);
        } else if (tag == "f")
        {
            std::vector<std::pair<long, long>> corners;
            std::string token;
            while (ls >> token)
            {
                long vi = 0, ti = 0;
                const auto slash = token.find('/');
                try
                {
                    vi = std::stol(token.substr(0, slash));
                    if (slash != std::string::npos)
                    {
                        const auto rest = token.substr(slash + 1);
                        const auto slash2 = rest.find('/');
                        const auto tpart = rest.substr(0, slash2);
                        if (!tpart.empty())
                            ti = std::stol(tpart);
                    }
                } catch (const std::exception&)
                {
                    throw ParseError("malformed face token '" + token + "'", line_number);
                }
                corners.emplace_back(vi, ti);
            }
            if (corners.size() < 3)
                throw ParseError("face with fewer than 3 corners", line_number);
            std::vector<std::pair<int, int>> resolved;
            for (const auto& [vi, ti] : corners)
            {
                const int v = resolve_index(vi, mesh.vertices.size(), line_number);
                const int t = ti == 0 ? -1 : resolve_index(ti, texcoords.size(), line_number);
                resolved.emplace_back(v, t);
            }
            for (std::size_t k = 1; k + 1 < resolved.size(); ++k)
            {
                mesh.triangles.emplace_back(resolved[0].first, resolved[k].first, resolved[k + 1].first);
                for (auto idx : {std::size_t{0}, k, k + 1})
                {
                    corner_refs.push_back(resolved[idx]);
                    corner_lines.push_back(line_number);
                }
            }
        }
    }

    if (!texcoords.empty())
    {
        uv_of_vertex.assign(mesh.vertices.size(), -1);
        for (std::size_t c = 0; c < corner_refs.size(); ++c)
        {
            const auto [v, t] = corner_refs[c];
            if (t < 0)
                throw ParseError("face corner without texture coordinate", corner_lines[c]);
            if (uv_of_vertex[v] >= 0 && texcoords[uv_of_vertex[v]] != texcoords[t])
                throw ParseError("vertex " + std::to_string(v + 1) + " has conflicting texture coordinates",
                                 corner_lines[c]);
            uv_of_vertex[v] = t;
        }
        mesh.uv.resize(mesh.vertices.size(), Eigen::Vector2d::Zero());
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        {
            if (uv_of_vertex[v] >= 0)
                mesh.uv[v] = texcoords[uv_of_vertex[v]];
            else if (texcoords.size() == mesh.vertices.size())
                mesh.uv[v] = texcoords[v];
        }
    }
    return mesh;
}

} // namespace mfe
