/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/render.cpp
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
#include "mfe/shading/render.hpp"
#include "mfe/core/Error.hpp"
#include "mfe/core/parallel.hpp"
#include "mfe/render/texture.hpp"

#include "Eigen/Geometry"

#include <algorithm>

namespace mfe {
namespace shading {

Frame render_illuminated(const Mesh& mesh, const render::RigidPose& pose, const render::Camera& camera,
                         const Image& texture, const SHLighting& lighting)
{
    camera.validate();
    if (texture.channels() != 3 || texture.empty())
        throw DimensionError("render: texture must be a non-empty RGB image");
    if (mesh.uv.size() != mesh.vertices.size())
        throw DimensionError("render: mesh needs one uv per vertex");

    Frame frame;
    frame.vertices = mesh.vertices;
    const std::size_t nv = mesh.vertices.size();

    VertexNormals vn = vertex_normals(mesh.vertices, mesh.triangles);
    frame.normals = std::move(vn.normals);
    frame.degenerate_normal = std::move(vn.degenerate);
    frame.normal_sums.assign(nv, Eigen::Vector3d::Zero());
    for (const auto& t : mesh.triangles)
    {
        const Eigen::Vector3d c = (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
        for (int k = 0; k < 3; ++k)
            frame.normal_sums[t[k]] += c;
    }

    const Eigen::Matrix3d r = pose.rotation_matrix();
    frame.light_normals.resize(nv);
    for (std::size_t i = 0; i < nv; ++i)
        frame.light_normals[i] = to_lighting_frame(r * frame.normals[i]);
    frame.vertex_irradiance = illuminate(frame.light_normals, lighting);

    frame.projection = render::project(mesh.vertices, pose, camera);
    frame.gbuffer = render::rasterize(frame.projection.screen, mesh.triangles, camera);

    const int w = camera.width, h = camera.height;
    frame.albedo = Image(w, h, 3);
    frame.irradiance = Image(w, h, 3);
    frame.product = Image(w, h, 3);
    frame.image = Image(w, h, 3);
    frame.mask = frame.gbuffer.mask();

    const auto& g = frame.gbuffer;
    const int tiles = (h + kTileRows - 1) / kTileRows;
    parallel_for(static_cast<std::size_t>(tiles), [&](std::size_t tile) {
        const int y_end = std::min(h, static_cast<int>(tile + 1) * kTileRows);
        for (int y = static_cast<int>(tile) * kTileRows; y < y_end; ++y)
        {
            for (int x = 0; x < w; ++x)
            {
                const std::size_t i = g.index(x, y);
                if (!g.covered(i))
                    continue;
                const auto& t = mesh.triangles[g.triangle[i]];
                const auto& b = g.barycentric[i];
                const Eigen::Vector3d albedo =
                    render::sample_bilinear(texture, render::interpolate_uv(g, i, mesh.triangles, mesh.uv));
                const auto& e0 = frame.vertex_irradiance[t[0]];
                const Eigen::Vector3d irr =
                    e0 + b(1) * (frame.vertex_irradiance[t[1]] - e0) + b(2) * (frame.vertex_irradiance[t[2]] - e0);
                for (int c = 0; c < 3; ++c)
                {
                    const double p = albedo(c) * irr(c);
                    frame.albedo(x, y, c) = albedo(c);
                    frame.irradiance(x, y, c) = irr(c);
                    frame.product(x, y, c) = p;
                    frame.image(x, y, c) = std::clamp(p, 0.0, 1.0);
                }
            }
        }
    });
    return frame;
}

Frame render_illuminated(const morphablemodel::MorphableModel& model, const morphablemodel::ShapeCoeffs& coeffs,
                         const render::RigidPose& pose, const render::Camera& camera, const Image& texture,
                         const SHLighting& lighting)
{
    return render_illuminated(model.synthesize(coeffs), pose, camera, texture, lighting);
}

} // namespace shading
} // namespace mfe
