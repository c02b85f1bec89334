/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/rasterizer.cpp
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
#include "mfe/render/Rasterizer.hpp"
#include "mfe/core/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfe {
namespace render {

GBuffer::GBuffer(int w, int h)
    : width(w), height(h), triangle(static_cast<std::size_t>(w) * h, empty),
      barycentric(static_cast<std::size_t>(w) * h, Eigen::Vector3d::Zero()),
      depth(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity())
{
}

Mask GBuffer::mask() const
{
    Mask m(width, height);
    for (std::size_t i = 0; i < triangle.size(); ++i)
        m[i] = triangle[i] != empty ? 1 : 0;
    return m;
}

namespace {

struct TriangleSetup
{
    bool active = false;
    double area = 0.0; // twice the signed screen area
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

TriangleSetup setup_triangle(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                             const Camera& camera, const RasterOptions& options)
{
    TriangleSetup s;
    for (const auto* v : {&a, &b, &c})
    {
        if (!v->allFinite() || v->z() < camera.near || v->z() > camera.far)
            return s;
    }
    s.area = edge_function(a, b, c.x(), c.y());
    if (s.area == 0.0 || (options.cull_back_faces && s.area > 0.0))
        return s;
    const double min_x = std::min({a.x(), b.x(), c.x()});
    const double max_x = std::max({a.x(), b.x(), c.x()});
    const double min_y = std::min({a.y(), b.y(), c.y()});
    const double max_y = std::max({a.y(), b.y(), c.y()});
    const double lim = 1e9;
    s.x0 = std::max(0, static_cast<int>(std::ceil(std::clamp(min_x - 0.5, -lim, lim))));
    s.x1 = std::min(camera.width - 1, static_cast<int>(std::floor(std::clamp(max_x - 0.5, -lim, lim))));
    s.y0 = std::max(0, static_cast<int>(std::ceil(std::clamp(min_y - 0.5, -lim, lim))));
    s.y1 = std::min(camera.height - 1, static_cast<int>(std::floor(std::clamp(max_y - 0.5, -lim, lim))));
    s.active = s.x0 <= s.x1 && s.y0 <= s.y1;
    return s;
}

} // namespace

GBuffer rasterize(const std::vector<Eigen::Vector3d>& screen, const std::vector<Eigen::Vector3i>& triangles,
                  const Camera& camera, const RasterOptions& options)
{
    GBuffer g(camera.width, camera.height);
    std::vector<TriangleSetup> setups(triangles.size());
    for (std::size_t f = 0; f < triangles.size(); ++f)
    {
        const auto& t = triangles[f];
        setups[f] = setup_triangle(screen[t[0]], screen[t[1]], screen[t[2]], camera, options);
    }

    const int tiles = (camera.height + kTileRows - 1) / kTileRows;
    parallel_for(static_cast<std::size_t>(tiles), [&](std::size_t tile) {
        const int row_begin = static_cast<int>(tile) * kTileRows;
        const int row_end = std::min(camera.height, row_begin + kTileRows) - 1;
        for (std::size_t f = 0; f < triangles.size(); ++f)
        {
            const TriangleSetup& s = setups[f];
            if (!s.active || s.y1 < row_begin || s.y0 > row_end)
                continue;
            const auto& t = triangles[f];
            const Eigen::Vector3d& a = screen[t[0]];
            const Eigen::Vector3d& b = screen[t[1]];
            const Eigen::Vector3d& c = screen[t[2]];
            const double sign = s.area < 0.0 ? -1.0 : 1.0;
            for (int y = std::max(s.y0, row_begin); y <= std::min(s.y1, row_end); ++y)
            {
                const double py = y + 0.5;
                for (int x = s.x0; x <= s.x1; ++x)
                {
                    const double px = x + 0.5;
                    const double e0 = edge_function(b, c, px, py);
                    const double e1 = edge_function(c, a, px, py);
                    const double e2 = edge_function(a, b, px, py);
                    if (sign * e0 < 0.0 || sign * e1 < 0.0 || sign * e2 < 0.0)
                        continue;
                    const double q0 = (e0 / s.area) / a.z();
                    const double q1 = (e1 / s.area) / b.z();
                    const double q2 = (e2 / s.area) / c.z();
                    const double sum = q0 + q1 + q2;
                    const double depth = 1.0 / sum;
                    const std::size_t i = g.index(x, y);
                    if (depth < g.depth[i])
                    {
                        g.depth[i] = depth;
                        g.triangle[i] = static_cast<std::int32_t>(f);
                        g.barycentric[i] = Eigen::Vector3d(q0 / sum, q1 / sum, q2 / sum);
                    }
                }
            }
        }
    });
    return g;
}

} // namespace render
} // namespace mfe
