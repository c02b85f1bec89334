/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/render/Rasterizer.hpp
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

#ifndef MFE_RENDER_RASTERIZER_HPP_
#define MFE_RENDER_RASTERIZER_HPP_

#include "mfe/core/Image.hpp"
#include "mfe/render/Camera.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <vector>

namespace mfe {
namespace render {

/**
 * Per-pixel rasterisation result. Barycentrics are perspective-correct and
 * refer to the vertices of \c triangle in index order.
 */
struct GBuffer
{
    static constexpr std::int32_t empty = -1;

    int width = 0;
    int height = 0;
    std::vector<std::int32_t> triangle;
    std::vector<Eigen::Vector3d> barycentric;
    std::vector<double> depth;

    GBuffer() = default;
    GBuffer(int w, int h);

    std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width + x; }
    bool covered(std::size_t i) const noexcept { return triangle[i] != empty; }
    Mask mask() const;
};

struct RasterOptions
{
    bool cull_back_faces = true;
};

/**
 * Signed edge function of p against the directed edge a->b in pixel
 * coordinates: (b - a) x (p - a). Shared by the rasteriser and the gradient
 * code so that both see identical coverage.
 */
inline double edge_function(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double px, double py) noexcept
{
    return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

/**
 * Z-buffered rasterisation of screen-space vertices (x, y, camera z).
 *
 * A pixel belongs to the triangle with the smallest perspective-correct depth
 * among those whose projection contains the pixel centre, edges included.
 * Equal depths go to the lower triangle id. Triangles that are back-facing
 * (clockwise as seen by the viewer), have zero area, or have a vertex outside
 * [near, far] are skipped.
 */
GBuffer rasterize(const std::vector<Eigen::Vector3d>& screen, const std::vector<Eigen::Vector3i>& triangles,
                  const Camera& camera, const RasterOptions& options = {});

/// True when the triangle faces the viewer (counter-clockwise on screen).
inline bool is_front_facing(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) noexcept
{
    return edge_function(a, b, c.x(), c.y()) < 0.0;
}

} // namespace render
} // namespace mfe

#endif /* MFE_RENDER_RASTERIZER_HPP_ */
