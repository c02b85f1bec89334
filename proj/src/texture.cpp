/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/texture.cpp
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
#include "mfe/render/texture.hpp"
#include "mfe/core/Error.hpp"
#include "mfe/core/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace mfe {
namespace render {

BilinearFootprint bilinear_footprint(int width, int height, const Eigen::Vector2d& uv) noexcept
{
    const double tx = uv.x() * width - 0.5;
    const double ty = (1.0 - uv.y()) * height - 0.5;
    const double fx0 = std::floor(tx);
    const double fy0 = std::floor(ty);
    const double fx = tx - fx0;
    const double fy = ty - fy0;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const int xa = std::clamp(x0, 0, width - 1), xb = std::clamp(x0 + 1, 0, width - 1);
    const int ya = std::clamp(y0, 0, height - 1), yb = std::clamp(y0 + 1, 0, height - 1);

    BilinearFootprint fp;
    fp.x = {xa, xb, xa, xb};
    fp.y = {ya, ya, yb, yb};
    fp.weight = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
    const double w = width, h = height;
    fp.d_weight_du = {-(1.0 - fy) * w, (1.0 - fy) * w, -fy * w, fy * w};
    // ty decreases with v
    fp.d_weight_dv = {(1.0 - fx) * h, fx * h, -(1.0 - fx) * h, -fx * h};
    return fp;
}

Eigen::Vector3d sample_bilinear(const Image& texture, const Eigen::Vector2d& uv)
{
    // Nested lerps rather than the four weights: a constant texture then
    // samples to exactly its value.
    const int width = texture.width(), height = texture.height();
    const double tx = uv.x() * width - 0.5;
    const double ty = (1.0 - uv.y()) * height - 0.5;
    const double fx0 = std::floor(tx);
    const double fy0 = std::floor(ty);
    const double fx = tx - fx0;
    const double fy = ty - fy0;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const int xa = std::clamp(x0, 0, width - 1), xb = std::clamp(x0 + 1, 0, width - 1);
    const int ya = std::clamp(y0, 0, height - 1), yb = std::clamp(y0 + 1, 0, height - 1);
    Eigen::Vector3d value;
    for (int c = 0; c < 3; ++c)
    {
        const double top = texture(xa, ya, c) + fx * (texture(xb, ya, c) - texture(xa, ya, c));
        const double bottom = texture(xa, yb, c) + fx * (texture(xb, yb, c) - texture(xa, yb, c));
        value(c) = top + fy * (bottom - top);
    }
    return value;
}

Eigen::Vector2d interpolate_uv(const GBuffer& gbuffer, std::size_t i, const std::vector<Eigen::Vector3i>& triangles,
                               const std::vector<Eigen::Vector2d>& uv)
{
    const auto& t = triangles[gbuffer.triangle[i]];
    const auto& w = gbuffer.barycentric[i];
    // Relative to the first corner so that equal corner values interpolate exactly.
    return uv[t[0]] + w(1) * (uv[t[1]] - uv[t[0]]) + w(2) * (uv[t[2]] - uv[t[0]]);
}

TextureSample sample_texture(const GBuffer& gbuffer, const std::vector<Eigen::Vector3i>& triangles,
                             const std::vector<Eigen::Vector2d>& uv, const Image& texture)
{
    if (texture.channels() != 3)
        throw DimensionError("sample_texture: texture must have 3 channels");
    TextureSample out{Image(gbuffer.width, gbuffer.height, 3), gbuffer.mask()};
    const int tiles = (gbuffer.height + kTileRows - 1) / kTileRows;
    parallel_for(static_cast<std::size_t>(tiles), [&](std::size_t tile) {
        const int y_end = std::min(gbuffer.height, static_cast<int>(tile + 1) * kTileRows);
        for (int y = static_cast<int>(tile) * kTileRows; y < y_end; ++y)
        {
            for (int x = 0; x < gbuffer.width; ++x)
            {
                const std::size_t i = gbuffer.index(x, y);
                if (!gbuffer.covered(i))
                    continue;
                const Eigen::Vector3d value = sample_bilinear(texture, interpolate_uv(gbuffer, i, triangles, uv));
                for (int c = 0; c < 3; ++c)
                    out.image(x, y, c) = value(c);
            }
        }
    });
    return out;
}

} // namespace render
} // namespace mfe
