/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/render/texture.hpp
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

#ifndef MFE_RENDER_TEXTURE_HPP_
#define MFE_RENDER_TEXTURE_HPP_

#include "mfe/core/Image.hpp"
#include "mfe/render/Rasterizer.hpp"

#include "Eigen/Core"

#include <array>
#include <vector>

namespace mfe {
namespace render {

/**
 * The four texels and weights of a bilinear lookup with clamp-to-edge
 * addressing, plus the derivatives of the weights with respect to (u, v).
 * The texture row for v is (1 - v) * height - 0.5, so v = 0 is the bottom row.
 */
struct BilinearFootprint
{
    std::array<int, 4> x{};
    std::array<int, 4> y{};
    std::array<double, 4> weight{};
    std::array<double, 4> d_weight_du{};
    std::array<double, 4> d_weight_dv{};
};

BilinearFootprint bilinear_footprint(int width, int height, const Eigen::Vector2d& uv) noexcept;

/// Bilinear sample of all channels of \c texture at uv.
Eigen::Vector3d sample_bilinear(const Image& texture, const Eigen::Vector2d& uv);

/// uv interpolated with the perspective-correct barycentrics of pixel i.
Eigen::Vector2d interpolate_uv(const GBuffer& gbuffer, std::size_t i, const std::vector<Eigen::Vector3i>& triangles,
                               const std::vector<Eigen::Vector2d>& uv);

struct TextureSample
{
    Image image;
    Mask mask;
};

/**
 * Screen-space texture lookup: covered pixels get the bilinear texture value
 * at their interpolated uv, uncovered pixels are 0. Texture must be RGB.
 */
TextureSample sample_texture(const GBuffer& gbuffer, const std::vector<Eigen::Vector3i>& triangles,
                             const std::vector<Eigen::Vector2d>& uv, const Image& texture);

} // namespace render
} // namespace mfe

#endif /* MFE_RENDER_TEXTURE_HPP_ */
