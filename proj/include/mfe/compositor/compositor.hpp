/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/compositor/compositor.hpp
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

#ifndef MFE_COMPOSITOR_COMPOSITOR_HPP_
#define MFE_COMPOSITOR_COMPOSITOR_HPP_

#include "mfe/core/Image.hpp"
#include "mfe/render/Camera.hpp"

#include "Eigen/Core"

#include <vector>

namespace mfe {
namespace compositor {

struct MouthMask
{
    Mask mask;
    bool behind_camera = false;     ///< a loop vertex is behind the camera; mask left empty
    bool degenerate = false;        ///< polygon area below the threshold; mask left empty
    bool self_intersecting = false; ///< filled with the convex hull instead
};

struct MouthMaskOptions
{
    double min_area = 1.0; ///< px^2; smaller polygons count as a closed mouth
};

/**
 * Scan-line fill of the projected mouth loop: pixels whose centre lies inside
 * the polygon (even-odd rule) are set. A self-intersecting loop is replaced
 * by its convex hull.
 */
MouthMask mouth_mask(const std::vector<Eigen::Vector3d>& screen, const std::vector<int>& mouth_loop,
                     const render::Camera& camera, const MouthMaskOptions& options = {});

/// Polygon fill helper, exposed for tests and other callers.
Mask fill_polygon(const std::vector<Eigen::Vector2d>& polygon, int width, int height);

bool polygon_self_intersects(const std::vector<Eigen::Vector2d>& polygon);
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> points);
double polygon_area(const std::vector<Eigen::Vector2d>& polygon);

/// face_mask AND NOT mouth.
Mask effective_mask(const Mask& face_mask, const Mask& mouth);

/**
 * out = face where the effective mask is set, background elsewhere. With
 * feather_radius r > 0, alpha ramps linearly from 0 at the mask boundary to
 * 1 at r pixels inside it (chamfer distance); pixels outside the effective
 * mask always keep the background. Throws DimensionError on size mismatch.
 */
Image composite(const Image& face, const Mask& face_mask, const Mask& mouth, const Image& background,
                int feather_radius = 0);

} // namespace compositor
} // namespace mfe

#endif /* MFE_COMPOSITOR_COMPOSITOR_HPP_ */
