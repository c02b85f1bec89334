/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/shading/render.hpp
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

#ifndef MFE_SHADING_RENDER_HPP_
#define MFE_SHADING_RENDER_HPP_

#include "mfe/core/Image.hpp"
#include "mfe/core/Mesh.hpp"
#include "mfe/morphablemodel/MorphableModel.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/render/Rasterizer.hpp"
#include "mfe/shading/spherical_harmonics.hpp"

#include "Eigen/Core"

#include <vector>

namespace mfe {
namespace shading {

/**
 * Everything produced by one forward render, kept so the gradient code can
 * walk the same path backwards.
 */
struct Frame
{
    // geometry
    std::vector<Eigen::Vector3d> vertices;       ///< model frame
    std::vector<Eigen::Vector3d> normals;        ///< model frame, unit
    std::vector<Eigen::Vector3d> normal_sums;    ///< unnormalised area-weighted sums
    std::vector<bool> degenerate_normal;
    std::vector<Eigen::Vector3d> light_normals;  ///< lighting frame
    std::vector<Eigen::Vector3d> vertex_irradiance;
    render::Projection projection;
    render::GBuffer gbuffer;

    // per-pixel, RGB
    Image albedo;
    Image irradiance;
    Image product; ///< albedo * irradiance before clamping
    Image image;   ///< clamped to [0, 1]
    Mask mask;
};

/**
 * Two-pass render: an albedo pass sampling \c texture and an illumination
 * pass interpolating per-vertex SH irradiance, both over one G-buffer,
 * multiplied per pixel and clamped to [0, 1].
 */
Frame render_illuminated(const morphablemodel::MorphableModel& model, const morphablemodel::ShapeCoeffs& coeffs,
                         const render::RigidPose& pose, const render::Camera& camera, const Image& texture,
                         const SHLighting& lighting);

/// Same, for an explicit mesh (triangulation and uv taken from \c mesh).
Frame render_illuminated(const Mesh& mesh, const render::RigidPose& pose, const render::Camera& camera,
                         const Image& texture, const SHLighting& lighting);

} // namespace shading
} // namespace mfe

#endif /* MFE_SHADING_RENDER_HPP_ */
