/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/texrecover/texrecover.hpp
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

#ifndef MFE_TEXRECOVER_TEXRECOVER_HPP_
#define MFE_TEXRECOVER_TEXRECOVER_HPP_

#include "mfe/core/Image.hpp"
#include "mfe/fitting/FaceParams.hpp"
#include "mfe/morphablemodel/MorphableModel.hpp"

#include <optional>
#include <vector>

namespace mfe {
namespace texrecover {

struct View
{
    Image image;
    fitting::FaceParams params;
    std::optional<Mask> mask; ///< restricts the pixels used (e.g. the face mask)
};

struct RecoverOptions
{
    double tv_weight = 1e-4;       ///< times the mean Charbonnier TV over texels
    double front_threshold = 0.2;  ///< dot(normal, direction to camera)
    int iterations = 60;
    double learning_rate = 0.01;
    bool backprojection_init = true;
};

struct RecoveredTexture
{
    Image texture;
    Image validity; ///< single channel, in [0, 1]
    std::vector<double> loss_trace;

    std::size_t num_valid() const;
};

/**
 * Optimises the texels of a UV texture so the illuminated renders match the
 * views. The loss is the sum over views of the masked photometric loss plus
 * tv_weight times the mean Charbonnier total variation. Only pixels whose
 * interpolated normal faces the camera (dot > front_threshold) contribute.
 * Validity is the sum of bilinear footprint weights over those pixels,
 * saturated at 1. Texels start at the irradiance-corrected back-projection.
 * Steps that increase the loss are rejected (learning rate halved), so the
 * loss trace is non-increasing.
 *
 * Throws VisibilityError when no texel is observed.
 */
RecoveredTexture recover(const std::vector<View>& views, const morphablemodel::MorphableModel& model, int texture_size,
                         const RecoverOptions& options = {});

/// Validity alone (no optimisation). Monotone in the set of views.
Image accumulate_validity(const std::vector<View>& views, const morphablemodel::MorphableModel& model, int texture_size,
                          double front_threshold = 0.2);

/**
 * Harmonic fill of texels with zero validity: invalid texels start from a
 * breadth-first dilation of their valid neighbours and are then relaxed
 * towards the mean of their 4-neighbours (successive over-relaxation) until
 * the largest change drops below \c tolerance. Valid texels are untouched.
 * Throws VisibilityError when no texel is valid.
 */
Image inpaint_invalid(const RecoveredTexture& texture, int max_iterations = 20000, double tolerance = 1e-4);

/// Render of \c texture with new lighting.
Image relight(const Image& texture, const morphablemodel::MorphableModel& model,
              const morphablemodel::ShapeCoeffs& coeffs, const render::RigidPose& pose, const render::Camera& camera,
              const shading::SHLighting& lighting);

/**
 * Texels whose centre lies on the front half of the mean face (interpolated
 * model-frame normal has z < 0). Single channel, 0/1.
 */
Mask front_hemisphere_texels(const morphablemodel::MorphableModel& model, int texture_size);

/// Fraction of the texels set in \c region whose validity is positive.
double validity_coverage(const Image& validity, const Mask& region);

} // namespace texrecover
} // namespace mfe

#endif /* MFE_TEXRECOVER_TEXRECOVER_HPP_ */
