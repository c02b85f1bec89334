/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/fitting/FaceParams.hpp
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

#ifndef MFE_FITTING_FACEPARAMS_HPP_
#define MFE_FITTING_FACEPARAMS_HPP_

#include "mfe/morphablemodel/MorphableModel.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/shading/spherical_harmonics.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mfe {
namespace fitting {

/// Everything needed to render one face with a given model and texture.
struct FaceParams
{
    morphablemodel::ShapeCoeffs coeffs;
    render::RigidPose pose;
    render::Camera camera;
    shading::SHLighting lighting;

    static FaceParams neutral(const morphablemodel::MorphableModel& model, const render::Camera& camera,
                              double distance);
    bool operator==(const FaceParams& other) const;
};

/**
 * Params files are "key = values" lines; '#' starts a comment. Keys:
 *
 *   shape        k_s reals
 *   expression   k_e reals
 *   rotation     axis-angle (3)
 *   translation  3 reals
 *   focal        1 real
 *   principal    2 reals
 *   image_size   width height
 *   depth_range  near far
 *   light_r, light_g, light_b   9 SH coefficients each
 *
 * Values are written with 17 significant digits. Unknown keys are ignored
 * and reported through \c warnings.
 */
void save_params(const FaceParams& params, const std::filesystem::path& path);
FaceParams load_params(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

std::string format_params(const FaceParams& params);
FaceParams parse_params(const std::string& text, std::vector<std::string>* warnings = nullptr);

} // namespace fitting
} // namespace mfe

#endif /* MFE_FITTING_FACEPARAMS_HPP_ */
