/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/experiments/ablation.hpp
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

#ifndef MFE_EXPERIMENTS_ABLATION_HPP_
#define MFE_EXPERIMENTS_ABLATION_HPP_

#include "mfe/fitting/fitting.hpp"
#include "mfe/morphablemodel/MorphableModel.hpp"
#include "mfe/shading/spherical_harmonics.hpp"
#include "mfe/texrecover/texrecover.hpp"

#include <cstdint>
#include <string>

namespace mfe {
namespace experiments {

/// Image and texture sizes of the recovery experiments.
struct RecoverySetup
{
    int image_size = 512;
    double focal = 900.0;
    double distance = 4.0;
    int texture_size = 256;
};

/// Ground-truth view of the model's mean face at the given yaw (degrees).
texrecover::View synthetic_view(const morphablemodel::MorphableModel& model, const Image& texture, double yaw_degrees,
                                const shading::SHLighting& lighting, const RecoverySetup& setup = {});

/// Lighting from the upper left, clearly non-uniform but unclamped on the procedural textures.
shading::SHLighting side_lighting();

/// Validity coverage of the front hemisphere: frontal view versus -45/0/+45 yaw.
struct RotationReport
{
    double frontal_coverage = 0.0;
    double three_view_coverage = 0.0;
    bool passed = false;
    std::string text() const;
};
RotationReport rotation_ablation(const morphablemodel::MorphableModel& model, std::uint64_t seed,
                                 const RecoverySetup& setup = {});

/**
 * Random composites of open-mouthed faces: counts pixels that differ from the
 * background outside the effective mask or inside the mouth, and the mouth
 * pixels that would show face content without the mouth mask.
 */
struct MouthReport
{
    int composites = 0;
    int with_open_mouth = 0;
    long violations_outside = 0;
    long violations_mouth = 0;
    long face_pixels_in_mouth_without_removal = 0;
    bool passed = false;
    std::string text() const;
};
MouthReport mouth_ablation(const morphablemodel::MorphableModel& model, std::uint64_t seed, int count = 50);

/**
 * Texture recovery of a side-lit frontal view with the true lighting and with
 * lighting forced to constant unit; compares albedo L1 on the visible texels.
 */
struct RelightReport
{
    double l1_known_lighting = 0.0;
    double l1_constant_lighting = 0.0;
    double ratio = 0.0;
    bool passed = false;
    std::string text() const;
};
RelightReport relight_ablation(const morphablemodel::MorphableModel& model, std::uint64_t seed,
                               const RecoverySetup& setup = {});

/**
 * One synthetic fitting round trip: a corpus-style target at image_size, an
 * init with the rotation perturbed by up to pose_perturbation_deg per Euler
 * angle and every coefficient by up to coefficient_perturbation sigma, then
 * fit() with landmarks. PSNR is measured over the target mask on the fitted
 * face composited over the target's backdrop.
 */
struct FitRoundTripSetup
{
    int image_size = 128;
    double focal = 400.0;
    double pose_perturbation_deg = 5.0;
    double coefficient_perturbation = 0.5;
    double min_psnr = 35.0;
    double max_rotation_error_deg = 2.0;
    int max_iterations = 500;
    fitting::FitOptions options;
};

struct FitTrial
{
    double initial_psnr = 0.0;
    double psnr = 0.0;
    double initial_rotation_error_deg = 0.0;
    double rotation_error_deg = 0.0;
    double translation_error = 0.0; ///< relative to the target depth
    int iterations = 0;
    double seconds = 0.0;
    bool passed = false;
    std::string text() const;
};
FitTrial fit_round_trip(const morphablemodel::MorphableModel& model, std::uint64_t seed, int index,
                        const FitRoundTripSetup& setup = {});

} // namespace experiments
} // namespace mfe

#endif /* MFE_EXPERIMENTS_ABLATION_HPP_ */
