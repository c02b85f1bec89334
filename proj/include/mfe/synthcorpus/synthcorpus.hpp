/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/synthcorpus/synthcorpus.hpp
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

#ifndef MFE_SYNTHCORPUS_SYNTHCORPUS_HPP_
#define MFE_SYNTHCORPUS_SYNTHCORPUS_HPP_

#include "mfe/core/Image.hpp"
#include "mfe/fitting/FaceParams.hpp"
#include "mfe/fitting/fitting.hpp"
#include "mfe/morphablemodel/MorphableModel.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfe {
namespace synthcorpus {

enum class LightingMode
{
    constant,
    random_sh
};

struct Range
{
    double min = 0.0;
    double max = 0.0;
};

/**
 * Describes a family of faces to sample. Angles in degrees; coefficient
 * ranges are in units of each component's sigma.
 */
struct SampleSpec
{
    std::uint64_t seed = 1;
    int count = 1;
    Range yaw{-30.0, 30.0};
    Range pitch{-10.0, 10.0};
    Range roll{-5.0, 5.0};
    double coefficient_range = 2.0; ///< |p_i| <= range * sigma_i (truncation)
    double coefficient_scale = 1.0; ///< std of p_i in units of sigma_i
    double distance = 4.0;          ///< translation z
    double translation_jitter = 0.0;
    LightingMode lighting = LightingMode::random_sh;
    double dc_floor = 2.8;          ///< lower bound of the DC coefficient
    double dc_spread = 0.4;
    double sh_stddev = 0.25;        ///< std of the higher bands
    int image_size = 128;
    double focal = 400.0;
    int texture_size = 256;
    double texture_detail = 1.0;    ///< amplitude of the procedural noise

    /// Throws ParseError on malformed ranges or count < 1.
    void validate() const;
};

/// "key = value" text; ranges are written "min max".
SampleSpec parse_sample_spec(const std::string& text);
SampleSpec load_sample_spec(const std::filesystem::path& path);
std::string format_sample_spec(const SampleSpec& spec);

/// Per-item seed derived from the SampleSpec seed (splitmix64).
std::uint64_t item_seed(std::uint64_t seed, int index);

/// Deterministic list of FaceParams following \c spec.
std::vector<fitting::FaceParams> sample_params(const SampleSpec& spec, const morphablemodel::MorphableModel& model);

struct TextureStyle
{
    double detail = 1.0;
};

/**
 * Procedural albedo in uv space: multi-octave value noise over a skin-tone
 * palette with darker lips, brows and eyes placed at the head template's uv
 * locations. Values are multiples of 1/255 so PNG round trips are exact.
 */
Image procedural_texture(std::uint64_t seed, int size, const TextureStyle& style = {});

/// Flat or vertical-gradient backdrop (chosen by the seed), 8-bit exact values.
Image procedural_backdrop(std::uint64_t seed, int width, int height);

struct GroundTruth
{
    Image image; ///< face rendered over the backdrop, quantised to 8 bits
    Mask mask;   ///< rasteriser coverage
    fitting::FaceParams params;
    Image texture;
    fitting::Landmarks2D landmarks; ///< exact projections of the template landmarks
};

/// Renders the lit, textured face over \c backdrop (or a seeded backdrop when empty).
GroundTruth generate_ground_truth(const fitting::FaceParams& params, const morphablemodel::MorphableModel& model,
                                  const Image& texture, const Image& backdrop);

/**
 * Writes NNNN.png, NNNN.mask.png, NNNN.params.txt, NNNN.tex.png,
 * NNNN.landmarks.txt and manifest.txt into \c directory.
 */
void write_corpus(const SampleSpec& spec, const morphablemodel::MorphableModel& model,
                  const std::filesystem::path& directory);

/// The template landmark vertices (eyes, nose, mouth corners, jaw).
std::vector<int> default_landmark_vertices();

} // namespace synthcorpus
} // namespace mfe

#endif /* MFE_SYNTHCORPUS_SYNTHCORPUS_HPP_ */
