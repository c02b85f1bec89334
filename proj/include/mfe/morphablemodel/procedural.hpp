/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/morphablemodel/procedural.hpp
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

#ifndef MFE_MORPHABLEMODEL_PROCEDURAL_HPP_
#define MFE_MORPHABLEMODEL_PROCEDURAL_HPP_

#include "mfe/core/Mesh.hpp"
#include "mfe/morphablemodel/MorphableModel.hpp"

#include <cstdint>
#include <vector>

namespace mfe {
namespace morphablemodel {

/**
 * Procedural ellipsoid head used as the default model.
 *
 * The surface is a (rows x cols) grid over elevation [-60, 60] degrees and
 * azimuth [-110, 110] degrees of an ellipsoid, with a nose, brows, eye
 * sockets and lips added as normal displacements. Model frame: x right,
 * y down, the face looks towards -z. uv is the normalised (azimuth,
 * elevation), so u = 0.5 is the symmetry plane and v grows upwards.
 * The grid triangulation is mirror-symmetric about x = 0.
 */
struct HeadTemplate
{
    Mesh mesh;
    int rows = 0;
    int cols = 0;
    std::vector<int> mouth_loop;
    std::vector<int> landmarks; ///< sparse fitting landmarks (eyes, nose, mouth, jaw)
};

struct HeadShapeParams
{
    double width = 0.8;  ///< ellipsoid semi-axis along x
    double height = 1.0; ///< along y
    double depth = 0.9;  ///< along z
    double nose = 0.16;
    double nose_width = 1.0;
    double brow = 0.04;
    double eyes = 0.05;
    double cheeks = 0.0;
    double chin = 0.0;
    double mouth_open = 0.0; ///< lip separation; 0 closes the mouth
    double smile = 0.0;
    double brow_raise = 0.0;
    double jaw_drop = 0.0;
    double puff = 0.0;
    std::vector<double> bumps; ///< amplitudes of symmetric low-frequency bumps
};

inline constexpr int kHeadRows = 41;
inline constexpr int kHeadCols = 61;

HeadTemplate make_head_template();

/// Vertex positions for the given shape parameters on the template grid.
std::vector<Eigen::Vector3d> head_vertices(const HeadShapeParams& params);

struct TrainingSet
{
    std::vector<Mesh> samples;
    std::vector<SampleLabel> labels;
    std::vector<int> mouth_loop;
};

/**
 * Random identities (neutral) followed by one expressive variant per
 * identity. Deterministic in \c seed.
 */
TrainingSet make_training_set(std::uint64_t seed, int num_identities = 48);

/// Builds the default procedural model. Deterministic in \c seed.
MorphableModel make_default_model(int num_shape_components = 32, int num_expression_components = 32,
                                  std::uint64_t seed = 7, int num_identities = 48);

} // namespace morphablemodel
} // namespace mfe

#endif /* MFE_MORPHABLEMODEL_PROCEDURAL_HPP_ */
