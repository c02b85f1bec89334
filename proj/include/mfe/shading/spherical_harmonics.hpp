/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/shading/spherical_harmonics.hpp
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

#ifndef MFE_SHADING_SPHERICAL_HARMONICS_HPP_
#define MFE_SHADING_SPHERICAL_HARMONICS_HPP_

#include "Eigen/Core"

#include <array>
#include <filesystem>
#include <vector>

namespace mfe {
namespace shading {

inline constexpr int kNumSHCoeffs = 9;

// Real spherical harmonics, bands 0..2.
inline constexpr double kSH0 = 0.282095;
inline constexpr double kSH1 = 0.488603;
inline constexpr double kSH2 = 1.092548;
inline constexpr double kSH3 = 0.315392;
inline constexpr double kSH4 = 0.546274;

/**
 * Per-channel SH lighting coefficients, one row per colour channel (R, G, B).
 *
 * Lighting is expressed in the view frame: x right, y up, z towards the
 * camera. Camera-space normals (y down, z forward) are converted with
 * to_lighting_frame() before evaluation.
 */
struct SHLighting
{
    Eigen::Matrix<double, 3, kNumSHCoeffs> gamma = Eigen::Matrix<double, 3, kNumSHCoeffs>::Zero();

    /// DC-only lighting giving irradiance \c level for every normal.
    static SHLighting constant(double level = 1.0);
    bool operator==(const SHLighting& other) const { return gamma == other.gamma; }
};

using SHBasis = std::array<double, kNumSHCoeffs>;

/// SH basis at a unit normal. Non-unit input is normalised; \c renormalized reports it.
SHBasis sh_basis(const Eigen::Vector3d& n, bool* renormalized = nullptr);

/// d Phi_b / d n for each basis function (polynomial derivative, no normalisation).
std::array<Eigen::Vector3d, kNumSHCoeffs> sh_basis_gradient(const Eigen::Vector3d& n);

inline Eigen::Vector3d to_lighting_frame(const Eigen::Vector3d& camera_normal) noexcept
{
    return {camera_normal.x(), -camera_normal.y(), -camera_normal.z()};
}

/**
 * Per-vertex irradiance: value(i, c) = sum_b gamma(c, b) Phi_b(n_i). Normals
 * are in the lighting frame. No clamping.
 */
std::vector<Eigen::Vector3d> illuminate(const std::vector<Eigen::Vector3d>& normals, const SHLighting& lighting);

/// Plain-text 3 x 9 matrix, one row per channel.
void write_lighting(const SHLighting& lighting, const std::filesystem::path& path);
SHLighting read_lighting(const std::filesystem::path& path);

} // namespace shading
} // namespace mfe

#endif /* MFE_SHADING_SPHERICAL_HARMONICS_HPP_ */
