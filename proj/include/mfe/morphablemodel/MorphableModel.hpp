/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/morphablemodel/MorphableModel.hpp
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

#ifndef MFE_MORPHABLEMODEL_MORPHABLEMODEL_HPP_
#define MFE_MORPHABLEMODEL_MORPHABLEMODEL_HPP_

#include "mfe/core/Mesh.hpp"

#include "Eigen/Core"

#include <filesystem>
#include <optional>
#include <vector>

namespace mfe {
namespace morphablemodel {

/// Shape and expression coefficients of one face instance.
struct ShapeCoeffs
{
    Eigen::VectorXd shape;
    Eigen::VectorXd expression;
};

/**
 * A linear face model S = mean + U_s * p_s + U_e * p_e.
 *
 * All arrays are stored in double precision but every value is rounded to the
 * nearest float on construction, so the f32 container round-trips bit-exactly.
 * The vertex layout of the flattened vectors is x0 y0 z0 x1 y1 z1 ...
 */
class MorphableModel
{
public:
    MorphableModel() = default;

    /**
     * Takes ownership of all arrays. The template's vertices are replaced by
     * the (quantised) mean. Throws DimensionError / TopologyError when the
     * arrays are inconsistent.
     */
    MorphableModel(Eigen::VectorXd mean, Eigen::MatrixXd shape_basis, Eigen::VectorXd shape_sigmas,
                   Eigen::MatrixXd expression_basis, Eigen::VectorXd expression_sigmas, Mesh topology,
                   std::vector<int> mouth_loop);

    int num_vertices() const noexcept { return static_cast<int>(mean_.size() / 3); }
    int num_shape_components() const noexcept { return static_cast<int>(shape_basis_.cols()); }
    int num_expression_components() const noexcept { return static_cast<int>(expression_basis_.cols()); }

    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& shape_basis() const noexcept { return shape_basis_; }
    const Eigen::MatrixXd& expression_basis() const noexcept { return expression_basis_; }
    const Eigen::VectorXd& shape_sigmas() const noexcept { return shape_sigmas_; }
    const Eigen::VectorXd& expression_sigmas() const noexcept { return expression_sigmas_; }
    const Mesh& topology() const noexcept { return topology_; }
    const std::vector<int>& mouth_loop() const noexcept { return mouth_loop_; }

    ShapeCoeffs zero_coefficients() const;

    /// Flattened geometry M + U_s p_s + U_e p_e. Throws DimensionError.
    Eigen::VectorXd synthesize_flat(const ShapeCoeffs& coeffs) const;

    /// Geometry as a mesh sharing the model's triangulation and uv.
    Mesh synthesize(const ShapeCoeffs& coeffs) const;

    bool operator==(const MorphableModel& other) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd shape_basis_;
    Eigen::VectorXd shape_sigmas_;
    Eigen::MatrixXd expression_basis_;
    Eigen::VectorXd expression_sigmas_;
    Mesh topology_;
    std::vector<int> mouth_loop_;
};

/// Reshapes a flat 3n vector into n vertices.
std::vector<Eigen::Vector3d> to_vertices(const Eigen::VectorXd& flat);

/**
 * Label of a training sample: neutral, or expressive and paired with the
 * neutral sample at index \c neutral_index.
 */
struct SampleLabel
{
    std::optional<int> neutral_index;

    static SampleLabel neutral() { return {}; }
    static SampleLabel expressive(int paired_neutral) { return {paired_neutral}; }
    bool is_expressive() const noexcept { return neutral_index.has_value(); }
};

/**
 * Builds a model by PCA (SVD of the centred data).
 *
 * The mean and identity basis come from the neutral samples; the expression
 * basis from expressive-minus-paired-neutral displacements. Sigmas are the
 * singular values over sqrt(samples - 1). Each component's sign is fixed so
 * that its first entry of largest magnitude is positive.
 *
 * Throws TopologyError when samples disagree in topology, RankError when a
 * requested component count exceeds the numerical rank of its data.
 */
MorphableModel build_from_samples(const std::vector<Mesh>& samples, const std::vector<SampleLabel>& labels,
                                  int num_shape_components, int num_expression_components,
                                  std::vector<int> mouth_loop);

/// Projects a flat geometry onto the shape basis (after removing the mean).
Eigen::VectorXd project_shape(const MorphableModel& model, const Eigen::VectorXd& flat);

/**
 * Binary "MFM1" container, little-endian: u32 header (version, N_v, N_f, k_s,
 * k_e, mouth loop length), f32 arrays (mean, shape basis column-major,
 * shape sigmas, expression basis column-major, expression sigmas, uv), then
 * u32 arrays (triangles, mouth loop).
 */
void save_model(const MorphableModel& model, const std::filesystem::path& path);
MorphableModel load_model(const std::filesystem::path& path);

/// One vertex index per line; blank lines and '#' comments are skipped.
std::vector<int> read_index_list(const std::filesystem::path& path);
void write_index_list(const std::vector<int>& indices, const std::filesystem::path& path);

} // namespace morphablemodel
} // namespace mfe

#endif /* MFE_MORPHABLEMODEL_MORPHABLEMODEL_HPP_ */
