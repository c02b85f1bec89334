/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/fitting/fitting.hpp
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

#ifndef MFE_FITTING_FITTING_HPP_
#define MFE_FITTING_FITTING_HPP_

#include "mfe/core/Error.hpp"
#include "mfe/core/Image.hpp"
#include "mfe/fitting/FaceParams.hpp"
#include "mfe/morphablemodel/MorphableModel.hpp"

#include "Eigen/Core"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfe {
namespace fitting {

struct Landmark
{
    int vertex = 0;
    double x = 0.0; ///< pixel coordinates
    double y = 0.0;
    double weight = 1.0;
};

using Landmarks2D = std::vector<Landmark>;

/// Lines of "vertex x y [weight]"; '#' comments allowed.
Landmarks2D read_landmarks(const std::filesystem::path& path);
void write_landmarks(const Landmarks2D& landmarks, const std::filesystem::path& path);

struct LandmarkLoss
{
    double loss = 0.0;
    /// dLoss/d(screen x, screen y) per vertex (zero for vertices without landmarks)
    std::vector<Eigen::Vector2d> d_screen;
};

/**
 * Weighted mean squared pixel distance sum_j w_j |P(v_j) - l_j|^2 / sum_j w_j
 * between projected vertices (screen x, y in the first two components) and
 * their annotations. Throws DegenerateLossError when empty or all weights
 * are zero, DimensionError on an invalid vertex index.
 */
LandmarkLoss landmark_loss(const std::vector<Eigen::Vector3d>& screen, const Landmarks2D& landmarks);

/// First-order optimiser with adaptive moments.
class Adam
{
public:
    explicit Adam(int size, double learning_rate = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);

    /// One update of \c x in place along -gradient.
    void step(Eigen::VectorXd& x, const Eigen::VectorXd& gradient);
    /// Per-coordinate learning-rate scales (default 1).
    void set_scales(Eigen::VectorXd scales) { scales_ = std::move(scales); }
    void set_learning_rate(double lr) noexcept { learning_rate_ = lr; }
    double learning_rate() const noexcept { return learning_rate_; }
    void reset();

private:
    double learning_rate_, beta1_, beta2_, epsilon_;
    long iteration_ = 0;
    Eigen::VectorXd m_, v_, scales_;
};

struct FitOptions
{
    double photometric_weight = 1.0;
    double landmark_weight = 2e-3;       ///< per px^2
    double regularization_weight = 1e-5; ///< on sigma-normalised coefficients
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double final_learning_rate_ratio = 0.05; ///< cosine decay target within each stage
    int landmark_iterations = 100;           ///< stage 1 (skipped without landmarks)
    int joint_iterations = 400;              ///< stage 2
    bool optimize_focal = false;
    bool optimize_texture = false;
    double texture_learning_rate = 0.01;
    std::optional<Mask> target_mask; ///< restricts the photometric term
};

struct TraceEntry
{
    int stage = 0;
    int iteration = 0;
    double objective = 0.0;
    double photometric = 0.0;
    double landmark = 0.0;
    double regularization = 0.0;
};

struct FitResult
{
    FaceParams params;
    Image texture; ///< input texture, or the optimised one
    std::vector<TraceEntry> trace;
    double initial_objective = 0.0;
    double final_objective = 0.0;
};

/// Thrown when the objective becomes non-finite. Carries the last finite iterate.
class DivergenceError : public Error
{
public:
    DivergenceError(const std::string& message, FaceParams last_finite)
        : Error(message), last_finite_(std::move(last_finite))
    {
    }
    const FaceParams& last_finite() const noexcept { return last_finite_; }

private:
    FaceParams last_finite_;
};

/**
 * Analysis-by-synthesis fit of shape, expression, pose and lighting to
 * \c target, minimising
 *
 *   w_photo * photometric + w_lm * landmark + w_reg * sum (p_i / sigma_i)^2
 *
 * with Adam over two stages: pose from landmarks only, then all parameters
 * jointly. The photometric term covers the pixels the current estimate
 * renders (intersected with opts.target_mask). The best iterate of each stage
 * is kept, so the returned objective never exceeds the initial one.
 *
 * Throws InitError when the initial face covers no pixel, DivergenceError on
 * a non-finite objective, DimensionError when target and camera disagree.
 */
FitResult fit(const Image& target, const morphablemodel::MorphableModel& model, const Image& texture,
              const FaceParams& init, const std::optional<Landmarks2D>& landmarks, const FitOptions& options = {});

/// "stage,iteration,objective,photometric,landmark,regularization" CSV.
void write_trace_csv(const std::vector<TraceEntry>& trace, const std::filesystem::path& path);

} // namespace fitting
} // namespace mfe

#endif /* MFE_FITTING_FITTING_HPP_ */
