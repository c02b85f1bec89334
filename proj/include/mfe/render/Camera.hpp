/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/render/Camera.hpp
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

#ifndef MFE_RENDER_CAMERA_HPP_
#define MFE_RENDER_CAMERA_HPP_

#include "Eigen/Core"

#include <array>
#include <vector>

namespace mfe {
namespace render {

/**
 * Rigid transform x' = R x + t with R given as an axis-angle vector
 * (axis * angle in radians).
 */
struct RigidPose
{
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Matrix3d rotation_matrix() const;
};

/**
 * Pinhole camera looking down +z with x right and y down (image convention).
 * Pixel (x, y) has its centre at (x + 0.5, y + 0.5).
 */
struct Camera
{
    double focal = 500.0;
    Eigen::Vector2d principal{64.0, 64.0};
    int width = 128;
    int height = 128;
    double near = 0.1;
    double far = 100.0;

    static Camera centred(int width, int height, double focal, double near = 0.1, double far = 100.0);
    /// Throws DimensionError when focal <= 0 or the depth range is invalid.
    void validate() const;
};

/// Rodrigues' formula. Stable for small angles.
Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& axis_angle);
Eigen::Vector3d matrix_to_axis_angle(const Eigen::Matrix3d& rotation);

/// Reduces the rotation angle into [0, pi] (same rotation).
Eigen::Vector3d canonicalize_axis_angle(const Eigen::Vector3d& axis_angle);

/**
 * Partial derivatives dR/d(omega_k), k = 0..2, of the axis-angle map.
 */
std::array<Eigen::Matrix3d, 3> axis_angle_jacobian(const Eigen::Vector3d& axis_angle);

/// Geodesic distance between two rotations, in radians.
double geodesic_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

/// R = Ry(yaw) * Rx(pitch) * Rz(roll), angles in radians.
Eigen::Matrix3d euler_to_matrix(double yaw, double pitch, double roll);

struct Projection
{
    std::vector<Eigen::Vector3d> camera_space; ///< R v + t
    std::vector<Eigen::Vector3d> screen;       ///< (pixel x, pixel y, camera z)
    std::vector<bool> behind;                  ///< camera z < near
    bool any_behind = false;
};

Projection project(const std::vector<Eigen::Vector3d>& vertices, const RigidPose& pose, const Camera& camera);

} // namespace render
} // namespace mfe

#endif /* MFE_RENDER_CAMERA_HPP_ */
