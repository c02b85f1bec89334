/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/camera.cpp
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
#include "mfe/render/Camera.hpp"
#include "mfe/core/Error.hpp"

#include "Eigen/Geometry"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mfe {
namespace render {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& w)
{
    Eigen::Matrix3d s;
    s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return s;
}

} // namespace

Eigen::Matrix3d RigidPose::rotation_matrix() const { return axis_angle_to_matrix(rotation); }

Camera Camera::centred(int width, int height, double focal, double near, double far)
{
    Camera c;
    c.width = width;
    c.height = height;
    c.focal = focal;
    c.principal = Eigen::Vector2d(0.5 * width, 0.5 * height);
    c.near = near;
    c.far = far;
    return c;
}

void Camera::validate() const
{
    if (!(focal > 0.0))
        throw DimensionError("camera focal length must be positive");
    if (!(near > 0.0 && near < far))
        throw DimensionError("camera depth range must satisfy 0 < near < far");
    if (width <= 0 || height <= 0)
        throw DimensionError("camera image size must be positive");
}

Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& w)
{
    const double theta2 = w.squaredNorm();
    const Eigen::Matrix3d k = skew(w);
    double a, b;
    if (theta2 < 1e-12)
    {
        a = 1.0 - theta2 / 6.0;
        b = 0.5 - theta2 / 24.0;
    } else
    {
        const double theta = std::sqrt(theta2);
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d matrix_to_axis_angle(const Eigen::Matrix3d& r)
{
    const Eigen::AngleAxisd aa(r);
    return aa.axis() * aa.angle();
}

Eigen::Vector3d canonicalize_axis_angle(const Eigen::Vector3d& w)
{
    const double theta = w.norm();
    if (theta <= std::numbers::pi)
        return w;
    return matrix_to_axis_angle(axis_angle_to_matrix(w));
}

std::array<Eigen::Matrix3d, 3> axis_angle_jacobian(const Eigen::Vector3d& w)
{
    // Gallego & Yezzi: dR/dw_k = (w_k [w]x + [w x (I - R) e_k]x) R / |w|^2
    std::array<Eigen::Matrix3d, 3> d;
    const double theta2 = w.squaredNorm();
    if (theta2 < 1e-14)
    {
        for (int k = 0; k < 3; ++k)
            d[k] = skew(Eigen::Vector3d::Unit(k));
        return d;
    }
    const Eigen::Matrix3d r = axis_angle_to_matrix(w);
    const Eigen::Matrix3d wx = skew(w);
    const Eigen::Matrix3d i_minus_r = Eigen::Matrix3d::Identity() - r;
    for (int k = 0; k < 3; ++k)
    {
        const Eigen::Vector3d v = w.cross(i_minus_r.col(k));
        d[k] = (w(k) * wx + skew(v)) * r / theta2;
    }
    return d;
}

double geodesic_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b)
{
    const Eigen::Matrix3d rel = a.transpose() * b;
    const double c = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
    return std::acos(c);
}

Eigen::Matrix3d euler_to_matrix(double yaw, double pitch, double roll)
{
    const Eigen::Matrix3d ry = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Eigen::Matrix3d rx = Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()).toRotationMatrix();
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    return ry * rx * rz;
}

Projection project(const std::vector<Eigen::Vector3d>& vertices, const RigidPose& pose, const Camera& camera)
{
    const Eigen::Matrix3d r = pose.rotation_matrix();
    Projection p;
    p.camera_space.resize(vertices.size());
    p.screen.resize(vertices.size());
    p.behind.assign(vertices.size(), false);
    for (std::size_t i = 0; i < vertices.size(); ++i)
    {
        const Eigen::Vector3d c = r * vertices[i] + pose.translation;
        p.camera_space[i] = c;
        p.screen[i] = Eigen::Vector3d(camera.focal * (c.x() / c.z()) + camera.principal.x(),
                                      camera.focal * (c.y() / c.z()) + camera.principal.y(), c.z());
        if (!(c.z() >= camera.near))
        {
            p.behind[i] = true;
            p.any_behind = true;
        }
    }
    return p;
}

} // namespace render
} // namespace mfe
