/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/procedural.cpp
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
#include "mfe/morphablemodel/procedural.hpp"
#include "mfe/core/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mfe {
namespace morphablemodel {

namespace {

constexpr double kElevationMin = -60.0;
constexpr double kElevationStep = 3.0;
constexpr double kAzimuthStep = 220.0 / (kHeadCols - 1);
constexpr int kCentreCol = (kHeadCols - 1) / 2;
constexpr double kMouthElevation = -30.0;
constexpr int kUpperLipRow = 11;
constexpr int kLowerLipRow = 9;

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

double gauss(double theta, double phi, double t0, double p0, double st, double sp)
{
    const double a = (theta - t0) / st;
    const double b = (phi - p0) / sp;
    return std::exp(-0.5 * (a * a + b * b));
}

/// Mirrored pair of bumps at +-t0.
double gauss_pair(double theta, double phi, double t0, double p0, double st, double sp)
{
    return t0 == 0.0 ? gauss(theta, phi, 0.0, p0, st, sp)
                     : gauss(theta, phi, t0, p0, st, sp) + gauss(theta, phi, -t0, p0, st, sp);
}

double smoothstep_down(double x, double start, double end)
{
    if (x <= start)
        return 1.0;
    if (x >= end)
        return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * (x - start) / (end - start)));
}

// Lip band compression: elevation offsets within 3 degrees of the mouth line
// are scaled by `opening` (0 = lips touching), blending back to identity at 9.
double remap_elevation(double theta, double phi, const HeadShapeParams& p)
{
    const double opening = std::max(0.0, 1.5 * p.mouth_open);
    const double e = phi - kMouthElevation;
    const double ae = std::abs(e);
    double target = e;
    if (ae <= 3.0)
        target = e * opening;
    else if (ae <= 9.0)
        target = std::copysign(3.0 * opening + (ae - 3.0) * (9.0 - 3.0 * opening) / 6.0, e);
    const double w = smoothstep_down(std::abs(theta), 16.0, 26.0);
    double out = phi + w * (target - e);
    // smile lifts the mouth corners, jaw drop pulls the lower face down
    out += 4.0 * p.smile * gauss_pair(theta, phi, 15.0, kMouthElevation, 6.0, 6.0);
    out += 3.0 * p.brow_raise * gauss_pair(theta, phi, 18.0, 16.0, 12.0, 8.0);
    if (phi < kMouthElevation)
        out -= 4.0 * p.jaw_drop * (1.0 - std::exp(-(kMouthElevation - phi) / 8.0)) *
               smoothstep_down(std::abs(theta), 30.0, 60.0);
    return out;
}

// Fixed centres of the symmetric low-frequency identity bumps.
constexpr double kBumpCentres[][4] = {
    {0.0, 40.0, 30.0, 15.0},  {35.0, 25.0, 18.0, 15.0}, {60.0, 0.0, 20.0, 20.0},  {45.0, -30.0, 20.0, 15.0},
    {0.0, -45.0, 15.0, 10.0}, {20.0, -15.0, 10.0, 10.0}, {80.0, 30.0, 20.0, 20.0}, {90.0, -30.0, 20.0, 20.0},
    {0.0, 20.0, 10.0, 8.0},   {10.0, 0.0, 8.0, 10.0},   {28.0, 5.0, 8.0, 6.0},   {25.0, -40.0, 12.0, 8.0},
    {50.0, 45.0, 15.0, 12.0}, {0.0, 55.0, 25.0, 8.0},   {40.0, -10.0, 10.0, 10.0}, {12.0, -24.0, 6.0, 6.0},
    {65.0, -45.0, 15.0, 10.0}, {100.0, 0.0, 10.0, 30.0}, {30.0, 35.0, 10.0, 8.0},  {0.0, -15.0, 6.0, 6.0},
    {55.0, 15.0, 12.0, 10.0}, {15.0, -55.0, 12.0, 6.0},  {75.0, 50.0, 15.0, 10.0}, {0.0, 5.0, 4.0, 6.0},
};

Eigen::Vector3d head_point(double theta_deg, double phi_deg, const HeadShapeParams& p)
{
    const double phi_eff = remap_elevation(theta_deg, phi_deg, p);
    const double t = theta_deg;
    const double f = phi_eff;

    double d = 0.0;
    d += p.nose * gauss(t, f, 0.0, -2.0, 7.0 * p.nose_width, 13.0);
    d += 0.5 * p.nose * gauss(t, f, 0.0, -9.0, 5.0 * p.nose_width, 5.0);
    d += p.brow * gauss_pair(t, f, 18.0, 18.0, 13.0, 5.0);
    d -= p.eyes * gauss_pair(t, f, 18.0, 9.0, 8.0, 5.0);
    d += (0.03 + p.cheeks + 0.5 * p.puff) * gauss_pair(t, f, 32.0, -12.0, 14.0, 12.0);
    d += p.chin * gauss(t, f, 0.0, -52.0, 18.0, 9.0);
    d += 0.035 * gauss(t, f, 0.0, kMouthElevation, 15.0, 4.5);
    for (std::size_t i = 0; i < p.bumps.size() && i < std::size(kBumpCentres); ++i)
    {
        const auto* c = kBumpCentres[i];
        d += p.bumps[i] * gauss_pair(t, f, c[0], c[1], c[2], c[3]);
    }

    const double th = radians(t);
    const double ph = radians(f);
    const Eigen::Vector3d dir(std::cos(ph) * std::sin(th), -std::sin(ph), -std::cos(ph) * std::cos(th));
    const Eigen::Vector3d base(p.width * dir.x(), p.height * dir.y(), p.depth * dir.z());
    return base + d * dir;
}

int grid_index(int row, int col) { return row * kHeadCols + col; }

int nearest_vertex(double theta_deg, double phi_deg)
{
    const int col = std::clamp(static_cast<int>(std::lround(theta_deg / kAzimuthStep)) + kCentreCol, 0, kHeadCols - 1);
    const int row =
        std::clamp(static_cast<int>(std::lround((phi_deg - kElevationMin) / kElevationStep)), 0, kHeadRows - 1);
    return grid_index(row, col);
}

} // namespace

std::vector<Eigen::Vector3d> head_vertices(const HeadShapeParams& params)
{
    std::vector<Eigen::Vector3d> vertices(kHeadRows * kHeadCols);
    for (int r = 0; r < kHeadRows; ++r)
    {
        const double phi = kElevationMin + kElevationStep * r;
        for (int c = 0; c < kHeadCols; ++c)
        {
            const double theta = (c - kCentreCol) * kAzimuthStep;
            vertices[grid_index(r, c)] = head_point(theta, phi, params);
        }
    }
    return vertices;
}

HeadTemplate make_head_template()
{
    HeadTemplate head;
    head.rows = kHeadRows;
    head.cols = kHeadCols;
    head.mesh.vertices = head_vertices(HeadShapeParams{});
    head.mesh.uv.resize(head.mesh.vertices.size());
    for (int r = 0; r < kHeadRows; ++r)
        for (int c = 0; c < kHeadCols; ++c)
            head.mesh.uv[grid_index(r, c)] =
                Eigen::Vector2d(static_cast<double>(c) / (kHeadCols - 1), static_cast<double>(r) / (kHeadRows - 1));

    // Left cells split along one diagonal, right cells along the mirrored one.
    for (int r = 0; r + 1 < kHeadRows; ++r)
    {
        for (int c = 0; c + 1 < kHeadCols; ++c)
        {
            const int a = grid_index(r, c), b = grid_index(r, c + 1);
            const int up = grid_index(r + 1, c), d = grid_index(r + 1, c + 1);
            if (c < kCentreCol)
            {
                head.mesh.triangles.emplace_back(a, b, up);
                head.mesh.triangles.emplace_back(b, d, up);
            } else
            {
                head.mesh.triangles.emplace_back(a, b, d);
                head.mesh.triangles.emplace_back(a, d, up);
            }
        }
    }

    for (int c = kCentreCol - 4; c <= kCentreCol + 4; ++c)
        head.mouth_loop.push_back(grid_index(kUpperLipRow, c));
    for (int c = kCentreCol + 4; c >= kCentreCol - 4; --c)
        head.mouth_loop.push_back(grid_index(kLowerLipRow, c));

    const double landmark_angles[][2] = {
        {-28.0, 9.0},  {-18.0, 9.0},   {-8.0, 9.0},   {8.0, 9.0},     {18.0, 9.0},   {28.0, 9.0},    // eyes
        {-18.0, 18.0}, {18.0, 18.0},                                                                 // brows
        {0.0, -6.0},   {-7.0, -15.0},  {7.0, -15.0},                                                 // nose
        {-15.0, -30.0}, {15.0, -30.0}, {0.0, -27.0},  {0.0, -33.0},                                  // mouth
        {0.0, -54.0},  {-45.0, -42.0}, {45.0, -42.0}, {-70.0, -18.0}, {70.0, -18.0},                 // jaw
        {-36.0, -6.0}, {36.0, -6.0},                                                                 // cheeks
    };
    for (const auto& a : landmark_angles)
        head.landmarks.push_back(nearest_vertex(a[0], a[1]));
    return head;
}

TrainingSet make_training_set(std::uint64_t seed, int num_identities)
{
    const HeadTemplate head = make_head_template();
    Rng rng(seed);
    TrainingSet set;
    set.mouth_loop = head.mouth_loop;

    auto make_mesh = [&](const HeadShapeParams& p) {
        Mesh m;
        m.vertices = head_vertices(p);
        m.triangles = head.mesh.triangles;
        m.uv = head.mesh.uv;
        return m;
    };

    std::vector<HeadShapeParams> identities;
    for (int i = 0; i < num_identities; ++i)
    {
        HeadShapeParams p;
        p.width *= 1.0 + 0.06 * rng.normal();
        p.height *= 1.0 + 0.06 * rng.normal();
        p.depth *= 1.0 + 0.06 * rng.normal();
        p.nose *= 1.0 + 0.3 * rng.normal();
        p.nose_width *= 1.0 + 0.15 * rng.normal();
        p.brow *= 1.0 + 0.4 * rng.normal();
        p.eyes *= 1.0 + 0.4 * rng.normal();
        p.cheeks = 0.02 * rng.normal();
        p.chin = 0.03 * rng.normal();
        p.bumps.resize(std::size(kBumpCentres));
        for (auto& b : p.bumps)
            b = 0.02 * rng.normal();
        identities.push_back(p);
        set.samples.push_back(make_mesh(p));
        set.labels.push_back(SampleLabel::neutral());
    }
    for (int i = 0; i < num_identities; ++i)
    {
        HeadShapeParams p = identities[i];
        p.mouth_open = rng.uniform(0.1, 1.0);
        p.smile = 0.5 * rng.normal();
        p.brow_raise = 0.5 * rng.normal();
        p.jaw_drop = rng.uniform(0.0, 0.5);
        p.puff = 0.03 * rng.normal();
        set.samples.push_back(make_mesh(p));
        set.labels.push_back(SampleLabel::expressive(i));
    }
    return set;
}

MorphableModel make_default_model(int num_shape_components, int num_expression_components, std::uint64_t seed,
                                  int num_identities)
{
    const TrainingSet set = make_training_set(seed, num_identities);
    return build_from_samples(set.samples, set.labels, num_shape_components, num_expression_components,
                              set.mouth_loop);
}

} // namespace morphablemodel
} // namespace mfe
