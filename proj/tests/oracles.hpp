/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/oracles.hpp
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

#ifndef MFE_TESTS_ORACLES_HPP_
#define MFE_TESTS_ORACLES_HPP_

// Brute-force reference implementations shared by the unit tests and the
// acceptance run. Deliberately naive: no tiling, no shared code paths.

#include "mfe/core/Image.hpp"
#include "mfe/core/random.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/render/Rasterizer.hpp"

#include "Eigen/Core"
#include "Eigen/LU"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mfe {
namespace oracle {

using render::Camera;
using render::GBuffer;

struct Scene
{
    std::vector<Eigen::Vector3d> screen;
    std::vector<Eigen::Vector3i> triangles;
    Camera camera;
};

inline Scene random_scene(std::uint64_t seed)
{
    Rng rng(seed);
    Scene s;
    s.camera.width = 8 + static_cast<int>(rng.uniform() * 57);
    s.camera.height = 8 + static_cast<int>(rng.uniform() * 57);
    s.camera.near = 0.5;
    s.camera.far = 50.0;
    const int n = 1 + static_cast<int>(rng.uniform() * 500);
    for (int f = 0; f < n; ++f)
    {
        const double cx = rng.uniform(-4.0, s.camera.width + 4.0), cy = rng.uniform(-4.0, s.camera.height + 4.0);
        const double r = rng.uniform(0.5, 16.0);
        for (int k = 0; k < 3; ++k)
        {
            // A few vertices land outside [near, far].
            const double z = rng.uniform() < 0.01 ? rng.uniform(0.0, 0.5) : rng.uniform(1.0, 10.0);
            s.screen.emplace_back(cx + rng.uniform(-r, r), cy + rng.uniform(-r, r), z);
        }
        s.triangles.emplace_back(3 * f, 3 * f + 1, 3 * f + 2);
    }
    return s;
}

// Brute force: every pixel against every triangle, barycentrics from a
// direct 2x2 solve, perspective-correct depth from them.
inline GBuffer rasterize(const Scene& s, bool cull)
{
    GBuffer g(s.camera.width, s.camera.height);
    for (int y = 0; y < s.camera.height; ++y)
        for (int x = 0; x < s.camera.width; ++x)
        {
            const Eigen::Vector2d p(x + 0.5, y + 0.5);
            for (std::size_t f = 0; f < s.triangles.size(); ++f)
            {
                const auto& t = s.triangles[f];
                const Eigen::Vector3d &A = s.screen[t[0]], &B = s.screen[t[1]], &C = s.screen[t[2]];
                if (std::min({A.z(), B.z(), C.z()}) < s.camera.near || std::max({A.z(), B.z(), C.z()}) > s.camera.far)
                    continue;
                const Eigen::Vector2d a = A.head<2>(), b = B.head<2>(), c = C.head<2>();
                Eigen::Matrix2d m;
                m.col(0) = b - a;
                m.col(1) = c - a;
                const double det = m.determinant();
                // The viewer sees counter-clockwise triangles in y-down pixel space as clockwise.
                if (det == 0.0 || (cull && det > 0.0))
                    continue;
                const Eigen::Vector2d st = m.inverse() * (p - a);
                const Eigen::Vector3d l(1.0 - st(0) - st(1), st(0), st(1));
                if (l.minCoeff() < 0.0)
                    continue;
                const double depth = 1.0 / (l(0) / A.z() + l(1) / B.z() + l(2) / C.z());
                const std::size_t i = g.index(x, y);
                if (depth < g.depth[i])
                {
                    g.depth[i] = depth;
                    g.triangle[i] = static_cast<std::int32_t>(f);
                }
            }
        }
    return g;
}


inline double naive_mse(const Image& a, const Image& b, const Mask* m)
{
    double s = 0.0;
    long n = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
        {
            if (m && !(*m)(x, y))
                continue;
            for (int c = 0; c < a.channels(); ++c)
            {
                s += (a(x, y, c) - b(x, y, c)) * (a(x, y, c) - b(x, y, c));
                ++n;
            }
        }
    return s / n;
}

// Unoptimised SSIM: luminance, every 11x11 window fully inside the image,
// Gaussian weights (sigma 1.5) normalised to one, two-pass moments.
inline double naive_ssim(const Image& a, const Image& b)
{
    auto gray = [](const Image& im, int x, int y) {
        return 0.299 * im(x, y, 0) + 0.587 * im(x, y, 1) + 0.114 * im(x, y, 2);
    };
    double w[11][11], total = 0.0;
    for (int j = 0; j < 11; ++j)
        for (int i = 0; i < 11; ++i)
            total += w[j][i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
    double sum = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + 11 <= a.height(); ++y0)
        for (int x0 = 0; x0 + 11 <= a.width(); ++x0)
        {
            double ma = 0, mb = 0;
            for (int j = 0; j < 11; ++j)
                for (int i = 0; i < 11; ++i)
                {
                    ma += w[j][i] / total * gray(a, x0 + i, y0 + j);
                    mb += w[j][i] / total * gray(b, x0 + i, y0 + j);
                }
            double va = 0, vb = 0, cov = 0;
            for (int j = 0; j < 11; ++j)
                for (int i = 0; i < 11; ++i)
                {
                    const double da = gray(a, x0 + i, y0 + j) - ma, db = gray(b, x0 + i, y0 + j) - mb;
                    va += w[j][i] / total * da * da;
                    vb += w[j][i] / total * db * db;
                    cov += w[j][i] / total * da * db;
                }
            const double c1 = 1e-4, c2 = 9e-4;
            sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return sum / count;
}


} // namespace oracle
} // namespace mfe

#endif /* MFE_TESTS_ORACLES_HPP_ */
