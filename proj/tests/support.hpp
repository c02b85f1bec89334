/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/support.hpp
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

#ifndef MFE_TESTS_SUPPORT_HPP_
#define MFE_TESTS_SUPPORT_HPP_

#include "mfe/core/Image.hpp"
#include "mfe/core/Mesh.hpp"
#include "mfe/core/random.hpp"

#include "Eigen/Core"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

namespace mfe {
namespace test {

/// Flat grid of rows x cols vertices over [0,1]^2 with matching uv, CCW seen from +z.
inline Mesh grid_mesh(int rows, int cols)
{
    Mesh m;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
        {
            const double u = static_cast<double>(c) / (cols - 1), v = static_cast<double>(r) / (rows - 1);
            m.vertices.emplace_back(u, v, 0.0);
            m.uv.emplace_back(u, v);
        }
    for (int r = 0; r + 1 < rows; ++r)
        for (int c = 0; c + 1 < cols; ++c)
        {
            const int a = r * cols + c, b = a + 1, d = a + cols, e = d + 1;
            m.triangles.emplace_back(a, b, e);
            m.triangles.emplace_back(a, e, d);
        }
    return m;
}

inline Image random_image(Rng& rng, int w, int h, int channels = 3, double lo = 0.0, double hi = 1.0)
{
    Image img(w, h, channels);
    for (auto& v : img.data())
        v = rng.uniform(lo, hi);
    return img;
}

inline Mask random_mask(Rng& rng, int w, int h, double p = 0.5)
{
    Mask m(w, h);
    for (auto& v : m.data())
        v = rng.uniform() < p ? 1 : 0;
    return m;
}

inline double rel_err(double a, double b, double floor = 1e-12)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Max |a-b| / max(max|a|, max|b|) over two vectors.
template <typename A, typename B>
double rel_err_vec(const A& a, const B& b)
{
    const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("mfe_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace test
} // namespace mfe

#endif /* MFE_TESTS_SUPPORT_HPP_ */
