/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/spherical_harmonics.cpp
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
#include "mfe/shading/spherical_harmonics.hpp"
#include "mfe/core/Error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace mfe {
namespace shading {

SHLighting SHLighting::constant(double level)
{
    // Nudge the coefficient so that gamma * Phi_0 reproduces level exactly.
    double g = level / kSH0;
    for (int i = 0; i < 4 && g * kSH0 != level; ++i)
        g = std::nextafter(g, g * kSH0 < level ? HUGE_VAL : -HUGE_VAL);
    SHLighting l;
    l.gamma.col(0).setConstant(g);
    return l;
}

SHBasis sh_basis(const Eigen::Vector3d& normal, bool* renormalized)
{
    Eigen::Vector3d n = normal;
    const double len = n.norm();
    const bool fix = std::abs(len - 1.0) > 1e-6 && len > 0.0;
    if (fix)
        n /= len;
    if (renormalized)
        *renormalized = fix;
    const double x = n.x(), y = n.y(), z = n.z();
    return {kSH0,
            kSH1 * y,
            kSH1 * z,
            kSH1 * x,
            kSH2 * x * y,
            kSH2 * y * z,
            kSH3 * (3.0 * z * z - 1.0),
            kSH2 * x * z,
            kSH4 * (x * x - y * y)};
}

std::array<Eigen::Vector3d, kNumSHCoeffs> sh_basis_gradient(const Eigen::Vector3d& n)
{
    const double x = n.x(), y = n.y(), z = n.z();
    return {Eigen::Vector3d::Zero(),
            Eigen::Vector3d(0.0, kSH1, 0.0),
            Eigen::Vector3d(0.0, 0.0, kSH1),
            Eigen::Vector3d(kSH1, 0.0, 0.0),
            Eigen::Vector3d(kSH2 * y, kSH2 * x, 0.0),
            Eigen::Vector3d(0.0, kSH2 * z, kSH2 * y),
            Eigen::Vector3d(0.0, 0.0, 6.0 * kSH3 * z),
            Eigen::Vector3d(kSH2 * z, 0.0, kSH2 * x),
            Eigen::Vector3d(2.0 * kSH4 * x, -2.0 * kSH4 * y, 0.0)};
}

std::vector<Eigen::Vector3d> illuminate(const std::vector<Eigen::Vector3d>& normals, const SHLighting& lighting)
{
    std::vector<Eigen::Vector3d> out(normals.size());
    for (std::size_t i = 0; i < normals.size(); ++i)
    {
        const SHBasis phi = sh_basis(normals[i]);
        Eigen::Vector3d value = Eigen::Vector3d::Zero();
        for (int b = 0; b < kNumSHCoeffs; ++b)
            value += lighting.gamma.col(b) * phi[b];
        out[i] = value;
    }
    return out;
}

void write_lighting(const SHLighting& lighting, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    for (int c = 0; c < 3; ++c)
    {
        for (int b = 0; b < kNumSHCoeffs; ++b)
            out << (b ? " " : "") << lighting.gamma(c, b);
        out << '\n';
    }
}

SHLighting read_lighting(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open " + path.string());
    SHLighting lighting;
    std::string line;
    int row = 0, line_number = 0;
    while (std::getline(in, line))
    {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        if (row >= 3)
            throw ParseError("lighting has more than 3 rows", line_number);
        std::istringstream ls(line);
        for (int b = 0; b < kNumSHCoeffs; ++b)
        {
            if (!(ls >> lighting.gamma(row, b)))
                throw ParseError("expected 9 coefficients per row", line_number);
        }
        std::string extra;
        if (ls >> extra)
            throw ParseError("expected 9 coefficients per row", line_number);
        ++row;
    }
    if (row != 3)
        throw ParseError("lighting needs 3 rows, found " + std::to_string(row));
    return lighting;
}

} // namespace shading
} // namespace mfe
