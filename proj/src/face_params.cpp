/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/face_params.cpp
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
#include "mfe/fitting/FaceParams.hpp"
#include "mfe/core/Error.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace mfe {
namespace fitting {

FaceParams FaceParams::neutral(const morphablemodel::MorphableModel& model, const render::Camera& camera,
                               double distance)
{
    FaceParams p;
    p.coeffs = model.zero_coefficients();
    p.pose.translation = Eigen::Vector3d(0.0, 0.0, distance);
    p.camera = camera;
    p.lighting = shading::SHLighting::constant(1.0);
    return p;
}

bool FaceParams::operator==(const FaceParams& o) const
{
    return coeffs.shape == o.coeffs.shape && coeffs.expression == o.coeffs.expression &&
           pose.rotation == o.pose.rotation && pose.translation == o.pose.translation &&
           camera.focal == o.camera.focal && camera.principal == o.camera.principal &&
           camera.width == o.camera.width && camera.height == o.camera.height && camera.near == o.camera.near &&
           camera.far == o.camera.far && lighting == o.lighting;
}

namespace {

std::string number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename Vec>
std::string join(const Vec& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
        if (i)
            s += ' ';
        s += number(v(i));
    }
    return s;
}

struct Entry
{
    std::vector<double> values;
    int line = 0;
};

const char* const kKeys[] = {"shape",     "expression", "rotation",    "translation", "focal",  "principal",
                             "image_size", "depth_range", "light_r",    "light_g",     "light_b"};

} // namespace

std::string format_params(const FaceParams& p)
{
    std::ostringstream out;
    out << "# mfe face parameters\n";
    out << "shape = " << join(p.coeffs.shape) << '\n';
    out << "expression = " << join(p.coeffs.expression) << '\n';
    out << "rotation = " << join(p.pose.rotation) << '\n';
    out << "translation = " << join(p.pose.translation) << '\n';
    out << "focal = " << number(p.camera.focal) << '\n';
    out << "principal = " << join(p.camera.principal) << '\n';
    out << "image_size = " << p.camera.width << ' ' << p.camera.height << '\n';
    out << "depth_range = " << number(p.camera.near) << ' ' << number(p.camera.far) << '\n';
    const char* names[] = {"light_r", "light_g", "light_b"};
    for (int c = 0; c < 3; ++c)
        out << names[c] << " = " << join(p.lighting.gamma.row(c)) << '\n';
    return out.str();
}

FaceParams parse_params(const std::string& text, std::vector<std::string>* warnings)
{
    std::map<std::string, Entry> entries;
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line))
    {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = values'", line_number);
        std::string key = line.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key.empty())
            throw ParseError("empty key", line_number);
        Entry e;
        e.line = line_number;
        std::istringstream values(line.substr(eq + 1));
        std::string token;
        while (values >> token)
        {
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(token.c_str(), &end);
            if (end != token.c_str() + token.size() || errno == ERANGE)
                throw ParseError("invalid number '" + token + "' for key '" + key + "'", line_number);
            e.values.push_back(v);
        }
        if (entries.count(key))
            throw ParseError("duplicate key '" + key + "'", line_number);
        const bool known = std::find(std::begin(kKeys), std::end(kKeys), key) != std::end(kKeys);
        if (!known)
        {
            if (warnings)
                warnings->push_back("line " + std::to_string(line_number) + ": unknown key '" + key + "' ignored");
            continue;
        }
        entries.emplace(key, std::move(e));
    }

    auto get = [&](const char* key, int count) -> const std::vector<double>& {
        const auto it = entries.find(key);
        if (it == entries.end())
            throw ParseError(std::string("missing field '") + key + "'");
        if (count >= 0 && static_cast<int>(it->second.values.size()) != count)
        {
            throw ParseError(std::string("field '") + key + "' needs " + std::to_string(count) + " values, got " +
                                 std::to_string(it->second.values.size()),
                             it->second.line);
        }
        return it->second.values;
    };
    auto vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval(); };

    FaceParams p;
    p.coeffs.shape = vec(get("shape", -1));
    p.coeffs.expression = vec(get("expression", -1));
    p.pose.rotation = vec(get("rotation", 3));
    p.pose.translation = vec(get("translation", 3));
    p.camera.focal = get("focal", 1)[0];
    p.camera.principal = vec(get("principal", 2));
    const auto& size = get("image_size", 2);
    p.camera.width = static_cast<int>(size[0]);
    p.camera.height = static_cast<int>(size[1]);
    if (p.camera.width != size[0] || p.camera.height != size[1] || p.camera.width <= 0 || p.camera.height <= 0)
        throw ParseError("image_size must be two positive integers", entries["image_size"].line);
    const auto& range = get("depth_range", 2);
    p.camera.near = range[0];
    p.camera.far = range[1];
    const char* names[] = {"light_r", "light_g", "light_b"};
    for (int c = 0; c < 3; ++c)
    {
        const auto& g = get(names[c], shading::kNumSHCoeffs);
        for (int b = 0; b < shading::kNumSHCoeffs; ++b)
            p.lighting.gamma(c, b) = g[b];
    }
    try
    {
        p.camera.validate();
    } catch (const Error& e)
    {
        throw ParseError(e.what());
    }
    return p;
}

void save_params(const FaceParams& params, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    out << format_params(params);
}

FaceParams load_params(const std::filesystem::path& path, std::vector<std::string>* warnings)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_params(buffer.str(), warnings);
}

} // namespace fitting
} // namespace mfe
