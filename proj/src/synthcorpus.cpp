/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/synthcorpus.cpp
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
#include "mfe/synthcorpus/synthcorpus.hpp"
#include "mfe/core/Error.hpp"
#include "mfe/core/random.hpp"
#include "mfe/io/png.hpp"
#include "mfe/morphablemodel/procedural.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/shading/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mfe {
namespace synthcorpus {

void SampleSpec::validate() const
{
    const auto bad = [](const std::string& what) { throw ParseError("invalid sample spec: " + what, 0); };
    if (count < 1)
        bad("count must be at least 1");
    for (const auto& [name, r] : {std::pair{"yaw", yaw}, std::pair{"pitch", pitch}, std::pair{"roll", roll}})
        if (!(r.min <= r.max))
            bad(std::string(name) + " range is not ordered");
    if (!(coefficient_range >= 0.0) || !(coefficient_scale >= 0.0))
        bad("coefficient range and scale must be non-negative");
    if (!(distance > 0.0) || !(focal > 0.0))
        bad("distance and focal must be positive");
    if (!(translation_jitter >= 0.0) || !(dc_spread >= 0.0) || !(sh_stddev >= 0.0) || !(texture_detail >= 0.0))
        bad("spreads must be non-negative");
    if (image_size < 1 || texture_size < 1)
        bad("image and texture sizes must be positive");
}

SampleSpec parse_sample_spec(const std::string& text)
{
    SampleSpec spec;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", number);
        std::istringstream key_stream(line.substr(0, eq));
        std::string key;
        key_stream >> key;
        std::istringstream value(line.substr(eq + 1));
        const auto number_field = [&](auto& out) {
            if (!(value >> out))
                throw ParseError("bad value for '" + key + "'", number);
        };
        if (key == "seed")
            number_field(spec.seed);
        else if (key == "count")
            number_field(spec.count);
        else if (key == "yaw" || key == "pitch" || key == "roll")
        {
            Range& r = key == "yaw" ? spec.yaw : key == "pitch" ? spec.pitch : spec.roll;
            number_field(r.min);
            number_field(r.max);
        }
        else if (key == "coefficient_range")
            number_field(spec.coefficient_range);
        else if (key == "coefficient_scale")
            number_field(spec.coefficient_scale);
        else if (key == "distance")
            number_field(spec.distance);
        else if (key == "translation_jitter")
            number_field(spec.translation_jitter);
        else if (key == "lighting")
        {
            std::string mode;
            value >> mode;
            if (mode == "constant")
                spec.lighting = LightingMode::constant;
            else if (mode == "random_sh")
                spec.lighting = LightingMode::random_sh;
            else
                throw ParseError("lighting must be 'constant' or 'random_sh'", number);
        }
        else if (key == "dc_floor")
            number_field(spec.dc_floor);
        else if (key == "dc_spread")
            number_field(spec.dc_spread);
        else if (key == "sh_stddev")
            number_field(spec.sh_stddev);
        else if (key == "image_size")
            number_field(spec.image_size);
        else if (key == "focal")
            number_field(spec.focal);
        else if (key == "texture_size")
            number_field(spec.texture_size);
        else if (key == "texture_detail")
            number_field(spec.texture_detail);
        else
            throw ParseError("unknown key '" + key + "'", number);
        std::string rest;
        if (value >> rest)
            throw ParseError("trailing text after '" + key + "'", number);
    }
    spec.validate();
    return spec;
}

SampleSpec load_sample_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open sample spec " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_sample_spec(buffer.str());
}

std::string format_sample_spec(const SampleSpec& spec)
{
    std::string out;
    char line[128];
    const auto put = [&](const char* key, double v) {
        std::snprintf(line, sizeof line, "%s = %.17g\n", key, v);
        out += line;
    };
    const auto put_range = [&](const char* key, const Range& r) {
        std::snprintf(line, sizeof line, "%s = %.17g %.17g\n", key, r.min, r.max);
        out += line;
    };
    out += "seed = " + std::to_string(spec.seed) + "\n";
    out += "count = " + std::to_string(spec.count) + "\n";
    put_range("yaw", spec.yaw);
    put_range("pitch", spec.pitch);
    put_range("roll", spec.roll);
    put("coefficient_range", spec.coefficient_range);
    put("coefficient_scale", spec.coefficient_scale);
    put("distance", spec.distance);
    put("translation_jitter", spec.translation_jitter);
    out += std::string("lighting = ") + (spec.lighting == LightingMode::constant ? "constant" : "random_sh") + "\n";
    put("dc_floor", spec.dc_floor);
    put("dc_spread", spec.dc_spread);
    put("sh_stddev", spec.sh_stddev);
    out += "image_size = " + std::to_string(spec.image_size) + "\n";
    put("focal", spec.focal);
    out += "texture_size = " + std::to_string(spec.texture_size) + "\n";
    put("texture_detail", spec.texture_detail);
    return out;
}

std::uint64_t item_seed(std::uint64_t seed, int index) { return derive_seed(seed, static_cast<std::uint64_t>(index)); }

namespace {

double truncated_normal(Rng& rng, double scale, double bound)
{
    if (scale == 0.0 || bound == 0.0)
        return 0.0;
    for (;;)
    {
        const double z = scale * rng.normal();
        if (std::abs(z) <= bound)
            return z;
    }
}

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

} // namespace

std::vector<fitting::FaceParams> sample_params(const SampleSpec& spec, const morphablemodel::MorphableModel& model)
{
    spec.validate();
    std::vector<fitting::FaceParams> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i)
    {
        Rng rng(item_seed(spec.seed, i));
        fitting::FaceParams p;
        p.camera = render::Camera::centred(spec.image_size, spec.image_size, spec.focal);
        p.coeffs = model.zero_coefficients();
        for (Eigen::Index k = 0; k < p.coeffs.shape.size(); ++k)
            p.coeffs.shape(k) =
                model.shape_sigmas()(k) * truncated_normal(rng, spec.coefficient_scale, spec.coefficient_range);
        for (Eigen::Index k = 0; k < p.coeffs.expression.size(); ++k)
            p.coeffs.expression(k) =
                model.expression_sigmas()(k) * truncated_normal(rng, spec.coefficient_scale, spec.coefficient_range);
        const double yaw = rng.uniform(spec.yaw.min, spec.yaw.max);
        const double pitch = rng.uniform(spec.pitch.min, spec.pitch.max);
        const double roll = rng.uniform(spec.roll.min, spec.roll.max);
        p.pose.rotation = render::matrix_to_axis_angle(render::euler_to_matrix(radians(yaw), radians(pitch), radians(roll)));
        const double jx = rng.uniform(-1.0, 1.0), jy = rng.uniform(-1.0, 1.0);
        p.pose.translation = Eigen::Vector3d(spec.translation_jitter * jx, spec.translation_jitter * jy, spec.distance);
        if (spec.lighting == LightingMode::constant)
        {
            p.lighting = shading::SHLighting::constant(1.0);
        }
        else
        {
            for (int c = 0; c < 3; ++c)
                p.lighting.gamma(c, 0) = spec.dc_floor + spec.dc_spread * rng.uniform();
            for (int b = 1; b < shading::kNumSHCoeffs; ++b)
                p.lighting.gamma.col(b).setConstant(spec.sh_stddev * rng.normal());
        }
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

// Smooth value noise on a periodic lattice of the given resolution.
class ValueNoise
{
public:
    ValueNoise(Rng& rng, int cells) : cells_(cells), values_(static_cast<std::size_t>(cells * cells))
    {
        for (double& v : values_)
            v = rng.uniform(-1.0, 1.0);
    }

    double operator()(double u, double v) const
    {
        const double x = u * cells_, y = v * cells_;
        const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
        const double fx = smooth(x - x0), fy = smooth(y - y0);
        const double a = at(x0, y0), b = at(x0 + 1, y0), c = at(x0, y0 + 1), d = at(x0 + 1, y0 + 1);
        return (a + (b - a) * fx) + ((c + (d - c) * fx) - (a + (b - a) * fx)) * fy;
    }

private:
    static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
    double at(int x, int y) const
    {
        x = ((x % cells_) + cells_) % cells_;
        y = ((y % cells_) + cells_) % cells_;
        return values_[static_cast<std::size_t>(y * cells_ + x)];
    }
    int cells_;
    std::vector<double> values_;
};

double ellipse(double u, double v, double u0, double v0, double ru, double rv)
{
    const double a = (u - u0) / ru, b = (v - v0) / rv;
    return std::exp(-0.5 * (a * a + b * b) * (a * a + b * b));
}

// uv of a template direction (azimuth, elevation in degrees).
Eigen::Vector2d template_uv(double azimuth, double elevation)
{
    return {0.5 + azimuth / 220.0, (elevation + 60.0) / 120.0};
}

} // namespace

Image procedural_texture(std::uint64_t seed, int size, const TextureStyle& style)
{
    if (size < 1)
        throw DimensionError("procedural_texture: size must be positive");
    Rng rng(seed);
    const double r = rng.uniform(0.55, 0.85);
    const Eigen::Vector3d skin(r, r * rng.uniform(0.68, 0.80), r * rng.uniform(0.52, 0.66));
    const Eigen::Vector3d lip(skin.x() * 0.85, skin.y() * 0.55, skin.z() * 0.6);
    const Eigen::Vector3d brow = skin * rng.uniform(0.3, 0.5);
    const Eigen::Vector3d eye = skin * rng.uniform(0.25, 0.4);
    std::vector<ValueNoise> octaves;
    const int cells[] = {4, 8, 16, 32};
    const double amplitude[] = {0.08, 0.05, 0.03, 0.02};
    for (int c : cells)
        octaves.emplace_back(rng, c);
    ValueNoise tint(rng, 6);

    const Eigen::Vector2d mouth = template_uv(0.0, -30.0);
    const Eigen::Vector2d eye_l = template_uv(-18.0, 9.0), eye_r = template_uv(18.0, 9.0);
    const Eigen::Vector2d brow_l = template_uv(-18.0, 17.0), brow_r = template_uv(18.0, 17.0);

    Image out(size, size, 3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
        {
            const double u = (x + 0.5) / size, v = 1.0 - (y + 0.5) / size;
            double n = 0.0;
            for (std::size_t k = 0; k < octaves.size(); ++k)
                n += amplitude[k] * octaves[k](u, v);
            n *= style.detail;
            Eigen::Vector3d colour = skin * (1.0 + n);
            colour.x() += 0.04 * style.detail * tint(u, v);
            const double w_lip = ellipse(u, v, mouth.x(), mouth.y(), 0.075, 0.03);
            const double w_eye = ellipse(u, v, eye_l.x(), eye_l.y(), 0.035, 0.018) +
                                 ellipse(u, v, eye_r.x(), eye_r.y(), 0.035, 0.018);
            const double w_brow = ellipse(u, v, brow_l.x(), brow_l.y(), 0.05, 0.012) +
                                  ellipse(u, v, brow_r.x(), brow_r.y(), 0.05, 0.012);
            colour = colour + w_lip * (lip - colour);
            colour = colour + std::min(1.0, w_brow) * (brow - colour);
            colour = colour + std::min(1.0, w_eye) * (eye - colour);
            for (int c = 0; c < 3; ++c)
                out(x, y, c) = quantize(colour(c));
        }
    return out;
}

Image procedural_backdrop(std::uint64_t seed, int width, int height)
{
    Rng rng(seed);
    const bool gradient = rng.uniform() < 0.5;
    Eigen::Vector3d top, bottom;
    for (int c = 0; c < 3; ++c)
        top(c) = rng.uniform(0.05, 0.95);
    bottom = gradient ? Eigen::Vector3d(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)) : top;
    Image out(width, height, 3);
    for (int y = 0; y < height; ++y)
    {
        const double t = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                out(x, y, c) = quantize(top(c) + t * (bottom(c) - top(c)));
    }
    return out;
}

std::vector<int> default_landmark_vertices() { return morphablemodel::make_head_template().landmarks; }

GroundTruth generate_ground_truth(const fitting::FaceParams& params, const morphablemodel::MorphableModel& model,
                                  const Image& texture, const Image& backdrop)
{
    params.camera.validate();
    const int w = params.camera.width, h = params.camera.height;
    const Image bg = backdrop.width() > 0 ? backdrop : procedural_backdrop(0, w, h);
    if (bg.width() != w || bg.height() != h || bg.channels() != 3)
        throw DimensionError("generate_ground_truth: backdrop does not match the camera");
    const shading::Frame frame =
        shading::render_illuminated(model, params.coeffs, params.pose, params.camera, texture, params.lighting);
    GroundTruth gt;
    gt.params = params;
    gt.texture = texture;
    gt.mask = frame.mask;
    gt.image = bg;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (frame.mask(x, y))
                for (int c = 0; c < 3; ++c)
                    gt.image(x, y, c) = frame.image(x, y, c);
    gt.image = io::quantize_8bit(gt.image);
    const std::vector<int> landmark_vertices =
        model.num_vertices() == morphablemodel::kHeadRows * morphablemodel::kHeadCols
            ? default_landmark_vertices()
            : std::vector<int>{};
    for (int v : landmark_vertices)
    {
        const Eigen::Vector3d& s = frame.projection.screen[v];
        gt.landmarks.push_back({v, s.x(), s.y(), 1.0});
    }
    return gt;
}

void write_corpus(const SampleSpec& spec, const morphablemodel::MorphableModel& model,
                  const std::filesystem::path& directory)
{
    const auto params = sample_params(spec, model);
    std::filesystem::create_directories(directory);
    std::ofstream manifest(directory / "manifest.txt");
    if (!manifest)
        throw Error("cannot write " + (directory / "manifest.txt").string());
    manifest << "# spec\n" << format_sample_spec(spec) << "# items: index item_seed\n";
    for (int i = 0; i < spec.count; ++i)
    {
        const std::uint64_t s = item_seed(spec.seed, i);
        const Image texture = procedural_texture(derive_seed(s, 1), spec.texture_size, {spec.texture_detail});
        const Image backdrop = procedural_backdrop(derive_seed(s, 2), spec.image_size, spec.image_size);
        const GroundTruth gt = generate_ground_truth(params[static_cast<std::size_t>(i)], model, texture, backdrop);
        char stem[16];
        std::snprintf(stem, sizeof stem, "%04d", i);
        const std::string base = stem;
        io::write_png(gt.image, directory / (base + ".png"));
        io::write_mask_png(gt.mask, directory / (base + ".mask.png"));
        fitting::save_params(gt.params, directory / (base + ".params.txt"));
        io::write_png(gt.texture, directory / (base + ".tex.png"));
        io::write_png(backdrop, directory / (base + ".bg.png"));
        if (!gt.landmarks.empty())
            fitting::write_landmarks(gt.landmarks, directory / (base + ".landmarks.txt"));
        manifest << i << ' ' << s << '\n';
    }
}

} // namespace synthcorpus
} // namespace mfe
