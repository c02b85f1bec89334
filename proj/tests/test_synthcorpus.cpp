/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/test_synthcorpus.cpp
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
#include "support.hpp"

#include "mfe/core/Error.hpp"
#include "mfe/core/parallel.hpp"
#include "mfe/io/png.hpp"
#include "mfe/metrics/metrics.hpp"
#include "mfe/morphablemodel/procedural.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/shading/render.hpp"
#include "mfe/synthcorpus/synthcorpus.hpp"

#include "doctest.h"

#include <fstream>
#include <iterator>
#include <numbers>

using namespace mfe;
using namespace mfe::synthcorpus;

namespace {

const morphablemodel::MorphableModel& model()
{
    static const auto m = morphablemodel::make_default_model(8, 8);
    return m;
}

std::string bytes(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("zero-width ranges give the mean face at identity pose")
{
    SampleSpec s;
    s.count = 5;
    s.yaw = s.pitch = s.roll = {0.0, 0.0};
    s.coefficient_range = 0.0;
    for (const auto& p : sample_params(s, model()))
    {
        CHECK(p.coeffs.shape.isZero(0.0));
        CHECK(p.coeffs.expression.isZero(0.0));
        CHECK(p.pose.rotation.isZero(0.0));
        CHECK(p.pose.translation == Eigen::Vector3d(0, 0, s.distance));
    }
}

TEST_CASE("sampling is a function of the seed")
{
    SampleSpec s;
    s.count = 20;
    s.seed = 17;
    const auto a = sample_params(s, model()), b = sample_params(s, model());
    REQUIRE(a.size() == 20);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == b[i]);
    s.seed = 18;
    CHECK_FALSE(sample_params(s, model())[0] == a[0]);
}

TEST_CASE("yaw statistics over many samples")
{
    SampleSpec s;
    s.count = 10000;
    s.yaw = {-45.0, 45.0};
    s.pitch = s.roll = {0.0, 0.0};
    const auto params = sample_params(s, model());
    double sum = 0.0, lo = 1e9, hi = -1e9;
    for (const auto& p : params)
    {
        // Pure yaw is a rotation about +y.
        CHECK(std::abs(p.pose.rotation.x()) + std::abs(p.pose.rotation.z()) == 0.0);
        const double yaw = p.pose.rotation.y() * 180.0 / std::numbers::pi;
        sum += yaw;
        lo = std::min(lo, yaw);
        hi = std::max(hi, yaw);
    }
    CHECK(std::abs(sum / s.count) <= 1.0);
    CHECK(lo >= -45.0 - 1e-9);
    CHECK(hi <= 45.0 + 1e-9);
    CHECK(hi - lo > 80.0);
}

TEST_CASE("coefficients respect their truncation")
{
    SampleSpec s;
    s.count = 200;
    s.coefficient_range = 1.5;
    for (const auto& p : sample_params(s, model()))
    {
        CHECK((p.coeffs.shape.array().abs() <= 1.5 * model().shape_sigmas().array() + 1e-12).all());
        CHECK((p.coeffs.expression.array().abs() <= 1.5 * model().expression_sigmas().array() + 1e-12).all());
    }
}

TEST_CASE("sample spec text")
{
    SampleSpec s;
    s.seed = 99;
    s.count = 7;
    s.yaw = {-20.0, 10.0};
    s.lighting = LightingMode::constant;
    s.texture_detail = 0.25;
    const SampleSpec r = parse_sample_spec(format_sample_spec(s));
    CHECK(r.seed == 99);
    CHECK(r.count == 7);
    CHECK(r.yaw.min == -20.0);
    CHECK(r.yaw.max == 10.0);
    CHECK(r.lighting == LightingMode::constant);
    CHECK(r.texture_detail == 0.25);
    CHECK_THROWS_AS(parse_sample_spec("count = 3\nresolution = 128\n"), ParseError);
    CHECK_THROWS_AS(parse_sample_spec("count = 0\n"), ParseError);
    CHECK_THROWS_AS(parse_sample_spec("yaw = 10 -10\n"), ParseError);
}

TEST_CASE("ground truth")
{
    SampleSpec s;
    s.seed = 4;
    const auto p = sample_params(s, model())[0];
    const Image tex = procedural_texture(1, 64), bg = procedural_backdrop(2, s.image_size, s.image_size);
    const auto gt = generate_ground_truth(p, model(), tex, bg);
    const auto f = shading::render_illuminated(model(), p.coeffs, p.pose, p.camera, tex, p.lighting);
    CHECK(gt.mask == f.mask);
    CHECK(gt.mask.count() > 1000);
    for (int y = 0; y < s.image_size; ++y)
        for (int x = 0; x < s.image_size; ++x)
            if (!gt.mask(x, y))
                for (int c = 0; c < 3; ++c)
                    CHECK(gt.image(x, y, c) == io::quantize_8bit(bg)(x, y, c));
    // Two seeds give clearly different faces.
    CHECK(metrics::l1(procedural_texture(1, 64), procedural_texture(2, 64)) > 0.01);
}

TEST_CASE("a written corpus re-renders bit-exactly and does not depend on threads")
{
    const auto full = morphablemodel::make_default_model(8, 8);
    SampleSpec s;
    s.seed = 12;
    s.count = 3;
    s.image_size = 96;
    s.focal = 300.0;
    s.texture_size = 64;
    const auto a = test::scratch_dir("corpus_a"), b = test::scratch_dir("corpus_b");
    set_num_threads(1);
    write_corpus(s, full, a);
    set_num_threads(4);
    write_corpus(s, full, b);
    set_num_threads(1);
    for (const auto& entry : std::filesystem::directory_iterator(a))
        CHECK(bytes(entry.path()) == bytes(b / entry.path().filename()));

    for (int i = 0; i < s.count; ++i)
    {
        char stem[16];
        std::snprintf(stem, sizeof stem, "%04d", i);
        const auto p = fitting::load_params(a / (std::string(stem) + ".params.txt"));
        const Image tex = io::read_png(a / (std::string(stem) + ".tex.png"));
        const Image bg = io::read_png(a / (std::string(stem) + ".bg.png"));
        const auto gt = generate_ground_truth(p, full, tex, bg);
        CHECK(gt.image == io::read_png(a / (std::string(stem) + ".png")));
        CHECK(gt.mask == io::read_mask_png(a / (std::string(stem) + ".mask.png")));
        // Landmarks are the exact projections of their vertices.
        const auto proj = render::project(full.synthesize(p.coeffs).vertices, p.pose, p.camera);
        for (const auto& l : fitting::read_landmarks(a / (std::string(stem) + ".landmarks.txt")))
        {
            CHECK(l.x == doctest::Approx(proj.screen[static_cast<std::size_t>(l.vertex)].x()).epsilon(1e-12));
            CHECK(l.y == doctest::Approx(proj.screen[static_cast<std::size_t>(l.vertex)].y()).epsilon(1e-12));
        }
    }
}
