/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/test_texrecover.cpp
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
#include "mfe/experiments/ablation.hpp"
#include "mfe/metrics/metrics.hpp"
#include "mfe/morphablemodel/procedural.hpp"
#include "mfe/shading/render.hpp"
#include "mfe/synthcorpus/synthcorpus.hpp"
#include "mfe/texrecover/texrecover.hpp"

#include "doctest.h"

using namespace mfe;
using namespace mfe::texrecover;

namespace {

const morphablemodel::MorphableModel& model()
{
    static const auto m = morphablemodel::make_default_model(4, 4);
    return m;
}

// Smaller than the acceptance setup to keep the unit suite quick.
experiments::RecoverySetup small_setup()
{
    experiments::RecoverySetup s;
    s.image_size = 256;
    s.focal = 450.0;
    s.texture_size = 128;
    return s;
}

// A square facing the camera, one texel wide in uv.
morphablemodel::MorphableModel quad_model(double half)
{
    Eigen::VectorXd mean(12);
    mean << -half, -half, 0, half, -half, 0, half, half, 0, -half, half, 0;
    Mesh topo;
    topo.triangles = {{0, 2, 1}, {0, 3, 2}};
    topo.uv.assign(4, Eigen::Vector2d(0.5, 0.5));
    return {mean, Eigen::MatrixXd(12, 0), Eigen::VectorXd(0), Eigen::MatrixXd(12, 0), Eigen::VectorXd(0), topo,
            {0, 1, 2}};
}

} // namespace

TEST_CASE("a single texel seen through a single pixel is pixel over irradiance")
{
    const auto m = quad_model(0.4);
    View v;
    v.params.coeffs = m.zero_coefficients();
    v.params.camera = render::Camera::centred(3, 3, 2.0);
    v.params.pose.translation = Eigen::Vector3d(0, 0, 2);
    v.params.lighting = shading::SHLighting::constant(0.5);
    v.image = Image(3, 3, 3, 0.0);
    for (int c = 0; c < 3; ++c)
        v.image(1, 1, c) = 0.375 + 0.0625 * c;
    const auto frame = shading::render_illuminated(m, v.params.coeffs, v.params.pose, v.params.camera,
                                                   Image(1, 1, 3, 1.0), v.params.lighting);
    REQUIRE(frame.mask.count() == 1);
    REQUIRE(frame.mask(1, 1) == 1);
    RecoverOptions o;
    o.tv_weight = 0.0;
    const auto r = recover({v}, m, 1, o);
    CHECK(r.validity(0, 0) == 1.0);
    for (int c = 0; c < 3; ++c)
        CHECK(r.texture(0, 0, c) == (0.375 + 0.0625 * c) / 0.5);
}

TEST_CASE("frontal recovery reproduces the visible texture")
{
    const auto setup = small_setup();
    const Image truth = synthcorpus::procedural_texture(3, setup.texture_size);
    const auto v = experiments::synthetic_view(model(), truth, 0.0, shading::SHLighting::constant(1.0), setup);
    const auto r = recover({v}, model(), setup.texture_size);
    Mask visible(setup.texture_size, setup.texture_size);
    for (int y = 0; y < setup.texture_size; ++y)
        for (int x = 0; x < setup.texture_size; ++x)
            visible(x, y) = r.validity(x, y) > 0.0;
    REQUIRE(visible.count() > 1000);
    const double s = metrics::ssim(r.texture, truth, visible);
    INFO("SSIM " << s);
    CHECK(s >= 0.90);
}

TEST_CASE("loss never increases and validity grows with views")
{
    const auto setup = small_setup();
    const Image truth = synthcorpus::procedural_texture(5, setup.texture_size);
    const auto light = experiments::side_lighting();
    std::vector<View> views;
    for (double yaw : {0.0, -45.0, 45.0})
        views.push_back(experiments::synthetic_view(model(), truth, yaw, light, setup));

    const auto r = recover(views, model(), setup.texture_size);
    for (std::size_t i = 1; i < r.loss_trace.size(); ++i)
        CHECK(r.loss_trace[i] <= r.loss_trace[i - 1]);

    const Mask front = front_hemisphere_texels(model(), setup.texture_size);
    Image previous(setup.texture_size, setup.texture_size, 1, 0.0);
    double previous_coverage = 0.0;
    for (std::size_t k = 1; k <= views.size(); ++k)
    {
        const std::vector<View> subset(views.begin(), views.begin() + static_cast<long>(k));
        const Image val = accumulate_validity(subset, model(), setup.texture_size);
        for (std::size_t i = 0; i < val.data().size(); ++i)
            CHECK(val.data()[i] >= previous.data()[i]);
        const double coverage = validity_coverage(val, front);
        CHECK(coverage > previous_coverage);
        previous = val;
        previous_coverage = coverage;
    }
    for (const auto& v : views)
        CHECK(validity_coverage(accumulate_validity({v}, model(), setup.texture_size), front) < previous_coverage);
    CHECK(previous_coverage >= 0.95);
}

TEST_CASE("recovery without any visible texel fails loudly")
{
    View v = experiments::synthetic_view(model(), Image(8, 8, 3, 0.5), 0.0, shading::SHLighting::constant(1.0),
                                         small_setup());
    v.mask = Mask(v.image.width(), v.image.height());
    CHECK_THROWS_AS(recover({v}, model(), 32), VisibilityError);
}

TEST_CASE("inpainting")
{
    SUBCASE("all valid is the identity")
    {
        Rng rng(1);
        RecoveredTexture t{test::random_image(rng, 8, 8), Image(8, 8, 1, 1.0), {}};
        CHECK(inpaint_invalid(t) == t.texture);
    }
    SUBCASE("a single hole in a constant field takes the constant")
    {
        RecoveredTexture t{Image(7, 7, 3, 0.3), Image(7, 7, 1, 1.0), {}};
        t.texture(3, 3, 0) = 0.9;
        t.validity(3, 3) = 0.0;
        const Image out = inpaint_invalid(t);
        CHECK(out(3, 3, 0) == doctest::Approx(0.3).epsilon(1e-9));
    }
    SUBCASE("a stripe between two constants becomes a linear ramp")
    {
        const int w = 32, h = 8;
        RecoveredTexture t{Image(w, h, 3, 0.0), Image(w, h, 1, 0.0), {}};
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
            {
                if (x <= 7 || x >= 24)
                {
                    t.validity(x, y) = 1.0;
                    for (int c = 0; c < 3; ++c)
                        t.texture(x, y, c) = x <= 7 ? 0.2 : 0.8;
                }
            }
        const Image out = inpaint_invalid(t, 100000, 1e-7);
        double worst = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 8; x < 24; ++x)
                worst = std::max(worst, std::abs(out(x, y, 1) - (0.2 + 0.6 * (x - 7) / 17.0)));
        CHECK(worst <= 1e-3);
    }
}

TEST_CASE("relighting")
{
    const auto setup = small_setup();
    fitting::FaceParams p;
    p.coeffs = model().zero_coefficients();
    p.camera = render::Camera::centred(setup.image_size, setup.image_size, setup.focal);
    p.pose.translation = Eigen::Vector3d(0, 0, setup.distance);
    const Image tex = synthcorpus::procedural_texture(8, 64);

    SUBCASE("unit light gives the albedo render")
    {
        const auto f = shading::render_illuminated(model(), p.coeffs, p.pose, p.camera, tex,
                                                   shading::SHLighting::constant(1.0));
        CHECK(relight(tex, model(), p.coeffs, p.pose, p.camera, shading::SHLighting::constant(1.0)) == f.albedo);
    }
    SUBCASE("scaling the light scales the image below saturation")
    {
        shading::SHLighting l = experiments::side_lighting();
        l.gamma *= 0.5;
        shading::SHLighting l2 = l;
        l2.gamma *= 1.5;
        const Image a = relight(tex, model(), p.coeffs, p.pose, p.camera, l);
        const Image b = relight(tex, model(), p.coeffs, p.pose, p.camera, l2);
        double worst = 0.0;
        for (std::size_t i = 0; i < a.data().size(); ++i)
            if (a.data()[i] > 0.0 && b.data()[i] < 1.0)
                worst = std::max(worst, std::abs(b.data()[i] - 1.5 * a.data()[i]));
        CHECK(worst <= 1e-12);
    }
    SUBCASE("left and right light give mirrored images of a symmetric face")
    {
        shading::SHLighting left = shading::SHLighting::constant(0.7), right = left;
        for (int c = 0; c < 3; ++c)
        {
            left.gamma(c, 3) = -0.3;
            right.gamma(c, 3) = 0.3;
        }
        const Image grey(16, 16, 3, 0.8);
        const Image a = relight(grey, model(), p.coeffs, p.pose, p.camera, left);
        const Image b = relight(grey, model(), p.coeffs, p.pose, p.camera, right);
        const int w = a.width();
        double worst = 0.0;
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < w; ++x)
                worst = std::max(worst, std::abs(a(x, y, 0) - b(w - 1 - x, y, 0)));
        CHECK(worst <= 1e-3);
    }
}
