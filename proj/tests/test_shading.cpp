/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/test_shading.cpp
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

#include "mfe/morphablemodel/procedural.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/render/Rasterizer.hpp"
#include "mfe/render/texture.hpp"
#include "mfe/shading/render.hpp"
#include "mfe/shading/spherical_harmonics.hpp"

#include "doctest.h"

using namespace mfe;
using namespace mfe::shading;

namespace {

SHLighting random_lighting(Rng& rng)
{
    SHLighting l;
    for (int c = 0; c < 3; ++c)
        for (int b = 0; b < kNumSHCoeffs; ++b)
            l.gamma(c, b) = rng.normal();
    return l;
}

Eigen::Vector3d random_unit(Rng& rng)
{
    return Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
}

const morphablemodel::MorphableModel& model()
{
    static const auto m = morphablemodel::make_default_model(4, 4);
    return m;
}

struct Setup
{
    render::Camera camera = render::Camera::centred(64, 64, 150.0);
    render::RigidPose pose;
    Image texture;
    Setup()
    {
        pose.translation = Eigen::Vector3d(0, 0, 4);
        Rng rng(5);
        texture = test::random_image(rng, 32, 32, 3, 0.1, 0.9);
    }
};

} // namespace

TEST_CASE("SH basis at canonical normals")
{
    const SHBasis up = sh_basis({0, 0, 1});
    const std::array<double, 9> expected{0.282095, 0, 0.488603, 0, 0, 0, 0.630784, 0, 0};
    for (std::size_t b = 0; b < 9; ++b)
        CHECK(up[b] == doctest::Approx(expected[b]).epsilon(1e-6));

    const SHBasis x = sh_basis({1, 0, 0});
    CHECK(x[3] == doctest::Approx(0.488603).epsilon(1e-6));
    CHECK(x[6] == doctest::Approx(-0.315392).epsilon(1e-6));
    CHECK(x[8] == doctest::Approx(0.546274).epsilon(1e-6));

    const double s = 1.0 / std::sqrt(3.0);
    const SHBasis d = sh_basis({s, s, s});
    CHECK(d[4] == doctest::Approx(1.092548 / 3.0).epsilon(1e-6));
    CHECK(d[6] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("SH basis parity")
{
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Eigen::Vector3d n = random_unit(rng);
        const SHBasis p = sh_basis(n), q = sh_basis(-n);
        CHECK(p[0] == q[0]);
        for (std::size_t b : {1, 2, 3})
            CHECK(q[b] == -p[b]);
        for (std::size_t b : {4, 5, 6, 7, 8})
            CHECK(q[b] == doctest::Approx(p[b]).epsilon(1e-15));
    }
}

TEST_CASE("non-unit normals are renormalised")
{
    bool fixed = false;
    const SHBasis b = sh_basis({0, 0, 3}, &fixed);
    CHECK(fixed);
    CHECK(b[2] == doctest::Approx(kSH1));
}

TEST_CASE("constant lighting gives unit irradiance")
{
    Rng rng(2);
    std::vector<Eigen::Vector3d> n;
    for (int i = 0; i < 50; ++i)
        n.push_back(random_unit(rng));
    for (const auto& e : illuminate(n, SHLighting::constant(1.0)))
        CHECK(e == Eigen::Vector3d::Ones());
}

TEST_CASE("irradiance is linear in the coefficients and matches a direct sum")
{
    Rng rng(3);
    std::vector<Eigen::Vector3d> n;
    for (int i = 0; i < 50; ++i)
        n.push_back(random_unit(rng));
    const SHLighting a = random_lighting(rng), b = random_lighting(rng);
    SHLighting sum;
    sum.gamma = a.gamma + b.gamma;
    const auto ea = illuminate(n, a), eb = illuminate(n, b), es = illuminate(n, sum);
    for (std::size_t i = 0; i < n.size(); ++i)
    {
        CHECK(test::rel_err_vec(es[i], ea[i] + eb[i]) <= 1e-12);
        // 27-term oracle written out from the polynomial forms.
        const double x = n[i].x(), y = n[i].y(), z = n[i].z();
        const double phi[9] = {0.282095,        0.488603 * y,    0.488603 * z,
                               0.488603 * x,    1.092548 * x * y, 1.092548 * y * z,
                               0.315392 * (3 * z * z - 1), 1.092548 * x * z, 0.546274 * (x * x - y * y)};
        for (int c = 0; c < 3; ++c)
        {
            double acc = 0.0;
            for (int k = 0; k < 9; ++k)
                acc += a.gamma(c, k) * phi[k];
            CHECK(std::abs(ea[i](c) - acc) <= 1e-6);
        }
    }
}

TEST_CASE("lighting file round trip")
{
    Rng rng(4);
    const SHLighting l = random_lighting(rng);
    const auto dir = test::scratch_dir("lighting");
    write_lighting(l, dir / "l.txt");
    CHECK(read_lighting(dir / "l.txt") == l);
}

TEST_CASE("unit lighting reproduces the albedo render")
{
    const Setup s;
    const auto& m = model();
    const Frame f = render_illuminated(m, m.zero_coefficients(), s.pose, s.camera, s.texture, SHLighting::constant(1.0));
    REQUIRE(f.mask.count() > 500);
    // Albedo path only: rasterise and sample.
    const Mesh mesh = m.synthesize(m.zero_coefficients());
    const auto proj = render::project(mesh.vertices, s.pose, s.camera);
    const auto g = render::rasterize(proj.screen, mesh.triangles, s.camera);
    const auto albedo = render::sample_texture(g, mesh.triangles, m.topology().uv, s.texture);
    CHECK(albedo.mask == f.mask);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.image.data().size(); ++i)
        worst = std::max(worst, test::rel_err(f.image.data()[i], albedo.image.data()[i], 1e-12));
    CHECK(worst <= 1e-6);
}

TEST_CASE("zero lighting renders black faces")
{
    const Setup s;
    const auto& m = model();
    const Frame f = render_illuminated(m, m.zero_coefficients(), s.pose, s.camera, s.texture, SHLighting{});
    REQUIRE(f.mask.count() > 0);
    for (double v : f.image.data())
        CHECK(v == 0.0);
}

TEST_CASE("render equals albedo times interpolated irradiance, clamped")
{
    const Setup s;
    const auto& m = model();
    Rng rng(6);
    SHLighting l = random_lighting(rng);
    l.gamma.col(0).setConstant(3.0);
    const Frame f = render_illuminated(m, m.zero_coefficients(), s.pose, s.camera, s.texture, l);
    const auto& tris = m.topology().triangles;
    double worst = 0.0;
    for (int y = 0; y < s.camera.height; ++y)
        for (int x = 0; x < s.camera.width; ++x)
        {
            const std::size_t i = f.gbuffer.index(x, y);
            if (!f.gbuffer.covered(i))
                continue;
            const auto& t = tris[static_cast<std::size_t>(f.gbuffer.triangle[i])];
            const auto& b = f.gbuffer.barycentric[i];
            // Oracle: irradiance at the three corners from their lighting-frame normals.
            const auto e = illuminate({f.light_normals[t[0]], f.light_normals[t[1]], f.light_normals[t[2]]}, l);
            const Eigen::Vector3d irr = b(0) * e[0] + b(1) * e[1] + b(2) * e[2];
            const Eigen::Vector3d alb = render::sample_bilinear(
                s.texture, render::interpolate_uv(f.gbuffer, i, tris, m.topology().uv));
            for (int c = 0; c < 3; ++c)
            {
                CHECK(f.product(x, y, c) == f.albedo(x, y, c) * f.irradiance(x, y, c));
                worst = std::max(worst, std::abs(f.image(x, y, c) - std::clamp(alb(c) * irr(c), 0.0, 1.0)));
            }
        }
    CHECK(worst <= 1e-9);
}

TEST_CASE("light from the viewer dims the face towards its silhouette")
{
    const Setup s;
    const auto& m = model();
    SHLighting l = SHLighting::constant(0.5);
    l.gamma.col(2).setConstant(1.0); // Phi_2 ~ z of the lighting frame, i.e. towards the camera
    Image grey(4, 4, 3, 0.8);
    const Frame f = render_illuminated(m, m.zero_coefficients(), s.pose, s.camera, grey, l);
    // Along the centre row, brightness should follow the normal's alignment with the view axis.
    int checked = 0;
    for (int x = 0; x < s.camera.width; ++x)
    {
        const std::size_t i = f.gbuffer.index(x, s.camera.height / 2);
        if (!f.gbuffer.covered(i))
            continue;
        const auto& t = m.topology().triangles[static_cast<std::size_t>(f.gbuffer.triangle[i])];
        const auto& b = f.gbuffer.barycentric[i];
        const double nz = b(0) * f.light_normals[t[0]].z() + b(1) * f.light_normals[t[1]].z() +
                          b(2) * f.light_normals[t[2]].z();
        const double expected = 0.8 * (0.5 + kSH1 * nz);
        CHECK(f.image(x, s.camera.height / 2, 0) == doctest::Approx(std::clamp(expected, 0.0, 1.0)).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked > 10);
}
