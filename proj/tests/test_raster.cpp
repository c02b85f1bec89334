/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/test_raster.cpp
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
#include "oracles.hpp"
#include "support.hpp"

#include "mfe/core/Error.hpp"
#include "mfe/core/parallel.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/render/Rasterizer.hpp"
#include "mfe/render/texture.hpp"

#include "Eigen/LU"

#include "doctest.h"

#include <numbers>

using namespace mfe;
using namespace mfe::render;

using oracle::Scene;
using oracle::random_scene;


TEST_CASE("rasteriser matches the brute-force oracle on random scenes")
{
    int mismatched_ids = 0;
    double worst_depth = 0.0;
    for (std::uint64_t seed = 0; seed < 40; ++seed)
    {
        const Scene s = random_scene(1000 + seed);
        const bool cull = seed % 4 != 3;
        const GBuffer g = rasterize(s.screen, s.triangles, s.camera, {cull});
        const GBuffer o = oracle::rasterize(s, cull);
        for (std::size_t i = 0; i < g.triangle.size(); ++i)
        {
            mismatched_ids += g.triangle[i] != o.triangle[i];
            if (g.covered(i) && o.covered(i))
                worst_depth = std::max(worst_depth, test::rel_err(g.depth[i], o.depth[i]));
        }
    }
    CHECK(mismatched_ids == 0);
    CHECK(worst_depth <= 1e-5);
}

TEST_CASE("a triangle covering half of a 4x4 image")
{
    Camera cam;
    cam.width = cam.height = 4;
    // Clockwise on screen (y down) so it faces the viewer.
    const std::vector<Eigen::Vector3d> v{{0, 0, 1}, {0, 4, 1}, {4, 4, 1}};
    const GBuffer g = rasterize(v, {{0, 1, 2}}, cam);
    const Scene s{v, {{0, 1, 2}}, cam};
    const GBuffer o = oracle::rasterize(s, true);
    CHECK(g.mask() == o.mask());
    // Centres on the diagonal x = y are on the edge and count as inside.
    CHECK(g.mask().count() == 10);
}

TEST_CASE("zero-area triangles contribute nothing")
{
    Camera cam;
    cam.width = cam.height = 8;
    const std::vector<Eigen::Vector3d> v{{0, 0, 1}, {4, 4, 1}, {8, 8, 1}};
    CHECK(rasterize(v, {{0, 1, 2}}, cam).mask().count() == 0);
}

TEST_CASE("the nearer of two overlapping triangles wins")
{
    Camera cam;
    cam.width = cam.height = 16;
    const std::vector<Eigen::Vector3d> v{{0, 0, 2}, {0, 16, 2}, {16, 16, 2}, {0, 0, 1}, {0, 12, 1}, {12, 12, 1}};
    const std::vector<Eigen::Vector3i> t{{0, 1, 2}, {3, 4, 5}};
    const GBuffer g = rasterize(v, t, cam);
    const GBuffer o = oracle::rasterize({v, t, cam}, true);
    CHECK(g.triangle == o.triangle);
    int near_wins = 0;
    for (std::size_t i = 0; i < g.triangle.size(); ++i)
        near_wins += g.triangle[i] == 1;
    CHECK(near_wins > 0);
}

TEST_CASE("coverage is equivariant under integer screen shifts")
{
    const Scene s = random_scene(77);
    const GBuffer g = rasterize(s.screen, s.triangles, s.camera);
    for (const auto& [dx, dy] : {std::pair{3, 0}, std::pair{0, -2}, std::pair{-5, 4}})
    {
        auto shifted = s.screen;
        for (auto& p : shifted)
            p += Eigen::Vector3d(dx, dy, 0);
        const GBuffer h = rasterize(shifted, s.triangles, s.camera);
        for (int y = 0; y < s.camera.height; ++y)
            for (int x = 0; x < s.camera.width; ++x)
            {
                const int sx = x + dx, sy = y + dy;
                if (sx < 0 || sy < 0 || sx >= s.camera.width || sy >= s.camera.height)
                    continue;
                // Shifted coordinates are exact, but a triangle clipped by the old
                // frame can only gain pixels; compare where both are unclipped.
                if (x < 16 || y < 16 || x >= s.camera.width - 16 || y >= s.camera.height - 16)
                    continue;
                CHECK(h.triangle[h.index(sx, sy)] == g.triangle[g.index(x, y)]);
            }
    }
}

TEST_CASE("rasterisation does not depend on the thread count")
{
    const Scene s = random_scene(5);
    set_num_threads(1);
    const GBuffer a = rasterize(s.screen, s.triangles, s.camera);
    set_num_threads(4);
    const GBuffer b = rasterize(s.screen, s.triangles, s.camera);
    set_num_threads(1);
    CHECK(a.triangle == b.triangle);
    CHECK(a.depth == b.depth);
}

TEST_CASE("projection")
{
    const Camera cam = Camera::centred(64, 48, 100.0);
    RigidPose pose;
    SUBCASE("a point on the optical axis lands on the principal point")
    {
        const auto p = project({{0, 0, 5}}, pose, cam);
        CHECK(p.screen[0].x() == 32.0);
        CHECK(p.screen[0].y() == 24.0);
    }
    SUBCASE("moving away by delta scales the screen extent by z / (z + delta)")
    {
        const std::vector<Eigen::Vector3d> v{{-1, -1, 4}, {1, 1, 4}};
        const auto near_p = project(v, pose, cam);
        pose.translation = Eigen::Vector3d(0, 0, 2);
        const auto far_p = project(v, pose, cam);
        const double near_extent = (near_p.screen[1] - near_p.screen[0]).head<2>().norm();
        const double far_extent = (far_p.screen[1] - far_p.screen[0]).head<2>().norm();
        CHECK(far_extent / near_extent == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    }
    SUBCASE("a quarter turn about z maps an offset (u, 0) to (0, u)")
    {
        pose.rotation = Eigen::Vector3d(0, 0, std::numbers::pi / 2);
        const auto p = project({{0.5, 0, 5}}, pose, cam);
        const Eigen::Vector3d rotated = pose.rotation_matrix() * Eigen::Vector3d(0.5, 0, 5);
        const double u = 100.0 * 0.5 / 5.0;
        CHECK(p.screen[0].x() - 32.0 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(p.screen[0].y() - 24.0 == doctest::Approx(u).epsilon(1e-12));
        CHECK(p.screen[0].y() - 24.0 == doctest::Approx(100.0 * rotated.y() / rotated.z()).epsilon(1e-12));
    }
    SUBCASE("points behind the near plane are flagged")
    {
        const auto p = project({{0, 0, 0.05}, {0, 0, 3}}, pose, cam);
        CHECK(p.behind[0]);
        CHECK_FALSE(p.behind[1]);
        CHECK(p.any_behind);
    }
}

TEST_CASE("axis-angle conversions and derivatives")
{
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Eigen::Vector3d w(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
        const Eigen::Matrix3d R = axis_angle_to_matrix(w);
        CHECK((R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((matrix_to_axis_angle(R) - canonicalize_axis_angle(w)).norm() < 1e-9);
        const auto J = axis_angle_jacobian(w);
        for (int k = 0; k < 3; ++k)
        {
            const double h = 1e-6;
            Eigen::Vector3d wp = w, wm = w;
            wp(k) += h;
            wm(k) -= h;
            const Eigen::Matrix3d fd = (axis_angle_to_matrix(wp) - axis_angle_to_matrix(wm)) / (2 * h);
            CHECK((fd - J[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff() < 1e-7);
        }
    }
    const Eigen::Matrix3d a = euler_to_matrix(0.1, 0.0, 0.0);
    CHECK(geodesic_distance(a, Eigen::Matrix3d::Identity()) == doctest::Approx(0.1).epsilon(1e-12));
    // The jacobian at zero is the generator matrix.
    const auto J0 = axis_angle_jacobian(Eigen::Vector3d::Zero());
    Eigen::Matrix3d gz;
    gz << 0, -1, 0, 1, 0, 0, 0, 0, 0;
    CHECK((J0[2] - gz).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("invalid cameras are rejected")
{
    Camera c = Camera::centred(16, 16, 10.0);
    c.focal = -1.0;
    CHECK_THROWS(c.validate());
    c = Camera::centred(16, 16, 10.0);
    c.near = 2.0;
    c.far = 1.0;
    CHECK_THROWS(c.validate());
}

namespace {

// Screen-aligned quad over [x0, x1] x [y0, y1] at constant depth, uv spanning [u0, u1] x [v0, v1]
// with v decreasing downwards.
struct Quad
{
    std::vector<Eigen::Vector3d> screen;
    std::vector<Eigen::Vector3i> triangles{{0, 2, 1}, {1, 2, 3}};
    std::vector<Eigen::Vector2d> uv;
};

Quad make_quad(double x0, double y0, double x1, double y1, double u0, double v0, double u1, double v1)
{
    Quad q;
    q.screen = {{x0, y0, 2}, {x1, y0, 2}, {x0, y1, 2}, {x1, y1, 2}};
    q.uv = {{u0, v1}, {u1, v1}, {u0, v0}, {u1, v0}};
    return q;
}

} // namespace

TEST_CASE("texture sampling")
{
    Camera cam;
    cam.width = cam.height = 32;
    const Quad q = make_quad(2, 2, 30, 30, 0.1, 0.1, 0.9, 0.9);
    const GBuffer g = rasterize(q.screen, q.triangles, cam);
    REQUIRE(g.mask().count() > 600);

    SUBCASE("constant texture")
    {
        Image t(8, 8, 3);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                for (int c = 0; c < 3; ++c)
                    t(x, y, c) = 0.25 + 0.125 * c;
        const auto s = sample_texture(g, q.triangles, q.uv, t);
        for (std::size_t i = 0; i < g.triangle.size(); ++i)
            if (g.covered(i))
                for (int c = 0; c < 3; ++c)
                    CHECK(s.image.data()[3 * i + static_cast<std::size_t>(c)] == 0.25 + 0.125 * c);
        CHECK(s.mask == g.mask());
    }
    SUBCASE("all uv at one texel centre returns that texel")
    {
        Rng rng(8);
        const Image t = test::random_image(rng, 8, 8);
        // Texel (5, 2): u = (5 + 0.5) / 8, row 2 => v = 1 - 2.5 / 8.
        const Eigen::Vector2d uv((5 + 0.5) / 8.0, 1.0 - (2 + 0.5) / 8.0);
        const std::vector<Eigen::Vector2d> uvs(4, uv);
        const auto s = sample_texture(g, q.triangles, uvs, t);
        for (std::size_t i = 0; i < g.triangle.size(); ++i)
            if (g.covered(i))
                for (int c = 0; c < 3; ++c)
                    CHECK(s.image.data()[3 * i + static_cast<std::size_t>(c)] == t(5, 2, c));
    }
    SUBCASE("linear ramp is reproduced by bilinear interpolation")
    {
        const int W = 16, H = 16;
        Image t(W, H, 3);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < 3; ++c)
                    t(x, y, c) = 0.01 * x + 0.02 * y + 0.1 * c;
        const auto s = sample_texture(g, q.triangles, q.uv, t);
        double worst = 0.0;
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x)
            {
                if (!g.covered(g.index(x, y)))
                    continue;
                // Affine uv over the quad, then the texel-space position.
                const double u = 0.1 + 0.8 * (x + 0.5 - 2.0) / 28.0;
                const double v = 0.9 - 0.8 * (y + 0.5 - 2.0) / 28.0;
                const double tx = u * W - 0.5, ty = (1.0 - v) * H - 0.5;
                for (int c = 0; c < 3; ++c)
                    worst = std::max(worst, std::abs(s.image(x, y, c) - (0.01 * tx + 0.02 * ty + 0.1 * c)));
            }
        CHECK(worst <= 1e-5);
    }
    SUBCASE("samples stay within the texture range")
    {
        Rng rng(12);
        const Image t = test::random_image(rng, 7, 5, 3, 0.2, 0.7);
        std::vector<Eigen::Vector2d> uvs{{-0.2, 1.3}, {1.2, 0.4}, {0.3, -0.1}, {0.6, 0.6}};
        const auto s = sample_texture(g, q.triangles, uvs, t);
        const auto [lo, hi] = std::minmax_element(t.data().begin(), t.data().end());
        for (std::size_t i = 0; i < g.triangle.size(); ++i)
            if (g.covered(i))
                for (int c = 0; c < 3; ++c)
                {
                    const double v = s.image.data()[3 * i + static_cast<std::size_t>(c)];
                    CHECK(v >= *lo);
                    CHECK(v <= *hi);
                }
    }
}

TEST_CASE("bilinear footprint weights sum to one and their uv derivatives match differences")
{
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial)
    {
        const Eigen::Vector2d uv(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95));
        const auto f = bilinear_footprint(9, 7, uv);
        double sum = 0.0, du = 0.0, dv = 0.0;
        for (int k = 0; k < 4; ++k)
        {
            sum += f.weight[static_cast<std::size_t>(k)];
            du += f.d_weight_du[static_cast<std::size_t>(k)];
            dv += f.d_weight_dv[static_cast<std::size_t>(k)];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(du) < 1e-12);
        CHECK(std::abs(dv) < 1e-12);
        const Image t = test::random_image(rng, 9, 7);
        const double h = 1e-7;
        const Eigen::Vector3d fd =
            (sample_bilinear(t, uv + Eigen::Vector2d(h, 0)) - sample_bilinear(t, uv - Eigen::Vector2d(h, 0))) / (2 * h);
        Eigen::Vector3d an = Eigen::Vector3d::Zero();
        for (std::size_t k = 0; k < 4; ++k)
            for (int c = 0; c < 3; ++c)
                an(c) += f.d_weight_du[k] * t(f.x[k], f.y[k], c);
        CHECK((fd - an).norm() < 1e-5);
    }
}
