/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tests/test_morphablemodel.cpp
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
#include "mfe/morphablemodel/MorphableModel.hpp"
#include "mfe/morphablemodel/procedural.hpp"

#include "Eigen/Eigenvalues"

#include "doctest.h"

#include <fstream>
#include <iterator>

using namespace mfe;
using namespace mfe::morphablemodel;

namespace {

// Dyadic offsets keep every coordinate exactly representable as a float.
double dyadic(Rng& rng, double amplitude) { return std::round(rng.uniform(-amplitude, amplitude) * 1024.0) / 1024.0; }

std::vector<Mesh> random_samples(std::uint64_t seed, int n, int rows = 3, int cols = 3)
{
    Rng rng(seed);
    const Mesh base = test::grid_mesh(rows, cols);
    std::vector<Mesh> out;
    for (int s = 0; s < n; ++s)
    {
        Mesh m = base;
        for (auto& v : m.vertices)
            v += Eigen::Vector3d(dyadic(rng, 0.1), dyadic(rng, 0.1), dyadic(rng, 0.3));
        out.push_back(m);
    }
    return out;
}

std::vector<SampleLabel> all_neutral(std::size_t n) { return std::vector<SampleLabel>(n, SampleLabel::neutral()); }

const std::vector<int> kLoop{0, 1, 4};

Eigen::VectorXd flat(const Mesh& m)
{
    Eigen::VectorXd f(3 * m.vertices.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        f.segment<3>(3 * i) = m.vertices[i];
    return f;
}

MorphableModel model_with_expressions(std::uint64_t seed)
{
    auto samples = random_samples(seed, 6);
    auto labels = all_neutral(6);
    Rng rng(seed + 1);
    for (int j = 0; j < 4; ++j)
    {
        Mesh e = samples[static_cast<std::size_t>(j)];
        for (auto& v : e.vertices)
            v.z() += dyadic(rng, 0.2);
        samples.push_back(e);
        labels.push_back(SampleLabel::expressive(j));
    }
    return build_from_samples(samples, labels, 4, 3, kLoop);
}

double reconstruction_error(const MorphableModel& m, const std::vector<Mesh>& samples)
{
    double e = 0.0;
    for (const auto& s : samples)
    {
        ShapeCoeffs c = m.zero_coefficients();
        c.shape = project_shape(m, flat(s));
        e += (m.synthesize_flat(c) - flat(s)).squaredNorm();
    }
    return e;
}

} // namespace

TEST_CASE("identical neutral samples give their mean and no identity components")
{
    const auto one = random_samples(3, 1);
    const std::vector<Mesh> samples{one[0], one[0]};
    const auto m = build_from_samples(samples, all_neutral(2), 0, 0, kLoop);
    CHECK(m.mean() == flat(one[0]));
    CHECK_THROWS_AS(build_from_samples(samples, all_neutral(2), 1, 0, kLoop), RankError);
}

TEST_CASE("two samples: the single component is the unit principal eigenvector")
{
    const auto samples = random_samples(11, 2);
    const auto m = build_from_samples(samples, all_neutral(2), 1, 0, kLoop);
    const Eigen::VectorXd d = flat(samples[1]) - flat(samples[0]);

    // Covariance of the two centred samples, eigendecomposed directly.
    const Eigen::VectorXd mean = 0.5 * (flat(samples[0]) + flat(samples[1]));
    Eigen::MatrixXd centred(d.size(), 2);
    centred.col(0) = flat(samples[0]) - mean;
    centred.col(1) = flat(samples[1]) - mean;
    const Eigen::MatrixXd cov = centred * centred.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd top = eig.eigenvectors().col(d.size() - 1);

    const Eigen::VectorXd u = m.shape_basis().col(0);
    CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(u.dot(top)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(u.dot(d.normalized())) == doctest::Approx(1.0).epsilon(1e-6));
    // sigma = |s| / sqrt(n - 1) with n = 2: the singular value of the centred pair.
    CHECK(m.shape_sigmas()(0) == doctest::Approx(std::sqrt(eig.eigenvalues()(d.size() - 1))).epsilon(1e-6));
}

TEST_CASE("full-rank model reconstructs every training sample")
{
    const int n = 7;
    const auto samples = random_samples(5, n);
    const auto m = build_from_samples(samples, all_neutral(n), n - 1, 0, kLoop);
    for (const auto& s : samples)
    {
        ShapeCoeffs c = m.zero_coefficients();
        c.shape = project_shape(m, flat(s));
        CHECK(test::rel_err_vec(m.synthesize_flat(c), flat(s)) <= 1e-5);
    }
}

TEST_CASE("reconstruction error does not increase with the number of components")
{
    const int n = 9;
    const auto samples = random_samples(17, n);
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 1; k < n; ++k)
    {
        const auto m = build_from_samples(samples, all_neutral(n), k, 0, kLoop);
        const double e = reconstruction_error(m, samples);
        CHECK(e <= previous * (1.0 + 1e-9) + 1e-12);
        previous = e;
    }
    CHECK(previous < 1e-8);
}

TEST_CASE("requesting more components than the data rank fails")
{
    const auto samples = random_samples(2, 4);
    CHECK_THROWS_AS(build_from_samples(samples, all_neutral(4), 4, 0, kLoop), RankError);
}

TEST_CASE("inconsistent topology is rejected")
{
    auto samples = random_samples(2, 3);
    samples[2].triangles[0] = samples[2].triangles[1];
    CHECK_THROWS_AS(build_from_samples(samples, all_neutral(3), 1, 0, kLoop), TopologyError);
    auto fewer = random_samples(2, 2);
    fewer[1].vertices.pop_back();
    fewer[1].uv.pop_back();
    CHECK_THROWS_AS(build_from_samples(fewer, all_neutral(2), 1, 0, kLoop), TopologyError);
}

TEST_CASE("zero coefficients synthesise the mean exactly")
{
    const auto m = model_with_expressions(21);
    const Mesh s = m.synthesize(m.zero_coefficients());
    for (int i = 0; i < m.num_vertices(); ++i)
        CHECK(s.vertices[static_cast<std::size_t>(i)] == m.mean().segment<3>(3 * i));
}

TEST_CASE("a single coefficient adds a scaled basis column")
{
    const auto m = model_with_expressions(22);
    ShapeCoeffs c = m.zero_coefficients();
    c.shape(0) = 1.75;
    const Eigen::VectorXd expected = m.mean() + 1.75 * m.shape_basis().col(0);
    CHECK(test::rel_err_vec(m.synthesize_flat(c), expected) <= 1e-15);
}

TEST_CASE("synthesis matches a naive matrix-vector product")
{
    const auto m = model_with_expressions(23);
    Rng rng(99);
    for (int trial = 0; trial < 5; ++trial)
    {
        ShapeCoeffs c = m.zero_coefficients();
        for (auto& v : c.shape)
            v = rng.normal();
        for (auto& v : c.expression)
            v = rng.normal();
        Eigen::VectorXd oracle(m.mean().size());
        for (Eigen::Index r = 0; r < oracle.size(); ++r)
        {
            double acc = m.mean()(r);
            for (Eigen::Index k = 0; k < c.shape.size(); ++k)
                acc += m.shape_basis()(r, k) * c.shape(k);
            for (Eigen::Index k = 0; k < c.expression.size(); ++k)
                acc += m.expression_basis()(r, k) * c.expression(k);
            oracle(r) = acc;
        }
        CHECK(test::rel_err_vec(m.synthesize_flat(c), oracle) <= 1e-6);
    }
}

TEST_CASE("synthesis is affine in the coefficients")
{
    const auto m = model_with_expressions(24);
    Rng rng(7);
    auto random_coeffs = [&] {
        ShapeCoeffs c = m.zero_coefficients();
        for (auto& v : c.shape)
            v = rng.normal();
        for (auto& v : c.expression)
            v = rng.normal();
        return c;
    };
    for (int trial = 0; trial < 10; ++trial)
    {
        const ShapeCoeffs p = random_coeffs(), q = random_coeffs();
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        ShapeCoeffs combo{a * p.shape + b * q.shape, a * p.expression + b * q.expression};
        const Eigen::VectorXd lhs = m.synthesize_flat(combo) - m.mean();
        const Eigen::VectorXd rhs = a * (m.synthesize_flat(p) - m.mean()) + b * (m.synthesize_flat(q) - m.mean());
        CHECK(test::rel_err_vec(lhs, rhs) <= 1e-6);
    }
}

TEST_CASE("wrong coefficient lengths are a dimension error")
{
    const auto m = model_with_expressions(25);
    ShapeCoeffs c = m.zero_coefficients();
    c.shape.resize(c.shape.size() + 1);
    c.shape.setZero();
    CHECK_THROWS_AS(m.synthesize(c), DimensionError);
}

TEST_CASE("vertex normals")
{
    SUBCASE("planar counter-clockwise triangle")
    {
        const std::vector<Eigen::Vector3d> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
        const auto n = vertex_normals(v, {{0, 1, 2}});
        for (const auto& x : n.normals)
            CHECK(x == Eigen::Vector3d(0, 0, 1));
        CHECK_FALSE(n.any_degenerate);
    }
    SUBCASE("cube corner fan is the normalised sum of the face normals")
    {
        const std::vector<Eigen::Vector3d> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        const auto n = vertex_normals(v, {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}});
        // Faces (0,0,1), (1,0,0), (0,1,0), each of area 1/2.
        const Eigen::Vector3d expected = Eigen::Vector3d(1, 1, 1) / std::sqrt(3.0);
        CHECK((n.normals[0] - expected).norm() < 1e-15);
    }
    SUBCASE("zero-area triangle falls back and flags")
    {
        const std::vector<Eigen::Vector3d> v{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
        const auto n = vertex_normals(v, {{0, 1, 2}});
        CHECK(n.any_degenerate);
        for (std::size_t i = 0; i < 3; ++i)
        {
            CHECK(n.degenerate[i]);
            CHECK(n.normals[i] == Eigen::Vector3d(0, 0, 1));
        }
    }
}

namespace {
std::string file_bytes(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
} // namespace

TEST_CASE("model container round trip and corruption")
{
    const auto dir = test::scratch_dir("model_io");
    const auto m = model_with_expressions(31);
    save_model(m, dir / "a.mfm");
    const auto loaded = load_model(dir / "a.mfm");
    CHECK(loaded == m);
    save_model(loaded, dir / "b.mfm");
    CHECK(file_bytes(dir / "a.mfm") == file_bytes(dir / "b.mfm"));

    const std::string bytes = file_bytes(dir / "a.mfm");
    {
        std::ofstream out(dir / "short.mfm", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
    }
    CHECK_THROWS_AS(load_model(dir / "short.mfm"), FormatError);
    {
        std::string bad = bytes;
        bad[0] = 'X';
        std::ofstream out(dir / "magic.mfm", std::ios::binary);
        out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
    }
    try
    {
        load_model(dir / "magic.mfm");
        FAIL("expected a format error");
    } catch (const FormatError& e)
    {
        CHECK(std::string(e.what()).find("MFM1") != std::string::npos);
    }
}

TEST_CASE("OBJ round trip keeps geometry and uv")
{
    const auto dir = test::scratch_dir("obj_io");
    const Mesh m = random_samples(4, 1)[0];
    write_obj(m, dir / "m.obj");
    const Mesh r = read_obj(dir / "m.obj");
    CHECK(r.triangles == m.triangles);
    REQUIRE(r.vertices.size() == m.vertices.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
    {
        CHECK((r.vertices[i] - m.vertices[i]).norm() == 0.0);
        CHECK((r.uv[i] - m.uv[i]).norm() == 0.0);
    }
}

TEST_CASE("procedural default model is well formed")
{
    const auto m = make_default_model(8, 8);
    CHECK(m.num_vertices() == kHeadRows * kHeadCols);
    CHECK(m.num_shape_components() == 8);
    CHECK(m.num_expression_components() == 8);
    CHECK(m.mouth_loop().size() >= 3);
    for (Eigen::Index i = 1; i < m.shape_sigmas().size(); ++i)
        CHECK(m.shape_sigmas()(i) <= m.shape_sigmas()(i - 1));
    // Orthonormal bases.
    const Eigen::MatrixXd g = m.shape_basis().transpose() * m.shape_basis();
    CHECK((g - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-5);
}
