/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/morphable_model.cpp
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
#include "mfe/morphablemodel/MorphableModel.hpp"
#include "mfe/core/Error.hpp"

#include "Eigen/SVD"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace mfe {
namespace morphablemodel {

namespace {

// Nearest float, with -0 folded to +0.
double quantize(double x) { return static_cast<double>(static_cast<float>(x)) + 0.0; }

template <typename Derived>
void quantize_in_place(Eigen::MatrixBase<Derived>& m)
{
    m = m.unaryExpr([](double x) { return quantize(x); });
}

void fix_signs(Eigen::MatrixXd& basis)
{
    for (Eigen::Index j = 0; j < basis.cols(); ++j)
    {
        Eigen::Index largest = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < basis.rows(); ++i)
        {
            const double a = std::abs(basis(i, j));
            if (a > best)
            {
                best = a;
                largest = i;
            }
        }
        if (basis(largest, j) < 0.0)
            basis.col(j) = -basis.col(j);
    }
}

struct Pca
{
    Eigen::MatrixXd basis;
    Eigen::VectorXd sigmas;
    int rank = 0;
};

Pca principal_components(const Eigen::MatrixXd& data, int components, double normalisation, const char* what)
{
    Pca result;
    if (data.cols() == 0)
    {
        if (components > 0)
            throw RankError(std::string(what) + ": no samples for " + std::to_string(components) + " components");
        result.basis.resize(data.rows(), 0);
        return result;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    const double tol = smax * static_cast<double>(std::max(data.rows(), data.cols())) *
                       std::numeric_limits<double>::epsilon();
    for (Eigen::Index i = 0; i < s.size(); ++i)
        result.rank += (smax > 0.0 && s(i) > tol) ? 1 : 0;
    if (components > result.rank)
    {
        throw RankError(std::string(what) + ": requested " + std::to_string(components) +
                        " components but the data has rank " + std::to_string(result.rank));
    }
    result.basis = svd.matrixU().leftCols(components);
    fix_signs(result.basis);
    result.sigmas = s.head(components) / normalisation;
    return result;
}

Eigen::VectorXd flatten(const Mesh& mesh)
{
    Eigen::VectorXd flat(3 * mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        flat.segment<3>(3 * i) = mesh.vertices[i];
    return flat;
}

void check_mouth_loop(const std::vector<int>& loop, int num_vertices)
{
    if (loop.size() < 3)
        throw TopologyError("mouth loop needs at least 3 vertices, got " + std::to_string(loop.size()));
    for (int v : loop)
    {
        if (v < 0 || v >= num_vertices)
            throw TopologyError("mouth loop references vertex " + std::to_string(v));
    }
}

} // namespace

MorphableModel::MorphableModel(Eigen::VectorXd mean, Eigen::MatrixXd shape_basis, Eigen::VectorXd shape_sigmas,
                               Eigen::MatrixXd expression_basis, Eigen::VectorXd expression_sigmas, Mesh topology,
                               std::vector<int> mouth_loop)
    : mean_(std::move(mean)), shape_basis_(std::move(shape_basis)), shape_sigmas_(std::move(shape_sigmas)),
      expression_basis_(std::move(expression_basis)), expression_sigmas_(std::move(expression_sigmas)),
      topology_(std::move(topology)), mouth_loop_(std::move(mouth_loop))
{
    if (mean_.size() % 3 != 0)
        throw DimensionError("mean length is not a multiple of 3");
    if (shape_basis_.rows() != mean_.size() || expression_basis_.rows() != mean_.size())
        throw DimensionError("basis rows do not match the mean length");
    if (shape_sigmas_.size() != shape_basis_.cols() || expression_sigmas_.size() != expression_basis_.cols())
        throw DimensionError("sigma count does not match the number of components");
    quantize_in_place(mean_);
    quantize_in_place(shape_basis_);
    quantize_in_place(shape_sigmas_);
    quantize_in_place(expression_basis_);
    quantize_in_place(expression_sigmas_);
    for (auto& uv : topology_.uv)
        uv = uv.unaryExpr([](double x) { return quantize(x); });
    topology_.vertices = to_vertices(mean_);
    validate(topology_);
    check_mouth_loop(mouth_loop_, num_vertices());
}

ShapeCoeffs MorphableModel::zero_coefficients() const
{
    return {Eigen::VectorXd::Zero(num_shape_components()), Eigen::VectorXd::Zero(num_expression_components())};
}

Eigen::VectorXd MorphableModel::synthesize_flat(const ShapeCoeffs& coeffs) const
{
    if (coeffs.shape.size() != shape_basis_.cols() || coeffs.expression.size() != expression_basis_.cols())
    {
        throw DimensionError("coefficient lengths (" + std::to_string(coeffs.shape.size()) + ", " +
                             std::to_string(coeffs.expression.size()) + ") do not match the model (" +
                             std::to_string(shape_basis_.cols()) + ", " + std::to_string(expression_basis_.cols()) +
                             ")");
    }
    // Zero coefficients are skipped so that the zero instance is the mean bit for bit.
    Eigen::VectorXd flat = mean_;
    for (Eigen::Index j = 0; j < coeffs.shape.size(); ++j)
    {
        if (coeffs.shape(j) != 0.0)
            flat.noalias() += coeffs.shape(j) * shape_basis_.col(j);
    }
    for (Eigen::Index j = 0; j < coeffs.expression.size(); ++j)
    {
        if (coeffs.expression(j) != 0.0)
            flat.noalias() += coeffs.expression(j) * expression_basis_.col(j);
    }
    return flat;
}

Mesh MorphableModel::synthesize(const ShapeCoeffs& coeffs) const
{
    Mesh mesh;
    mesh.vertices = to_vertices(synthesize_flat(coeffs));
    mesh.triangles = topology_.triangles;
    mesh.uv = topology_.uv;
    return mesh;
}

bool MorphableModel::operator==(const MorphableModel& other) const
{
    return mean_ == other.mean_ && shape_basis_ == other.shape_basis_ && shape_sigmas_ == other.shape_sigmas_ &&
           expression_basis_ == other.expression_basis_ && expression_sigmas_ == other.expression_sigmas_ &&
           topology_.triangles == other.topology_.triangles && topology_.uv == other.topology_.uv &&
           mouth_loop_ == other.mouth_loop_;
}

std::vector<Eigen::Vector3d> to_vertices(const Eigen::VectorXd& flat)
{
    std::vector<Eigen::Vector3d> vertices(flat.size() / 3);
    for (std::size_t i = 0; i < vertices.size(); ++i)
        vertices[i] = flat.segment<3>(3 * i);
    return vertices;
}

MorphableModel build_from_samples(const std::vector<Mesh>& samples, const std::vector<SampleLabel>& labels,
                                  int num_shape_components, int num_expression_components,
                                  std::vector<int> mouth_loop)
{
    if (samples.size() < 2)
        throw TopologyError("at least two samples are required");
    if (labels.size() != samples.size())
        throw DimensionError("one label per sample is required");
    if (num_shape_components < 0 || num_expression_components < 0)
        throw RankError("component counts must be non-negative");

    const Mesh& reference = samples.front();
    validate(reference);
    for (std::size_t s = 1; s < samples.size(); ++s)
    {
        const Mesh& m = samples[s];
        if (m.vertices.size() != reference.vertices.size())
            throw TopologyError("sample " + std::to_string(s) + " has " + std::to_string(m.vertices.size()) +
                                " vertices, expected " + std::to_string(reference.vertices.size()));
        if (m.triangles != reference.triangles)
            throw TopologyError("sample " + std::to_string(s) + " has a different triangulation");
        if (m.uv != reference.uv)
            throw TopologyError("sample " + std::to_string(s) + " has a different uv layout");
    }
    check_mouth_loop(mouth_loop, reference.num_vertices());

    std::vector<int> neutral, expressive;
    for (std::size_t s = 0; s < samples.size(); ++s)
    {
        if (labels[s].is_expressive())
        {
            const int pair = *labels[s].neutral_index;
            if (pair < 0 || pair >= static_cast<int>(samples.size()) || labels[pair].is_expressive())
                throw TopologyError("expressive sample " + std::to_string(s) + " is not paired with a neutral sample");
            expressive.push_back(static_cast<int>(s));
        } else
        {
            neutral.push_back(static_cast<int>(s));
        }
    }
    if (neutral.empty())
        throw TopologyError("no neutral samples");

    const Eigen::Index rows = 3 * static_cast<Eigen::Index>(reference.vertices.size());
    Eigen::MatrixXd identity(rows, static_cast<Eigen::Index>(neutral.size()));
    for (std::size_t j = 0; j < neutral.size(); ++j)
        identity.col(j) = flatten(samples[neutral[j]]);
    Eigen::VectorXd mean = identity.rowwise().mean();
    identity.colwise() -= mean;

    Eigen::MatrixXd displacements(rows, static_cast<Eigen::Index>(expressive.size()));
    for (std::size_t j = 0; j < expressive.size(); ++j)
    {
        const int s = expressive[j];
        displacements.col(j) = flatten(samples[s]) - flatten(samples[*labels[s].neutral_index]);
    }

    const auto denominator = [](std::size_t n) { return std::sqrt(static_cast<double>(std::max<std::size_t>(n, 2) - 1)); };
    Pca shape = principal_components(identity, num_shape_components, denominator(neutral.size()), "shape");
    Pca expr = principal_components(displacements, num_expression_components, denominator(expressive.size()),
                                    "expression");

    Mesh topology;
    topology.triangles = reference.triangles;
    topology.uv = reference.uv;
    return MorphableModel(std::move(mean), std::move(shape.basis), std::move(shape.sigmas), std::move(expr.basis),
                          std::move(expr.sigmas), std::move(topology), std::move(mouth_loop));
}

Eigen::VectorXd project_shape(const MorphableModel& model, const Eigen::VectorXd& flat)
{
    if (flat.size() != model.mean().size())
        throw DimensionError("geometry length does not match the model");
    return model.shape_basis().transpose() * (flat - model.mean());
}

// ---------------------------------------------------------------------------
// Binary container

namespace {

static_assert(std::endian::native == std::endian::little, "the model container is little-endian");

constexpr char kMagic[4] = {'M', 'F', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_floats(std::ostream& out, const double* data, std::size_t count)
{
    for (std::size_t i = 0; i < count; ++i)
        put(out, static_cast<float>(data[i]));
}

class Reader
{
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    template <typename T>
    T get()
    {
        if (offset_ + sizeof(T) > bytes_.size())
            throw FormatError("model file is truncated");
        T value;
        std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
        offset_ += sizeof(T);
        return value;
    }
    std::size_t remaining() const { return bytes_.size() - offset_; }
    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
    std::size_t offset_ = 0;
};

} // namespace

void save_model(const MorphableModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    const auto nv = static_cast<std::uint32_t>(model.num_vertices());
    const auto nf = static_cast<std::uint32_t>(model.topology().num_triangles());
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, nv);
    put(out, nf);
    put(out, static_cast<std::uint32_t>(model.num_shape_components()));
    put(out, static_cast<std::uint32_t>(model.num_expression_components()));
    put(out, static_cast<std::uint32_t>(model.mouth_loop().size()));
    put_floats(out, model.mean().data(), model.mean().size());
    put_floats(out, model.shape_basis().data(), model.shape_basis().size());
    put_floats(out, model.shape_sigmas().data(), model.shape_sigmas().size());
    put_floats(out, model.expression_basis().data(), model.expression_basis().size());
    put_floats(out, model.expression_sigmas().data(), model.expression_sigmas().size());
    for (const auto& uv : model.topology().uv)
    {
        put(out, static_cast<float>(uv.x()));
        put(out, static_cast<float>(uv.y()));
    }
    for (const auto& t : model.topology().triangles)
        for (int k = 0; k < 3; ++k)
            put(out, static_cast<std::uint32_t>(t[k]));
    for (int v : model.mouth_loop())
        put(out, static_cast<std::uint32_t>(v));
    if (!out)
        throw FormatError("failed writing " + path.string());
}

MorphableModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    Reader reader(buffer.str());

    if (reader.remaining() < 4 || std::memcmp(reader.bytes().data(), kMagic, 4) != 0)
        throw FormatError(path.string() + ": bad magic, expected \"MFM1\"");
    (void)reader.get<std::uint32_t>();
    const auto version = reader.get<std::uint32_t>();
    if (version != kVersion)
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    const std::uint64_t nv = reader.get<std::uint32_t>();
    const std::uint64_t nf = reader.get<std::uint32_t>();
    const std::uint64_t ks = reader.get<std::uint32_t>();
    const std::uint64_t ke = reader.get<std::uint32_t>();
    const std::uint64_t nm = reader.get<std::uint32_t>();

    const std::uint64_t floats = 3 * nv + 3 * nv * ks + ks + 3 * nv * ke + ke + 2 * nv;
    const std::uint64_t ints = 3 * nf + nm;
    if (reader.remaining() != 4 * (floats + ints))
    {
        throw FormatError(path.string() + ": expected " + std::to_string(4 * (floats + ints)) +
                          " payload bytes, found " + std::to_string(reader.remaining()));
    }
    const auto rows = static_cast<Eigen::Index>(3 * nv);
    auto read_floats = [&](Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v(i) = reader.get<float>();
        return v;
    };
    Eigen::VectorXd mean = read_floats(rows);
    Eigen::MatrixXd shape_basis = read_floats(rows * static_cast<Eigen::Index>(ks)).reshaped(rows, ks);
    Eigen::VectorXd shape_sigmas = read_floats(static_cast<Eigen::Index>(ks));
    Eigen::MatrixXd expression_basis = read_floats(rows * static_cast<Eigen::Index>(ke)).reshaped(rows, ke);
    Eigen::VectorXd expression_sigmas = read_floats(static_cast<Eigen::Index>(ke));
    Mesh topology;
    topology.uv.resize(nv);
    for (auto& uv : topology.uv)
    {
        uv.x() = reader.get<float>();
        uv.y() = reader.get<float>();
    }
    topology.triangles.resize(nf);
    for (auto& t : topology.triangles)
        for (int k = 0; k < 3; ++k)
            t[k] = static_cast<int>(reader.get<std::uint32_t>());
    std::vector<int> mouth(nm);
    for (auto& v : mouth)
        v = static_cast<int>(reader.get<std::uint32_t>());
    try
    {
        return MorphableModel(std::move(mean), std::move(shape_basis), std::move(shape_sigmas),
                              std::move(expression_basis), std::move(expression_sigmas), std::move(topology),
                              std::move(mouth));
    } catch (const Error& e)
    {
        throw FormatError(path.string() + ": inconsistent model: " + e.what());
    }
}

std::vector<int> read_index_list(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open " + path.string());
    std::vector<int> indices;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line))
    {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        long value;
        if (!(ls >> value))
        {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ParseError("expected a vertex index", line_number);
            continue;
        }
        std::string extra;
        if (ls >> extra)
            throw ParseError("expected a single vertex index", line_number);
        if (value < 0 || value > std::numeric_limits<int>::max())
            throw ParseError("vertex index out of range", line_number);
        indices.push_back(static_cast<int>(value));
    }
    return indices;
}

void write_index_list(const std::vector<int>& indices, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    for (int v : indices)
        out << v << '\n';
}

} // namespace morphablemodel
} // namespace mfe
