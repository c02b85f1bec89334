/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/texrecover.cpp
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
#include "mfe/texrecover/texrecover.hpp"
#include "mfe/core/Error.hpp"
#include "mfe/core/parallel.hpp"
#include "mfe/fitting/fitting.hpp"
#include "mfe/render/Rasterizer.hpp"
#include "mfe/render/texture.hpp"
#include "mfe/shading/render.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace mfe {
namespace texrecover {

std::size_t RecoveredTexture::num_valid() const
{
    return static_cast<std::size_t>(std::count_if(validity.data().begin(), validity.data().end(),
                                                  [](double v) { return v > 0.0; }));
}

namespace {

// One observed pixel: which texels it reads, its irradiance and its value.
struct Sample
{
    std::array<std::int32_t, 4> texel{};
    std::array<double, 4> weight{};
    Eigen::Vector3d irradiance;
    Eigen::Vector3d target;
};

struct ViewSamples
{
    std::vector<Sample> samples;
};

ViewSamples collect_samples(const View& view, const morphablemodel::MorphableModel& model, int texture_size,
                            double front_threshold)
{
    const auto& p = view.params;
    p.camera.validate();
    if (view.image.width() != p.camera.width || view.image.height() != p.camera.height || view.image.channels() != 3)
        throw DimensionError("recover: view image does not match its camera");
    if (view.mask)
        require_same_size(view.image, *view.mask, "recover");

    const Image white(1, 1, 3, 1.0);
    const shading::Frame frame = shading::render_illuminated(model, p.coeffs, p.pose, p.camera, white, p.lighting);
    const Mesh& topology = model.topology();
    const Eigen::Matrix3d r = p.pose.rotation_matrix();
    const auto& g = frame.gbuffer;

    ViewSamples out;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
        {
            const std::size_t i = g.index(x, y);
            if (!g.covered(i) || (view.mask && !(*view.mask)(x, y)))
                continue;
            const auto& t = topology.triangles[g.triangle[i]];
            const Eigen::Vector3d& w = g.barycentric[i];
            Eigen::Vector3d normal = Eigen::Vector3d::Zero(), position = Eigen::Vector3d::Zero();
            for (int j = 0; j < 3; ++j)
            {
                normal += w(j) * frame.normals[t[j]];
                position += w(j) * frame.projection.camera_space[t[j]];
            }
            const Eigen::Vector3d n_cam = r * normal;
            const double denom = n_cam.norm() * position.norm();
            if (!(denom > 0.0) || -n_cam.dot(position) / denom <= front_threshold)
                continue;
            const Eigen::Vector2d uv = render::interpolate_uv(g, i, topology.triangles, topology.uv);
            const render::BilinearFootprint fp = render::bilinear_footprint(texture_size, texture_size, uv);
            Sample s;
            for (int k = 0; k < 4; ++k)
            {
                s.texel[k] = fp.y[k] * texture_size + fp.x[k];
                s.weight[k] = fp.weight[k];
            }
            for (int c = 0; c < 3; ++c)
            {
                s.irradiance(c) = frame.irradiance(x, y, c);
                s.target(c) = view.image(x, y, c);
            }
            out.samples.push_back(s);
        }
    return out;
}

Image validity_from(const std::vector<ViewSamples>& views, int texture_size)
{
    Image validity(texture_size, texture_size, 1);
    const auto v = validity.data();
    for (const auto& view : views)
        for (const auto& s : view.samples)
            for (int k = 0; k < 4; ++k)
                v[static_cast<std::size_t>(s.texel[k])] += s.weight[k];
    for (double& x : v)
        x = std::min(1.0, x);
    return validity;
}

constexpr double kCharbonnierEps = 1e-3;

// Loss and texel gradient for the current texture (interleaved RGB).
double loss_and_gradient(const std::vector<ViewSamples>& views, const Eigen::VectorXd& tex, int size,
                         double tv_weight, Eigen::VectorXd& grad)
{
    std::vector<double> view_loss(views.size(), 0.0);
    std::vector<Eigen::VectorXd> view_grad(views.size());
    parallel_for(views.size(), [&](std::size_t v) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(tex.size());
        const auto& samples = views[v].samples;
        if (samples.empty())
        {
            view_grad[v] = std::move(g);
            return;
        }
        const double scale = 1.0 / (3.0 * static_cast<double>(samples.size()));
        double loss = 0.0;
        for (const auto& s : samples)
            for (int c = 0; c < 3; ++c)
            {
                double albedo = 0.0;
                for (int k = 0; k < 4; ++k)
                    albedo += s.weight[k] * tex(3 * s.texel[k] + c);
                const double pre = albedo * s.irradiance(c);
                const double rendered = std::clamp(pre, 0.0, 1.0);
                const double residual = rendered - s.target(c);
                loss += residual * residual;
                if (pre < 0.0 || pre > 1.0)
                    continue;
                const double d_albedo = 2.0 * scale * residual * s.irradiance(c);
                for (int k = 0; k < 4; ++k)
                    g(3 * s.texel[k] + c) += s.weight[k] * d_albedo;
            }
        view_loss[v] = loss * scale;
        view_grad[v] = std::move(g);
    });
    grad = Eigen::VectorXd::Zero(tex.size());
    double loss = 0.0;
    for (std::size_t v = 0; v < views.size(); ++v)
    {
        loss += view_loss[v];
        grad += view_grad[v];
    }

    if (tv_weight > 0.0)
    {
        const double scale = tv_weight / (static_cast<double>(size) * size);
        double tv = 0.0;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < 3; ++c)
                {
                    const Eigen::Index i = 3 * (static_cast<Eigen::Index>(y) * size + x) + c;
                    const Eigen::Index ix = x + 1 < size ? i + 3 : i;
                    const Eigen::Index iy = y + 1 < size ? i + 3 * size : i;
                    const double dx = tex(ix) - tex(i), dy = tex(iy) - tex(i);
                    const double s = std::sqrt(dx * dx + dy * dy + kCharbonnierEps * kCharbonnierEps);
                    tv += s;
                    grad(ix) += scale * dx / s;
                    grad(iy) += scale * dy / s;
                    grad(i) -= scale * (dx + dy) / s;
                }
        loss += scale * tv;
    }
    return loss;
}

std::vector<ViewSamples> collect_all(const std::vector<View>& views, const morphablemodel::MorphableModel& model,
                                     int texture_size, double front_threshold)
{
    if (views.empty())
        throw VisibilityError("recover: no views");
    if (texture_size < 1)
        throw DimensionError("recover: texture size must be positive");
    std::vector<ViewSamples> out;
    for (const auto& v : views)
        out.push_back(collect_samples(v, model, texture_size, front_threshold));
    return out;
}

} // namespace

Image accumulate_validity(const std::vector<View>& views, const morphablemodel::MorphableModel& model, int texture_size,
                          double front_threshold)
{
    return validity_from(collect_all(views, model, texture_size, front_threshold), texture_size);
}

RecoveredTexture recover(const std::vector<View>& views, const morphablemodel::MorphableModel& model, int texture_size,
                         const RecoverOptions& options)
{
    const std::vector<ViewSamples> samples = collect_all(views, model, texture_size, options.front_threshold);
    RecoveredTexture out;
    out.validity = validity_from(samples, texture_size);
    if (out.num_valid() == 0)
        throw VisibilityError("recover: no texel is visible in any view");

    const std::size_t texels = static_cast<std::size_t>(texture_size) * texture_size;
    Eigen::VectorXd tex = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(3 * texels), 0.5);
    if (options.backprojection_init)
    {
        // Weighted average of pixel / irradiance over the observations of each texel.
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(tex.size()), weight = Eigen::VectorXd::Zero(tex.size());
        for (const auto& view : samples)
            for (const auto& s : view.samples)
                for (int c = 0; c < 3; ++c)
                {
                    if (!(s.irradiance(c) > 1e-3))
                        continue;
                    const double value = s.target(c) / s.irradiance(c);
                    for (int k = 0; k < 4; ++k)
                    {
                        sum(3 * s.texel[k] + c) += s.weight[k] * value;
                        weight(3 * s.texel[k] + c) += s.weight[k];
                    }
                }
        for (Eigen::Index i = 0; i < tex.size(); ++i)
            if (weight(i) > 0.0)
                tex(i) = std::clamp(sum(i) / weight(i), 0.0, 1.0);
    }

    Eigen::VectorXd grad;
    double loss = loss_and_gradient(samples, tex, texture_size, options.tv_weight, grad);
    out.loss_trace.push_back(loss);
    fitting::Adam adam(static_cast<int>(tex.size()), options.learning_rate);
    double lr = options.learning_rate;
    for (int it = 0; it < options.iterations; ++it)
    {
        const fitting::Adam saved = adam;
        Eigen::VectorXd candidate = tex;
        adam.set_learning_rate(lr);
        adam.step(candidate, grad);
        candidate = candidate.cwiseMax(0.0).cwiseMin(1.0);
        Eigen::VectorXd candidate_grad;
        const double candidate_loss =
            loss_and_gradient(samples, candidate, texture_size, options.tv_weight, candidate_grad);
        if (candidate_loss <= loss)
        {
            tex = std::move(candidate);
            grad = std::move(candidate_grad);
            loss = candidate_loss;
        }
        else
        {
            adam = saved;
            lr *= 0.5;
        }
        out.loss_trace.push_back(loss);
    }

    out.texture = Image(texture_size, texture_size, 3);
    std::copy(tex.data(), tex.data() + tex.size(), out.texture.data().begin());
    return out;
}

Image inpaint_invalid(const RecoveredTexture& rtex, int max_iterations, double tolerance)
{
    const Image& tex = rtex.texture;
    const int w = tex.width(), h = tex.height(), channels = tex.channels();
    if (rtex.validity.width() != w || rtex.validity.height() != h)
        throw DimensionError("inpaint_invalid: validity does not match the texture");
    if (rtex.num_valid() == 0)
        throw VisibilityError("inpaint_invalid: no valid texels");
    Image out = tex;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<std::uint8_t> known(n);
    std::vector<int> invalid;
    for (std::size_t i = 0; i < n; ++i)
    {
        known[i] = rtex.validity.data()[i] > 0.0;
        if (!known[i])
            invalid.push_back(static_cast<int>(i));
    }
    if (invalid.empty())
        return out;

    const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
    // Breadth-first dilation: each invalid texel starts at the mean of its already-filled neighbours.
    {
        std::vector<std::uint8_t> filled = known;
        std::deque<int> queue;
        for (int i : invalid)
        {
            const int x = i % w, y = i / w;
            for (int k = 0; k < 4; ++k)
            {
                const int nx = x + dx[k], ny = y + dy[k];
                if (nx >= 0 && ny >= 0 && nx < w && ny < h && known[ny * w + nx])
                {
                    queue.push_back(i);
                    break;
                }
            }
        }
        std::vector<std::uint8_t> queued(n, 0);
        for (int i : queue)
            queued[i] = 1;
        while (!queue.empty())
        {
            const int i = queue.front();
            queue.pop_front();
            const int x = i % w, y = i / w;
            int count = 0;
            std::vector<double> sum(static_cast<std::size_t>(channels), 0.0);
            for (int k = 0; k < 4; ++k)
            {
                const int nx = x + dx[k], ny = y + dy[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    continue;
                const int j = ny * w + nx;
                if (filled[j])
                {
                    ++count;
                    for (int c = 0; c < channels; ++c)
                        sum[c] += out(nx, ny, c);
                }
                else if (!queued[j])
                {
                    queued[j] = 1;
                    queue.push_back(j);
                }
            }
            for (int c = 0; c < channels; ++c)
                out(x, y, c) = sum[c] / count;
            filled[i] = 1;
        }
    }

    // Successive over-relaxation of the discrete Laplace equation on the invalid texels.
    const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / std::max(w, h)));
    for (int it = 0; it < max_iterations; ++it)
    {
        double max_change = 0.0;
        for (int i : invalid)
        {
            const int x = i % w, y = i / w;
            int count = 0;
            for (int c = 0; c < channels; ++c)
            {
                double sum = 0.0;
                count = 0;
                for (int k = 0; k < 4; ++k)
                {
                    const int nx = x + dx[k], ny = y + dy[k];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                        continue;
                    sum += out(nx, ny, c);
                    ++count;
                }
                const double target = sum / count;
                const double change = omega * (target - out(x, y, c));
                out(x, y, c) += change;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        if (max_change < tolerance)
            break;
    }
    return out;
}

Image relight(const Image& texture, const morphablemodel::MorphableModel& model,
              const morphablemodel::ShapeCoeffs& coeffs, const render::RigidPose& pose, const render::Camera& camera,
              const shading::SHLighting& lighting)
{
    return shading::render_illuminated(model, coeffs, pose, camera, texture, lighting).image;
}

Mask front_hemisphere_texels(const morphablemodel::MorphableModel& model, int texture_size)
{
    const Mesh& mesh = model.topology();
    std::vector<Eigen::Vector3d> screen(mesh.uv.size());
    for (std::size_t i = 0; i < screen.size(); ++i)
        screen[i] = Eigen::Vector3d(mesh.uv[i].x() * texture_size, (1.0 - mesh.uv[i].y()) * texture_size, 1.0);
    const render::Camera camera = render::Camera::centred(texture_size, texture_size, 1.0);
    render::RasterOptions options;
    options.cull_back_faces = false;
    const render::GBuffer g = render::rasterize(screen, mesh.triangles, camera, options);
    const VertexNormals normals = vertex_normals(mesh);
    Mask out(texture_size, texture_size);
    for (int y = 0; y < texture_size; ++y)
        for (int x = 0; x < texture_size; ++x)
        {
            const std::size_t i = g.index(x, y);
            if (!g.covered(i))
                continue;
            const auto& t = mesh.triangles[g.triangle[i]];
            const Eigen::Vector3d& w = g.barycentric[i];
            const double nz = w(0) * normals.normals[t[0]].z() + w(1) * normals.normals[t[1]].z() +
                              w(2) * normals.normals[t[2]].z();
            out(x, y) = nz < 0.0 ? 1 : 0;
        }
    return out;
}

double validity_coverage(const Image& validity, const Mask& region)
{
    require_same_size(validity, region, "validity_coverage");
    std::size_t total = 0, seen = 0;
    for (int y = 0; y < region.height(); ++y)
        for (int x = 0; x < region.width(); ++x)
        {
            if (!region(x, y))
                continue;
            ++total;
            if (validity(x, y, 0) > 0.0)
                ++seen;
        }
    if (total == 0)
        throw DimensionError("validity_coverage: empty region");
    return static_cast<double>(seen) / static_cast<double>(total);
}

} // namespace texrecover
} // namespace mfe
