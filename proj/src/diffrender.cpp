/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/diffrender.cpp
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
#include "mfe/diffrender/diffrender.hpp"
#include "mfe/core/Error.hpp"
#include "mfe/core/parallel.hpp"
#include "mfe/core/random.hpp"
#include "mfe/render/texture.hpp"

#include "Eigen/Geometry"
#include "Eigen/QR"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>

namespace mfe {
namespace diffrender {

shading::Frame RenderScene::render() const
{
    if (!model)
        throw DimensionError("RenderScene has no model");
    return shading::render_illuminated(*model, params.coeffs, params.pose, params.camera, texture, params.lighting);
}

bool Gradients::all_finite() const
{
    if (!shape.allFinite() || !expression.allFinite() || !pose.allFinite() || !gamma.allFinite() ||
        !std::isfinite(focal))
        return false;
    for (double v : texture.data())
        if (!std::isfinite(v))
            return false;
    return true;
}

namespace {

void check_loss_inputs(const Image& rendered, const Image& target, const Mask& mask)
{
    require_same_size(rendered, target, "photometric_loss");
    require_same_size(rendered, mask, "photometric_loss");
    if (mask.count() == 0)
        throw DegenerateLossError("photometric_loss: empty mask");
}

} // namespace

double photometric_loss(const Image& rendered, const Image& target, const Mask& mask)
{
    check_loss_inputs(rendered, target, mask);
    const int channels = rendered.channels();
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < rendered.height(); ++y)
        for (int x = 0; x < rendered.width(); ++x)
        {
            if (!mask(x, y))
                continue;
            ++count;
            for (int c = 0; c < channels; ++c)
            {
                const double d = rendered(x, y, c) - target(x, y, c);
                sum += d * d;
            }
        }
    return sum / (static_cast<double>(count) * channels);
}

Image photometric_loss_gradient(const Image& rendered, const Image& target, const Mask& mask)
{
    check_loss_inputs(rendered, target, mask);
    const int channels = rendered.channels();
    const double scale = 2.0 / (static_cast<double>(mask.count()) * channels);
    Image grad(rendered.width(), rendered.height(), channels);
    for (int y = 0; y < rendered.height(); ++y)
        for (int x = 0; x < rendered.width(); ++x)
        {
            if (!mask(x, y))
                continue;
            for (int c = 0; c < channels; ++c)
                grad(x, y, c) = scale * (rendered(x, y, c) - target(x, y, c));
        }
    return grad;
}

namespace {

// Gradient contributions of one pixel, scattered after the parallel pass.
struct PixelGrad
{
    bool active = false;
    std::int32_t triangle = -1;
    std::array<Eigen::Vector3d, 3> d_screen;     // d(x, y, z) per corner
    std::array<Eigen::Vector3d, 3> d_irradiance; // per corner, RGB
    render::BilinearFootprint footprint;
    Eigen::Vector3d d_albedo = Eigen::Vector3d::Zero();
};

PixelGrad pixel_gradient(const shading::Frame& frame, const Mesh& topology, const Image& texture,
                         const Image& d_image, int x, int y)
{
    PixelGrad out;
    const auto& g = frame.gbuffer;
    const std::size_t i = g.index(x, y);
    if (!g.covered(i))
        return out;
    Eigen::Vector3d d_pre;
    for (int c = 0; c < 3; ++c)
    {
        const double p = frame.product(x, y, c);
        d_pre(c) = (p >= 0.0 && p <= 1.0) ? d_image(x, y, c) : 0.0;
    }
    if (d_pre.isZero())
        return out;

    out.active = true;
    out.triangle = g.triangle[i];
    const auto& t = topology.triangles[g.triangle[i]];
    const Eigen::Vector3d& w = g.barycentric[i];
    Eigen::Vector3d albedo, irr;
    for (int c = 0; c < 3; ++c)
    {
        albedo(c) = frame.albedo(x, y, c);
        irr(c) = frame.irradiance(x, y, c);
    }
    const Eigen::Vector3d d_albedo = d_pre.cwiseProduct(irr);
    const Eigen::Vector3d d_irr = d_pre.cwiseProduct(albedo);
    out.d_albedo = d_albedo;

    const Eigen::Vector2d uv = render::interpolate_uv(g, i, topology.triangles, topology.uv);
    out.footprint = render::bilinear_footprint(texture.width(), texture.height(), uv);
    Eigen::Vector2d d_uv = Eigen::Vector2d::Zero();
    for (int k = 0; k < 4; ++k)
    {
        double s = 0.0;
        for (int c = 0; c < 3; ++c)
            s += d_albedo(c) * texture(out.footprint.x[k], out.footprint.y[k], c);
        d_uv.x() += s * out.footprint.d_weight_du[k];
        d_uv.y() += s * out.footprint.d_weight_dv[k];
    }

    Eigen::Vector3d d_w;
    for (int j = 0; j < 3; ++j)
    {
        d_w(j) = d_uv.dot(topology.uv[t[j]]) + d_irr.dot(frame.vertex_irradiance[t[j]]);
        out.d_irradiance[j] = w(j) * d_irr;
    }

    // Perspective-correct barycentrics w = q / sum(q), q_j = b_j / z_j, with
    // b the screen-space barycentrics of the pixel centre.
    const auto& sv = frame.projection.screen;
    const Eigen::Vector3d& v0 = sv[t[0]];
    const Eigen::Vector3d& v1 = sv[t[1]];
    const Eigen::Vector3d& v2 = sv[t[2]];
    const double px = x + 0.5, py = y + 0.5;
    const double area = render::edge_function(v0, v1, v2.x(), v2.y());
    const Eigen::Vector3d b(render::edge_function(v1, v2, px, py) / area, render::edge_function(v2, v0, px, py) / area,
                            render::edge_function(v0, v1, px, py) / area);
    const Eigen::Vector3d z(v0.z(), v1.z(), v2.z());
    const Eigen::Vector3d q = b.cwiseQuotient(z);
    const double sum = q.sum();
    const double w_dot = d_w.dot(w);
    const Eigen::Vector3d d_q = (d_w.array() - w_dot).matrix() / sum;
    const Eigen::Vector3d d_b = d_q.cwiseQuotient(z);

    // db/dpixel, i.e. the columns of the inverse barycentric system
    const Eigen::Vector3d db_dpx(-(v2.y() - v1.y()) / area, -(v0.y() - v2.y()) / area, -(v1.y() - v0.y()) / area);
    const Eigen::Vector3d db_dpy((v2.x() - v1.x()) / area, (v0.x() - v2.x()) / area, (v1.x() - v0.x()) / area);
    const double gx = d_b.dot(db_dpx);
    const double gy = d_b.dot(db_dpy);
    for (int j = 0; j < 3; ++j)
    {
        out.d_screen[j] = Eigen::Vector3d(-b(j) * gx, -b(j) * gy, -d_q(j) * b(j) / (z(j) * z(j)));
    }
    return out;
}

} // namespace

Gradients backward(const RenderScene& scene, const shading::Frame& frame, const Image& d_image)
{
    const auto& model = *scene.model;
    const Mesh& topology = model.topology();
    const auto& params = scene.params;
    const Image& texture = scene.texture;
    if (d_image.width() != frame.image.width() || d_image.height() != frame.image.height() || d_image.channels() != 3)
        throw DimensionError("backward: image gradient does not match the render");

    const std::size_t nv = frame.vertices.size();
    std::vector<Eigen::Vector3d> d_screen(nv, Eigen::Vector3d::Zero());
    std::vector<Eigen::Vector3d> d_vertex_irr(nv, Eigen::Vector3d::Zero());

    Gradients grads;
    grads.texture = Image(texture.width(), texture.height(), 3);

    // Pixels are processed in bands; each band is reduced in pixel order, so
    // the result does not depend on the thread count.
    const int width = frame.image.width(), height = frame.image.height();
    constexpr int kBandTiles = 8;
    const int tiles = (height + kTileRows - 1) / kTileRows;
    std::vector<PixelGrad> band(static_cast<std::size_t>(kBandTiles) * kTileRows * width);
    for (int first_tile = 0; first_tile < tiles; first_tile += kBandTiles)
    {
        const int band_tiles = std::min(kBandTiles, tiles - first_tile);
        const int row0 = first_tile * kTileRows;
        parallel_for(static_cast<std::size_t>(band_tiles), [&](std::size_t k) {
            const int y_begin = row0 + static_cast<int>(k) * kTileRows;
            const int y_end = std::min(height, y_begin + kTileRows);
            for (int y = y_begin; y < y_end; ++y)
                for (int x = 0; x < width; ++x)
                    band[static_cast<std::size_t>(y - row0) * width + x] =
                        pixel_gradient(frame, topology, texture, d_image, x, y);
        });
        const int rows = std::min(height - row0, band_tiles * kTileRows);
        for (std::size_t p = 0; p < static_cast<std::size_t>(rows) * width; ++p)
        {
            const PixelGrad& pg = band[p];
            if (!pg.active)
                continue;
            const auto& t = topology.triangles[pg.triangle];
            for (int j = 0; j < 3; ++j)
            {
                d_screen[t[j]] += pg.d_screen[j];
                d_vertex_irr[t[j]] += pg.d_irradiance[j];
            }
            for (int k = 0; k < 4; ++k)
                for (int c = 0; c < 3; ++c)
                    grads.texture(pg.footprint.x[k], pg.footprint.y[k], c) += pg.footprint.weight[k] * pg.d_albedo(c);
        }
    }

    // Per-vertex chain: projection, rigid transform, SH lighting, normals.
    const Eigen::Matrix3d r = params.pose.rotation_matrix();
    const double f = params.camera.focal;
    Eigen::Matrix3d rotation_grad = Eigen::Matrix3d::Zero(); // dL/dR
    Eigen::Vector3d d_translation = Eigen::Vector3d::Zero();
    std::vector<Eigen::Vector3d> d_vertices(nv, Eigen::Vector3d::Zero());
    std::vector<Eigen::Vector3d> d_normal_sums(nv, Eigen::Vector3d::Zero());
    for (std::size_t i = 0; i < nv; ++i)
    {
        const Eigen::Vector3d& ds = d_screen[i];
        if (!ds.isZero())
        {
            const Eigen::Vector3d& c = frame.projection.camera_space[i];
            const double iz = 1.0 / c.z();
            const Eigen::Vector3d d_cam(ds.x() * f * iz, ds.y() * f * iz,
                                        ds.z() - (ds.x() * f * c.x() + ds.y() * f * c.y()) * iz * iz);
            d_translation += d_cam;
            grads.focal += (ds.x() * c.x() + ds.y() * c.y()) * iz;
            rotation_grad += d_cam * frame.vertices[i].transpose();
            d_vertices[i] += r.transpose() * d_cam;
        }
        const Eigen::Vector3d& di = d_vertex_irr[i];
        if (!di.isZero())
        {
            const Eigen::Vector3d& nl = frame.light_normals[i];
            const shading::SHBasis phi = shading::sh_basis(nl);
            const auto dphi = shading::sh_basis_gradient(nl);
            Eigen::Vector3d d_nl = Eigen::Vector3d::Zero();
            for (int bnd = 0; bnd < shading::kNumSHCoeffs; ++bnd)
            {
                grads.gamma.col(bnd) += di * phi[bnd];
                d_nl += di.dot(params.lighting.gamma.col(bnd)) * dphi[bnd];
            }
            const Eigen::Vector3d d_nc = shading::to_lighting_frame(d_nl); // the flip is its own inverse
            const Eigen::Vector3d& n = frame.normals[i];
            rotation_grad += d_nc * n.transpose();
            if (!frame.degenerate_normal[i])
            {
                const Eigen::Vector3d d_n = r.transpose() * d_nc;
                const double len = frame.normal_sums[i].norm();
                d_normal_sums[i] = (d_n - n * n.dot(d_n)) / len;
            }
        }
    }
    for (const auto& t : topology.triangles)
    {
        const Eigen::Vector3d gsum = d_normal_sums[t[0]] + d_normal_sums[t[1]] + d_normal_sums[t[2]];
        if (gsum.isZero())
            continue;
        const Eigen::Vector3d e1 = frame.vertices[t[1]] - frame.vertices[t[0]];
        const Eigen::Vector3d e2 = frame.vertices[t[2]] - frame.vertices[t[0]];
        const Eigen::Vector3d d1 = e2.cross(gsum);
        const Eigen::Vector3d d2 = gsum.cross(e1);
        d_vertices[t[1]] += d1;
        d_vertices[t[2]] += d2;
        d_vertices[t[0]] -= d1 + d2;
    }

    Eigen::VectorXd d_flat(3 * nv);
    for (std::size_t i = 0; i < nv; ++i)
        d_flat.segment<3>(3 * i) = d_vertices[i];
    grads.shape = model.shape_basis().transpose() * d_flat;
    grads.expression = model.expression_basis().transpose() * d_flat;

    const auto jac = render::axis_angle_jacobian(params.pose.rotation);
    for (int k = 0; k < 3; ++k)
        grads.pose(k) = rotation_grad.cwiseProduct(jac[k]).sum();
    grads.pose.tail<3>() = d_translation;
    return grads;
}

LossAndGradients backward(const RenderScene& scene, const Image& target, const Mask& mask)
{
    const shading::Frame frame = scene.render();
    LossAndGradients out;
    out.loss = photometric_loss(frame.image, target, mask);
    out.gradients = backward(scene, frame, photometric_loss_gradient(frame.image, target, mask));
    return out;
}

const BlockReport* GradcheckReport::block(const std::string& name) const
{
    for (const auto& b : blocks)
        if (b.name == name)
            return &b;
    return nullptr;
}

std::string GradcheckReport::text() const
{
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "gradcheck %s (tolerance %.3g)\n", passed ? "PASS" : "FAIL", tolerance);
    out += line;
    for (const auto& b : blocks)
    {
        std::snprintf(line, sizeof line,
                      "  %-18s checked %4d  max_rel_err %.3e  worst %d  coverage_unstable %zu  nonsmooth %zu"
                      "  refined %d  %s\n",
                      b.name.c_str(), b.checked, b.max_relative_error, b.worst_index, b.coverage_unstable.size(),
                      b.nonsmooth.size(), b.refined, b.passed ? "ok" : "FAIL");
        out += line;
        if (!b.coverage_unstable.empty())
        {
            out += "    excluded (coverage):";
            for (int i : b.coverage_unstable)
                out += " " + std::to_string(i);
            out += "\n";
        }
        if (!b.nonsmooth.empty())
        {
            out += "    excluded (nonsmooth):";
            for (int i : b.nonsmooth)
                out += " " + std::to_string(i);
            out += "\n";
        }
    }
    return out;
}

namespace {

struct Evaluation
{
    double loss = 0.0;
    std::vector<std::int32_t> triangles;
    // Per covered pixel: bilinear cell corners and per-channel clamp state. The
    // loss is smooth in every parameter while all of these stay fixed.
    std::vector<std::int32_t> regime;
};

Evaluation evaluate(const RenderScene& scene, const Image& target, const Mask& mask)
{
    const shading::Frame frame = scene.render();
    Evaluation e{photometric_loss(frame.image, target, mask), frame.gbuffer.triangle, {}};
    const auto& topo = scene.model->topology();
    for (std::size_t i = 0; i < frame.gbuffer.triangle.size(); ++i)
    {
        if (!frame.gbuffer.covered(i))
            continue;
        const auto uv = render::interpolate_uv(frame.gbuffer, i, topo.triangles, topo.uv);
        const auto fp = render::bilinear_footprint(scene.texture.width(), scene.texture.height(), uv);
        e.regime.insert(e.regime.end(), {fp.x[0], fp.x[1], fp.y[0], fp.y[2]});
        std::int32_t clamp_bits = 0;
        for (int c = 0; c < 3; ++c)
        {
            const double p = frame.product.data()[3 * i + static_cast<std::size_t>(c)];
            clamp_bits |= (p <= 0.0 ? 1 : p >= 1.0 ? 2 : 0) << (2 * c);
        }
        e.regime.push_back(clamp_bits);
    }
    return e;
}

// One scalar parameter of a scene, addressed by block and index.
using Accessor = std::function<double&(RenderScene&, int)>;

struct BlockSpec
{
    std::string name;
    std::vector<int> indices;
    Accessor access;
    std::function<double(const Gradients&, int)> analytic;
};

BlockReport check_block(const RenderScene& scene, const Image& target, const Mask& mask,
                        const std::vector<std::int32_t>& base_triangles, const BlockSpec& spec,
                        const Gradients& grads, const GradcheckOptions& options)
{
    BlockReport report;
    report.name = spec.name;
    std::vector<int> kept;
    std::vector<double> analytic, numeric_values;
    const Evaluation base = evaluate(scene, target, mask);
    for (int idx : spec.indices)
    {
        bool covered_same = true, smooth = false;
        double numeric = 0.0;
        // The spec step first; shrink it only to step off a texel or clamp kink.
        for (int attempt = 0; attempt < 3 && covered_same && !smooth; ++attempt)
        {
            RenderScene plus = scene, minus = scene;
            const double x = spec.access(plus, idx);
            const double h = options.relative_step * std::max(std::abs(x), 1.0) * std::pow(1.0 / 16.0, attempt);
            spec.access(plus, idx) = x + h;
            spec.access(minus, idx) = x - h;
            const Evaluation ep = evaluate(plus, target, mask);
            const Evaluation em = evaluate(minus, target, mask);
            covered_same = ep.triangles == base_triangles && em.triangles == base_triangles;
            smooth = covered_same && ep.regime == base.regime && em.regime == base.regime;
            numeric = (ep.loss - em.loss) / (2.0 * h);
            if (smooth && attempt > 0)
                ++report.refined;
        }
        if (!covered_same)
        {
            report.coverage_unstable.push_back(idx);
            continue;
        }
        if (!smooth)
        {
            report.nonsmooth.push_back(idx);
            continue;
        }
        kept.push_back(idx);
        analytic.push_back(spec.analytic(grads, idx));
        numeric_values.push_back(numeric);
    }
    double block_max = 0.0;
    for (std::size_t k = 0; k < kept.size(); ++k)
        block_max = std::max({block_max, std::abs(analytic[k]), std::abs(numeric_values[k])});
    for (std::size_t k = 0; k < kept.size(); ++k)
    {
        const double a = analytic[k], n = numeric_values[k];
        const double denom = std::max({std::abs(a), std::abs(n), 1e-5 * block_max, 1e-12});
        const double err = std::isfinite(a) && std::isfinite(n) ? std::abs(a - n) / denom : INFINITY;
        if (report.worst_index < 0 || err > report.max_relative_error)
        {
            report.max_relative_error = err;
            report.worst_index = kept[k];
        }
    }
    report.checked = static_cast<int>(kept.size());
    report.passed = report.max_relative_error <= options.tolerance;
    return report;
}

std::vector<int> iota(int n)
{
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = i;
    return v;
}

} // namespace

GradcheckReport gradcheck(const RenderScene& scene, const Image& target, const Mask& mask, std::uint64_t seed,
                          const GradcheckOptions& options)
{
    const LossAndGradients base = backward(scene, target, mask);
    const Gradients& g = base.gradients;
    const std::vector<std::int32_t> base_triangles = evaluate(scene, target, mask).triangles;

    std::vector<BlockSpec> specs;
    specs.push_back({"shape", iota(static_cast<int>(g.shape.size())),
                     [](RenderScene& s, int i) -> double& { return s.params.coeffs.shape(i); },
                     [](const Gradients& gr, int i) { return gr.shape(i); }});
    specs.push_back({"expression", iota(static_cast<int>(g.expression.size())),
                     [](RenderScene& s, int i) -> double& { return s.params.coeffs.expression(i); },
                     [](const Gradients& gr, int i) { return gr.expression(i); }});
    specs.push_back({"pose", iota(6),
                     [](RenderScene& s, int i) -> double& {
                         return i < 3 ? s.params.pose.rotation(i) : s.params.pose.translation(i - 3);
                     },
                     [](const Gradients& gr, int i) { return gr.pose(i); }});
    specs.push_back({"focal", {0}, [](RenderScene& s, int) -> double& { return s.params.camera.focal; },
                     [](const Gradients& gr, int) { return gr.focal; }});
    specs.push_back({"lighting", iota(3 * shading::kNumSHCoeffs),
                     [](RenderScene& s, int i) -> double& {
                         return s.params.lighting.gamma(i / shading::kNumSHCoeffs, i % shading::kNumSHCoeffs);
                     },
                     [](const Gradients& gr, int i) {
                         return gr.gamma(i / shading::kNumSHCoeffs, i % shading::kNumSHCoeffs);
                     }});

    // Texture entries: touched texels first, then random ones, up to max_texels.
    const Image& tex = scene.texture;
    const int texels = tex.width() * tex.height();
    std::vector<int> texel_ids;
    if (texels <= options.max_texels)
    {
        texel_ids = iota(texels);
    }
    else
    {
        Rng rng(derive_seed(seed, 1));
        std::vector<int> touched, untouched;
        for (int t = 0; t < texels; ++t)
        {
            const int x = t % tex.width(), y = t / tex.width();
            const bool nonzero = g.texture(x, y, 0) != 0.0 || g.texture(x, y, 1) != 0.0 || g.texture(x, y, 2) != 0.0;
            (nonzero ? touched : untouched).push_back(t);
        }
        const int want_touched = std::min<int>(static_cast<int>(touched.size()), options.max_texels / 2 + options.max_texels % 2);
        for (int k = 0; k < want_touched; ++k)
        {
            const int j = k + static_cast<int>(rng.uniform() * (touched.size() - k));
            std::swap(touched[k], touched[j]);
            texel_ids.push_back(touched[k]);
        }
        std::vector<int> rest = untouched;
        rest.insert(rest.end(), touched.begin() + want_touched, touched.end());
        const int want_rest = std::min<int>(static_cast<int>(rest.size()), options.max_texels - want_touched);
        for (int k = 0; k < want_rest; ++k)
        {
            const int j = k + static_cast<int>(rng.uniform() * (rest.size() - k));
            std::swap(rest[k], rest[j]);
            texel_ids.push_back(rest[k]);
        }
        std::sort(texel_ids.begin(), texel_ids.end());
    }
    std::vector<int> texture_indices;
    for (int t : texel_ids)
        for (int c = 0; c < 3; ++c)
            texture_indices.push_back(3 * t + c);
    const int tex_width = tex.width();
    specs.push_back({"texture", texture_indices,
                     [tex_width](RenderScene& s, int i) -> double& {
                         const int t = i / 3;
                         return s.texture(t % tex_width, t / tex_width, i % 3);
                     },
                     [tex_width](const Gradients& gr, int i) {
                         const int t = i / 3;
                         return gr.texture(t % tex_width, t / tex_width, i % 3);
                     }});

    GradcheckReport report;
    report.tolerance = options.tolerance;
    for (const auto& spec : specs)
    {
        if (spec.indices.empty())
            continue;
        report.blocks.push_back(check_block(scene, target, mask, base_triangles, spec, g, options));
    }

    // Directional derivative along a random texture direction.
    {
        Rng rng(derive_seed(seed, 2));
        Image direction(tex.width(), tex.height(), 3);
        for (double& v : direction.data())
            v = rng.normal();
        double analytic = 0.0;
        for (std::size_t i = 0; i < direction.data().size(); ++i)
            analytic += direction.data()[i] * g.texture.data()[i];
        BlockReport b;
        b.name = "texture_direction";
        const double h = options.relative_step;
        RenderScene plus = scene, minus = scene;
        for (std::size_t i = 0; i < direction.data().size(); ++i)
        {
            plus.texture.data()[i] += h * direction.data()[i];
            minus.texture.data()[i] -= h * direction.data()[i];
        }
        const Evaluation ep = evaluate(plus, target, mask);
        const Evaluation em = evaluate(minus, target, mask);
        const double numeric = (ep.loss - em.loss) / (2.0 * h);
        b.checked = 1;
        b.worst_index = 0;
        b.max_relative_error =
            std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-12});
        b.passed = b.max_relative_error <= options.tolerance;
        report.blocks.push_back(b);
    }

    report.passed = std::all_of(report.blocks.begin(), report.blocks.end(), [](const BlockReport& b) { return b.passed; });
    return report;
}

namespace {

Eigen::MatrixXd random_orthonormal(Rng& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index active_rows)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < active_rows; ++r)
            m(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m.topRows(active_rows));
    m.topRows(active_rows) = qr.householderQ() * Eigen::MatrixXd::Identity(active_rows, cols);
    return m;
}

} // namespace

ToyScene make_toy_scene(std::uint64_t seed, const ToySceneOptions& options)
{
    if (options.image_size < 4 || options.grid < 2 || options.texture_size < 1)
        throw DimensionError("make_toy_scene: scene too small");
    Rng rng(seed);
    const int n = options.grid;

    // Gently curved patch facing the camera (outward normal towards -z).
    Mesh mesh;
    const double a1 = rng.uniform(-0.15, 0.15), a2 = rng.uniform(-0.15, 0.15), a3 = rng.uniform(-0.1, 0.1);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
        {
            const double x = -0.5 + static_cast<double>(c) / (n - 1);
            const double y = 0.5 - static_cast<double>(r) / (n - 1);
            const double z = 0.2 * (x * x + y * y) + a1 * std::sin(3.0 * x) + a2 * std::cos(2.5 * y) + a3 * x * y;
            mesh.vertices.emplace_back(x, y, z);
            mesh.uv.emplace_back(0.1 + 0.8 * c / (n - 1), 0.1 + 0.8 * r / (n - 1));
        }
    for (int r = 0; r + 1 < n; ++r)
        for (int c = 0; c + 1 < n; ++c)
        {
            const int v00 = r * n + c, v01 = v00 + 1, v10 = v00 + n, v11 = v10 + 1;
            mesh.triangles.emplace_back(v00, v01, v10);
            mesh.triangles.emplace_back(v01, v11, v10);
        }
    const int patch_vertices = static_cast<int>(mesh.vertices.size());

    fitting::FaceParams params;
    params.camera = render::Camera::centred(options.image_size, options.image_size, 0.75 * options.image_size * 3.0 / 1.3);
    params.pose.rotation = Eigen::Vector3d(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15));
    params.pose.translation = Eigen::Vector3d(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 3.0);

    if (options.grazing)
    {
        // A steep triangle in front of the patch whose edge crosses a pixel centre.
        const auto& cam = params.camera;
        const double z = 2.5;
        const double px = 0.5 * options.image_size - 1.5, py = 0.5 * options.image_size - 0.5;
        const Eigen::Vector3d p((px - cam.principal.x()) * z / cam.focal, (py - cam.principal.y()) * z / cam.focal, z);
        const Eigen::Vector3d dir(0.2, 0.06, 0.0);
        Eigen::Vector3d a = p + dir, b = p - dir;
        const Eigen::Vector3d c = p + Eigen::Vector3d(0.02, -0.12, 0.5);
        const auto screen = [&](const Eigen::Vector3d& q) {
            return Eigen::Vector3d(cam.focal * q.x() / q.z() + cam.principal.x(),
                                   cam.focal * q.y() / q.z() + cam.principal.y(), q.z());
        };
        if (render::edge_function(screen(a), screen(b), screen(c).x(), screen(c).y()) > 0.0)
            std::swap(a, b);
        const Eigen::Matrix3d r = params.pose.rotation_matrix();
        const int base = static_cast<int>(mesh.vertices.size());
        for (const Eigen::Vector3d& q : {a, b, c})
        {
            mesh.vertices.push_back(r.transpose() * (q - params.pose.translation));
            mesh.uv.emplace_back(0.5, 0.5);
        }
        mesh.triangles.emplace_back(base, base + 1, base + 2);
    }

    const Eigen::Index dims = 3 * static_cast<Eigen::Index>(mesh.vertices.size());
    Eigen::VectorXd mean(dims);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        mean.segment<3>(3 * static_cast<Eigen::Index>(i)) = mesh.vertices[i];
    // Only patch vertices move with the coefficients.
    const Eigen::MatrixXd shape_basis = random_orthonormal(rng, dims, 3, 3 * patch_vertices);
    const Eigen::MatrixXd expression_basis = random_orthonormal(rng, dims, 2, 3 * patch_vertices);
    auto model = std::make_shared<morphablemodel::MorphableModel>(
        mean, shape_basis, Eigen::VectorXd::Constant(3, 0.05), expression_basis, Eigen::VectorXd::Constant(2, 0.03),
        mesh, std::vector<int>{0, 1, n});

    params.coeffs = model->zero_coefficients();
    for (int k = 0; k < 3; ++k)
        params.coeffs.shape(k) = rng.normal(0.0, 0.05);
    for (int k = 0; k < 2; ++k)
        params.coeffs.expression(k) = rng.normal(0.0, 0.03);
    params.lighting = shading::SHLighting::constant(0.9);
    for (int c = 0; c < 3; ++c)
        for (int bnd = 1; bnd < shading::kNumSHCoeffs; ++bnd)
            params.lighting.gamma(c, bnd) = rng.normal(0.0, 0.08);

    Image texture(options.texture_size, options.texture_size, 3);
    if (!options.zero_texture)
        for (double& v : texture.data())
            v = rng.uniform(0.2, 0.8);

    ToyScene toy;
    toy.scene = RenderScene{model, params, texture};
    // Keep the product well inside [0, 1] so no pixel saturates.
    const shading::Frame frame = toy.scene.render();
    double peak = 0.0;
    for (double v : frame.product.data())
        peak = std::max(peak, v);
    if (peak > 0.9)
        for (double& v : toy.scene.texture.data())
            v *= 0.9 / peak;

    RenderScene perturbed = toy.scene;
    for (int k = 0; k < 3; ++k)
        perturbed.params.coeffs.shape(k) += rng.normal(0.0, 0.015);
    for (int k = 0; k < 2; ++k)
        perturbed.params.coeffs.expression(k) += rng.normal(0.0, 0.01);
    for (int k = 0; k < 3; ++k)
        perturbed.params.pose.rotation(k) += rng.uniform(-0.02, 0.02);
    for (int c = 0; c < 3; ++c)
        for (int bnd = 0; bnd < shading::kNumSHCoeffs; ++bnd)
            perturbed.params.lighting.gamma(c, bnd) += rng.normal(0.0, 0.03);
    toy.target = perturbed.render().image;
    for (double& v : toy.target.data())
        v += rng.uniform(-0.02, 0.02);
    toy.mask = Mask(options.image_size, options.image_size);
    for (std::size_t i = 0; i < toy.mask.size(); ++i)
        toy.mask[i] = 1;
    return toy;
}

} // namespace diffrender
} // namespace mfe
