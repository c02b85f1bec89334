/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/ablation.cpp
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
#include "mfe/experiments/ablation.hpp"
#include "mfe/compositor/compositor.hpp"
#include "mfe/core/random.hpp"
#include "mfe/metrics/metrics.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/shading/render.hpp"
#include "mfe/synthcorpus/synthcorpus.hpp"

#include <chrono>
#include <cstdio>
#include <numbers>

namespace mfe {
namespace experiments {

texrecover::View synthetic_view(const morphablemodel::MorphableModel& model, const Image& texture, double yaw_degrees,
                                const shading::SHLighting& lighting, const RecoverySetup& setup)
{
    fitting::FaceParams p;
    p.coeffs = model.zero_coefficients();
    p.camera = render::Camera::centred(setup.image_size, setup.image_size, setup.focal);
    p.pose.rotation =
        render::matrix_to_axis_angle(render::euler_to_matrix(yaw_degrees * std::numbers::pi / 180.0, 0.0, 0.0));
    p.pose.translation = Eigen::Vector3d(0.0, 0.0, setup.distance);
    p.lighting = lighting;
    const Image backdrop(setup.image_size, setup.image_size, 3, 0.5);
    synthcorpus::GroundTruth gt = synthcorpus::generate_ground_truth(p, model, texture, backdrop);
    return {std::move(gt.image), p, std::move(gt.mask)};
}

shading::SHLighting side_lighting()
{
    shading::SHLighting l = shading::SHLighting::constant(0.85);
    for (int c = 0; c < 3; ++c)
    {
        l.gamma(c, 1) = 0.25;  // from above
        l.gamma(c, 3) = -0.45; // from the left
        l.gamma(c, 2) = 0.2;   // towards the viewer
    }
    return l;
}

namespace {

Mask visible(const Image& validity)
{
    Mask m(validity.width(), validity.height());
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = validity.data()[i] > 0.0;
    return m;
}

} // namespace

std::string RotationReport::text() const
{
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "rotations: front-hemisphere validity coverage frontal %.4f, three views %.4f (margin %+.4f) %s\n",
                  frontal_coverage, three_view_coverage, three_view_coverage - frontal_coverage,
                  passed ? "PASS" : "FAIL");
    return buf;
}

RotationReport rotation_ablation(const morphablemodel::MorphableModel& model, std::uint64_t seed,
                                 const RecoverySetup& setup)
{
    const Image texture = synthcorpus::procedural_texture(seed, setup.texture_size);
    const auto light = shading::SHLighting::constant(1.0);
    const auto left = synthetic_view(model, texture, -45.0, light, setup);
    const auto front = synthetic_view(model, texture, 0.0, light, setup);
    const auto right = synthetic_view(model, texture, 45.0, light, setup);
    const Mask region = texrecover::front_hemisphere_texels(model, setup.texture_size);
    RotationReport r;
    r.frontal_coverage =
        texrecover::validity_coverage(texrecover::accumulate_validity({front}, model, setup.texture_size), region);
    r.three_view_coverage = texrecover::validity_coverage(
        texrecover::accumulate_validity({left, front, right}, model, setup.texture_size), region);
    r.passed = r.three_view_coverage > r.frontal_coverage && r.three_view_coverage >= 0.95;
    return r;
}

std::string MouthReport::text() const
{
    char buf[384];
    std::snprintf(buf, sizeof buf,
                  "mouth: %d composites (%d with open mouth), changed pixels outside the effective mask %ld, "
                  "inside the mouth %ld; face pixels the mouth mask removed %ld %s\n",
                  composites, with_open_mouth, violations_outside, violations_mouth,
                  face_pixels_in_mouth_without_removal, passed ? "PASS" : "FAIL");
    return buf;
}

MouthReport mouth_ablation(const morphablemodel::MorphableModel& model, std::uint64_t seed, int count)
{
    synthcorpus::SampleSpec spec;
    spec.seed = seed;
    spec.count = count;
    spec.coefficient_range = 2.5;
    spec.coefficient_scale = 1.5;
    const auto params = synthcorpus::sample_params(spec, model);
    MouthReport report;
    for (int i = 0; i < count; ++i)
    {
        const std::uint64_t s = synthcorpus::item_seed(seed, i);
        const auto& p = params[static_cast<std::size_t>(i)];
        const Image texture = synthcorpus::procedural_texture(derive_seed(s, 1), 128);
        const Image background = synthcorpus::procedural_backdrop(derive_seed(s, 2), p.camera.width, p.camera.height);
        const shading::Frame frame =
            shading::render_illuminated(model, p.coeffs, p.pose, p.camera, texture, p.lighting);
        const compositor::MouthMask mouth = compositor::mouth_mask(frame.projection.screen, model.mouth_loop(), p.camera);
        const Image out = compositor::composite(frame.image, frame.mask, mouth.mask, background);
        const Mask effective = compositor::effective_mask(frame.mask, mouth.mask);
        ++report.composites;
        if (mouth.mask.count() > 0)
            ++report.with_open_mouth;
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
            {
                bool differs = false;
                for (int c = 0; c < 3; ++c)
                    differs = differs || out(x, y, c) != background(x, y, c);
                if (!effective(x, y) && differs)
                    ++report.violations_outside;
                if (mouth.mask(x, y) && differs)
                    ++report.violations_mouth;
                if (mouth.mask(x, y) && frame.mask(x, y))
                    ++report.face_pixels_in_mouth_without_removal;
            }
    }
    report.passed = report.violations_outside == 0 && report.violations_mouth == 0 && report.with_open_mouth > 0;
    return report;
}

std::string RelightReport::text() const
{
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "relight: albedo L1 with known lighting %.5f, with constant lighting %.5f, ratio %.2f (need >= 2) %s\n",
                  l1_known_lighting, l1_constant_lighting, ratio, passed ? "PASS" : "FAIL");
    return buf;
}

RelightReport relight_ablation(const morphablemodel::MorphableModel& model, std::uint64_t seed,
                               const RecoverySetup& setup)
{
    const Image texture = synthcorpus::procedural_texture(seed, setup.texture_size);
    const texrecover::View lit = synthetic_view(model, texture, 0.0, side_lighting(), setup);
    texrecover::View baked = lit;
    baked.params.lighting = shading::SHLighting::constant(1.0);
    const auto known = texrecover::recover({lit}, model, setup.texture_size);
    const auto constant = texrecover::recover({baked}, model, setup.texture_size);
    const Mask region = visible(known.validity);
    RelightReport r;
    r.l1_known_lighting = metrics::l1(known.texture, texture, region);
    r.l1_constant_lighting = metrics::l1(constant.texture, texture, region);
    r.ratio = r.l1_constant_lighting / r.l1_known_lighting;
    r.passed = r.ratio >= 2.0;
    return r;
}

std::string FitTrial::text() const
{
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "fit: PSNR %.2f -> %.2f dB, rotation error %.3f -> %.3f deg, translation error %.4f, "
                  "%d iterations, %.1f s %s\n",
                  initial_psnr, psnr, initial_rotation_error_deg, rotation_error_deg, translation_error, iterations,
                  seconds, passed ? "PASS" : "FAIL");
    return buf;
}

FitTrial fit_round_trip(const morphablemodel::MorphableModel& model, std::uint64_t seed, int index,
                        const FitRoundTripSetup& setup)
{
    synthcorpus::SampleSpec spec;
    spec.seed = seed;
    spec.count = index + 1;
    spec.image_size = setup.image_size;
    spec.focal = setup.focal;
    const fitting::FaceParams truth = synthcorpus::sample_params(spec, model)[static_cast<std::size_t>(index)];
    const std::uint64_t item = synthcorpus::item_seed(seed, index);
    const Image texture = synthcorpus::procedural_texture(derive_seed(item, 1), spec.texture_size);
    const Image backdrop = synthcorpus::procedural_backdrop(derive_seed(item, 2), setup.image_size, setup.image_size);
    const synthcorpus::GroundTruth gt = synthcorpus::generate_ground_truth(truth, model, texture, backdrop);

    Rng rng(derive_seed(item, 3));
    fitting::FaceParams init = truth;
    const double d = setup.pose_perturbation_deg * std::numbers::pi / 180.0;
    const Eigen::Matrix3d perturb = render::euler_to_matrix(rng.uniform(-d, d), rng.uniform(-d, d), rng.uniform(-d, d));
    init.pose.rotation = render::matrix_to_axis_angle(perturb * truth.pose.rotation_matrix());
    const double c = setup.coefficient_perturbation;
    for (Eigen::Index k = 0; k < init.coeffs.shape.size(); ++k)
        init.coeffs.shape(k) += rng.uniform(-c, c) * model.shape_sigmas()(k);
    for (Eigen::Index k = 0; k < init.coeffs.expression.size(); ++k)
        init.coeffs.expression(k) += rng.uniform(-c, c) * model.expression_sigmas()(k);

    // Face over the known backdrop, as the target was made.
    const auto composite = [&](const fitting::FaceParams& p) {
        const auto f = shading::render_illuminated(model, p.coeffs, p.pose, p.camera, texture, p.lighting);
        Image out = backdrop;
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
                if (f.mask(x, y))
                    for (int ch = 0; ch < 3; ++ch)
                        out(x, y, ch) = f.image(x, y, ch);
        return out;
    };

    FitTrial t;
    t.initial_psnr = metrics::psnr(composite(init), gt.image, gt.mask).db;
    t.initial_rotation_error_deg =
        render::geodesic_distance(init.pose.rotation_matrix(), truth.pose.rotation_matrix()) * 180.0 / std::numbers::pi;
    const auto start = std::chrono::steady_clock::now();
    const fitting::FitResult r = fitting::fit(gt.image, model, texture, init, gt.landmarks, setup.options);
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    t.iterations = setup.options.landmark_iterations + setup.options.joint_iterations;
    t.psnr = metrics::psnr(composite(r.params), gt.image, gt.mask).db;
    t.rotation_error_deg = render::geodesic_distance(r.params.pose.rotation_matrix(), truth.pose.rotation_matrix()) *
                           180.0 / std::numbers::pi;
    t.translation_error = (r.params.pose.translation - truth.pose.translation).norm() / truth.pose.translation.z();
    t.passed = t.psnr >= setup.min_psnr && t.rotation_error_deg <= setup.max_rotation_error_deg &&
               t.iterations <= setup.max_iterations;
    return t;
}

} // namespace experiments
} // namespace mfe
