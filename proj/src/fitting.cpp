/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: src/fitting.cpp
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
#include "mfe/fitting/fitting.hpp"
#include "mfe/diffrender/diffrender.hpp"
#include "mfe/render/Camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mfe {
namespace fitting {

Landmarks2D read_landmarks(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open landmark file " + path.string());
    Landmarks2D out;
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        Landmark lm;
        if (!(fields >> lm.vertex))
        {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            throw ParseError("expected a vertex index", number);
        }
        if (!(fields >> lm.x >> lm.y))
            throw ParseError("expected pixel coordinates after the vertex index", number);
        if (!(fields >> lm.weight))
            lm.weight = 1.0;
        std::string rest;
        if (fields >> rest)
            throw ParseError("unexpected trailing field '" + rest + "'", number);
        if (lm.vertex < 0 || !(lm.weight >= 0.0) || !std::isfinite(lm.x) || !std::isfinite(lm.y))
            throw ParseError("invalid landmark", number);
        out.push_back(lm);
    }
    return out;
}

void write_landmarks(const Landmarks2D& landmarks, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write landmark file " + path.string());
    out << "# vertex x y weight\n";
    out.precision(17);
    for (const auto& lm : landmarks)
        out << lm.vertex << ' ' << lm.x << ' ' << lm.y << ' ' << lm.weight << '\n';
}

LandmarkLoss landmark_loss(const std::vector<Eigen::Vector3d>& screen, const Landmarks2D& landmarks)
{
    if (landmarks.empty())
        throw DegenerateLossError("landmark_loss: no landmarks");
    double total_weight = 0.0;
    for (const auto& lm : landmarks)
    {
        if (lm.vertex < 0 || static_cast<std::size_t>(lm.vertex) >= screen.size())
            throw DimensionError("landmark vertex " + std::to_string(lm.vertex) + " out of range");
        total_weight += lm.weight;
    }
    if (!(total_weight > 0.0))
        throw DegenerateLossError("landmark_loss: all weights are zero");
    LandmarkLoss out;
    out.d_screen.assign(screen.size(), Eigen::Vector2d::Zero());
    for (const auto& lm : landmarks)
    {
        const Eigen::Vector2d d(screen[lm.vertex].x() - lm.x, screen[lm.vertex].y() - lm.y);
        out.loss += lm.weight * d.squaredNorm();
        out.d_screen[lm.vertex] += (2.0 * lm.weight / total_weight) * d;
    }
    out.loss /= total_weight;
    return out;
}

Adam::Adam(int size, double learning_rate, double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)), scales_(Eigen::VectorXd::Ones(size))
{
}

void Adam::step(Eigen::VectorXd& x, const Eigen::VectorXd& gradient)
{
    if (x.size() != m_.size() || gradient.size() != m_.size())
        throw DimensionError("Adam: size mismatch");
    ++iteration_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
    v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(iteration_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(iteration_));
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) -= learning_rate_ * scales_(i) * (m_(i) / c1) / (std::sqrt(v_(i) / c2) + epsilon_);
}

void Adam::reset()
{
    iteration_ = 0;
    m_.setZero();
    v_.setZero();
}

namespace {

// Optimisation vector: sigma-normalised shape and expression coefficients,
// axis-angle, translation, lighting (row-major), focal.
struct Layout
{
    Eigen::Index ks = 0, ke = 0;
    Eigen::Index shape() const { return 0; }
    Eigen::Index expression() const { return ks; }
    Eigen::Index rotation() const { return ks + ke; }
    Eigen::Index translation() const { return ks + ke + 3; }
    Eigen::Index lighting() const { return ks + ke + 6; }
    Eigen::Index focal() const { return ks + ke + 6 + 3 * shading::kNumSHCoeffs; }
    Eigen::Index size() const { return focal() + 1; }
};

Eigen::VectorXd pack(const Layout& l, const FaceParams& p, const morphablemodel::MorphableModel& model)
{
    Eigen::VectorXd x(l.size());
    x.segment(l.shape(), l.ks) = p.coeffs.shape.cwiseQuotient(model.shape_sigmas());
    x.segment(l.expression(), l.ke) = p.coeffs.expression.cwiseQuotient(model.expression_sigmas());
    x.segment<3>(l.rotation()) = p.pose.rotation;
    x.segment<3>(l.translation()) = p.pose.translation;
    for (int c = 0; c < 3; ++c)
        for (int b = 0; b < shading::kNumSHCoeffs; ++b)
            x(l.lighting() + c * shading::kNumSHCoeffs + b) = p.lighting.gamma(c, b);
    x(l.focal()) = p.camera.focal;
    return x;
}

FaceParams unpack(const Layout& l, const Eigen::VectorXd& x, const FaceParams& like,
                  const morphablemodel::MorphableModel& model)
{
    FaceParams p = like;
    p.coeffs.shape = x.segment(l.shape(), l.ks).cwiseProduct(model.shape_sigmas());
    p.coeffs.expression = x.segment(l.expression(), l.ke).cwiseProduct(model.expression_sigmas());
    p.pose.rotation = x.segment<3>(l.rotation());
    p.pose.translation = x.segment<3>(l.translation());
    for (int c = 0; c < 3; ++c)
        for (int b = 0; b < shading::kNumSHCoeffs; ++b)
            p.lighting.gamma(c, b) = x(l.lighting() + c * shading::kNumSHCoeffs + b);
    p.camera.focal = x(l.focal());
    return p;
}

struct Evaluation
{
    TraceEntry terms;
    double data = 0.0; ///< photometric + landmark part
    bool covered = true;
    Eigen::VectorXd gradient;
    Image d_texture;
};

// Landmark term and its gradient through projection, pose and the model.
void add_landmark_term(const Layout& l, const FaceParams& p, const morphablemodel::MorphableModel& model,
                       const Landmarks2D& landmarks, double weight, Evaluation& e)
{
    const Mesh mesh = model.synthesize(p.coeffs);
    const render::Projection proj = render::project(mesh.vertices, p.pose, p.camera);
    const LandmarkLoss lm = landmark_loss(proj.screen, landmarks);
    e.terms.landmark = lm.loss;
    e.data += weight * lm.loss;

    const Eigen::Matrix3d r = p.pose.rotation_matrix();
    const double f = p.camera.focal;
    Eigen::Matrix3d rotation_grad = Eigen::Matrix3d::Zero();
    std::vector<int> seen;
    for (const auto& lmk : landmarks)
    {
        const int i = lmk.vertex;
        if (std::find(seen.begin(), seen.end(), i) != seen.end())
            continue;
        seen.push_back(i);
        const Eigen::Vector2d ds = weight * lm.d_screen[i];
        const Eigen::Vector3d& c = proj.camera_space[i];
        const double iz = 1.0 / c.z();
        const Eigen::Vector3d d_cam(ds.x() * f * iz, ds.y() * f * iz, -(ds.x() * c.x() + ds.y() * c.y()) * f * iz * iz);
        e.gradient.segment<3>(l.translation()) += d_cam;
        e.gradient(l.focal()) += (ds.x() * c.x() + ds.y() * c.y()) * iz;
        rotation_grad += d_cam * mesh.vertices[i].transpose();
        const Eigen::Vector3d dv = r.transpose() * d_cam;
        const Eigen::Index row = 3 * static_cast<Eigen::Index>(i);
        e.gradient.segment(l.shape(), l.ks) +=
            (model.shape_basis().middleRows<3>(row).transpose() * dv).cwiseProduct(model.shape_sigmas());
        e.gradient.segment(l.expression(), l.ke) +=
            (model.expression_basis().middleRows<3>(row).transpose() * dv).cwiseProduct(model.expression_sigmas());
    }
    const auto jac = render::axis_angle_jacobian(p.pose.rotation);
    for (int k = 0; k < 3; ++k)
        e.gradient(l.rotation() + k) += rotation_grad.cwiseProduct(jac[k]).sum();
}

Evaluation evaluate(const Layout& l, const Eigen::VectorXd& x, const FaceParams& like, const Image& target,
                    const morphablemodel::MorphableModel& model, std::shared_ptr<const morphablemodel::MorphableModel> shared,
                    const Image& texture, const std::optional<Landmarks2D>& landmarks, const FitOptions& opts,
                    bool photometric)
{
    Evaluation e;
    e.gradient = Eigen::VectorXd::Zero(l.size());
    const FaceParams p = unpack(l, x, like, model);

    if (photometric)
    {
        diffrender::RenderScene scene{shared, p, texture};
        const shading::Frame frame = scene.render();
        Mask mask = frame.mask;
        if (opts.target_mask)
            for (std::size_t i = 0; i < mask.size(); ++i)
                mask[i] = mask[i] && (*opts.target_mask)[i];
        if (mask.count() == 0)
        {
            e.covered = false;
            return e;
        }
        const double loss = diffrender::photometric_loss(frame.image, target, mask);
        Image d_image = diffrender::photometric_loss_gradient(frame.image, target, mask);
        for (double& v : d_image.data())
            v *= opts.photometric_weight;
        const diffrender::Gradients g = diffrender::backward(scene, frame, d_image);
        e.terms.photometric = loss;
        e.data += opts.photometric_weight * loss;
        e.gradient.segment(l.shape(), l.ks) += g.shape.cwiseProduct(model.shape_sigmas());
        e.gradient.segment(l.expression(), l.ke) += g.expression.cwiseProduct(model.expression_sigmas());
        e.gradient.segment<6>(l.rotation()) += g.pose;
        for (int c = 0; c < 3; ++c)
            for (int b = 0; b < shading::kNumSHCoeffs; ++b)
                e.gradient(l.lighting() + c * shading::kNumSHCoeffs + b) += g.gamma(c, b);
        e.gradient(l.focal()) += g.focal;
        e.d_texture = g.texture;
    }
    if (landmarks && !landmarks->empty())
        add_landmark_term(l, p, model, *landmarks, opts.landmark_weight, e);

    const Eigen::VectorXd coeffs = x.head(l.ks + l.ke);
    e.terms.regularization = coeffs.squaredNorm();
    e.gradient.head(l.ks + l.ke) += 2.0 * opts.regularization_weight * coeffs;
    e.terms.objective = e.data + opts.regularization_weight * e.terms.regularization;
    return e;
}

} // namespace

FitResult fit(const Image& target, const morphablemodel::MorphableModel& model, const Image& texture,
              const FaceParams& init, const std::optional<Landmarks2D>& landmarks, const FitOptions& opts)
{
    init.camera.validate();
    if (target.width() != init.camera.width || target.height() != init.camera.height || target.channels() != 3)
        throw DimensionError("fit: target is " + std::to_string(target.width()) + "x" + std::to_string(target.height()) +
                             " but the camera is " + std::to_string(init.camera.width) + "x" +
                             std::to_string(init.camera.height));
    if (opts.target_mask && (opts.target_mask->width() != target.width() || opts.target_mask->height() != target.height()))
        throw DimensionError("fit: target mask size does not match the target");
    if (init.coeffs.shape.size() != model.num_shape_components() ||
        init.coeffs.expression.size() != model.num_expression_components())
        throw DimensionError("fit: initial coefficients do not match the model");

    // Non-owning handle for the render scenes built during the fit.
    const std::shared_ptr<const morphablemodel::MorphableModel> shared(&model, [](const morphablemodel::MorphableModel*) {});
    const Layout layout{model.num_shape_components(), model.num_expression_components()};
    const bool use_landmarks = landmarks && !landmarks->empty();

    FitResult result;
    Image tex = texture;
    Eigen::VectorXd x = pack(layout, init, model);

    Evaluation first = evaluate(layout, x, init, target, model, shared, tex, landmarks, opts, true);
    if (!first.covered)
        throw InitError("fit: the initial face covers no pixel of the target");
    if (!std::isfinite(first.terms.objective))
        throw DivergenceError("fit: non-finite objective at the initial parameters", init);
    result.initial_objective = first.terms.objective;
    result.params = init;
    result.texture = tex;
    result.final_objective = first.terms.objective;
    result.trace.push_back(first.terms);
    if (first.data == 0.0)
        return result;

    Eigen::VectorXd best_x = x;
    Image best_tex = tex;

    const auto run_stage = [&](int stage, int iterations, const Eigen::VectorXd& active, bool photometric) {
        if (iterations <= 0)
            return;
        Adam adam(static_cast<int>(layout.size()), opts.learning_rate, opts.beta1, opts.beta2);
        Eigen::VectorXd scales = active;
        scales(layout.focal()) *= 0.02 * init.camera.focal;
        adam.set_scales(scales);
        std::optional<Adam> tex_adam;
        Eigen::VectorXd tex_x;
        const bool texture_step = photometric && opts.optimize_texture;
        if (texture_step)
        {
            tex_adam.emplace(static_cast<int>(tex.data().size()), opts.texture_learning_rate, opts.beta1, opts.beta2);
            tex_x = Eigen::Map<const Eigen::VectorXd>(tex.data().data(), static_cast<Eigen::Index>(tex.data().size()));
        }
        double stage_best = INFINITY;
        Eigen::VectorXd stage_best_x = x;
        Image stage_best_tex = tex;
        for (int it = 0; it <= iterations; ++it)
        {
            Evaluation e = evaluate(layout, x, init, target, model, shared, tex, landmarks, opts, photometric);
            if (!e.covered)
                break; // the face left the image; keep the best iterate so far
            if (!std::isfinite(e.terms.objective) || !e.gradient.allFinite())
                throw DivergenceError("fit: objective became non-finite in stage " + std::to_string(stage),
                                      unpack(layout, stage_best_x, init, model));
            e.terms.stage = stage;
            e.terms.iteration = it;
            result.trace.push_back(e.terms);
            if (e.terms.objective < stage_best)
            {
                stage_best = e.terms.objective;
                stage_best_x = x;
                stage_best_tex = tex;
            }
            if (it == iterations)
                break;
            const double progress = static_cast<double>(it) / iterations;
            const double decay = opts.final_learning_rate_ratio +
                                 (1.0 - opts.final_learning_rate_ratio) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
            adam.set_learning_rate(opts.learning_rate * decay);
            adam.step(x, e.gradient.cwiseProduct(active));
            if (texture_step)
            {
                tex_adam->set_learning_rate(opts.texture_learning_rate * decay);
                const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(
                    e.d_texture.data().data(), static_cast<Eigen::Index>(e.d_texture.data().size()));
                tex_adam->step(tex_x, g);
                tex_x = tex_x.cwiseMax(0.0).cwiseMin(1.0);
                std::copy(tex_x.data(), tex_x.data() + tex_x.size(), tex.data().begin());
            }
        }
        x = stage_best_x;
        tex = stage_best_tex;
    };

    if (use_landmarks)
    {
        Eigen::VectorXd active = Eigen::VectorXd::Zero(layout.size());
        active.segment<6>(layout.rotation()).setOnes();
        run_stage(1, opts.landmark_iterations, active, false);
    }
    {
        Eigen::VectorXd active = Eigen::VectorXd::Ones(layout.size());
        if (!opts.optimize_focal)
            active(layout.focal()) = 0.0;
        run_stage(2, opts.joint_iterations, active, true);
    }

    const Evaluation last = evaluate(layout, x, init, target, model, shared, tex, landmarks, opts, true);
    if (last.covered && last.terms.objective <= result.initial_objective)
    {
        best_x = x;
        best_tex = tex;
        result.final_objective = last.terms.objective;
    }
    result.params = unpack(layout, best_x, init, model);
    result.texture = best_tex;
    return result;
}

void write_trace_csv(const std::vector<TraceEntry>& trace, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write trace " + path.string());
    out << "stage,iteration,objective,photometric,landmark,regularization\n";
    out.precision(17);
    for (const auto& t : trace)
        out << t.stage << ',' << t.iteration << ',' << t.objective << ',' << t.photometric << ',' << t.landmark << ','
            << t.regularization << '\n';
}

} // namespace fitting
} // namespace mfe
