/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: tools/mfe_cli.cpp
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
#include "mfe/compositor/compositor.hpp"
#include "mfe/core/Error.hpp"
#include "mfe/core/parallel.hpp"
#include "mfe/core/random.hpp"
#include "mfe/diffrender/diffrender.hpp"
#include "mfe/experiments/ablation.hpp"
#include "mfe/fitting/fitting.hpp"
#include "mfe/io/png.hpp"
#include "mfe/metrics/metrics.hpp"
#include "mfe/morphablemodel/MorphableModel.hpp"
#include "mfe/morphablemodel/procedural.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/shading/render.hpp"
#include "mfe/synthcorpus/synthcorpus.hpp"
#include "mfe/texrecover/texrecover.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace mfe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInputError = 2;

morphablemodel::MorphableModel model_or_default(const std::string& path)
{
    if (path.empty())
        return morphablemodel::make_default_model();
    return morphablemodel::load_model(path);
}

std::string model_summary(const morphablemodel::MorphableModel& m)
{
    std::ostringstream s;
    s << "N_v=" << m.num_vertices() << " N_f=" << m.topology().triangles.size()
      << " k_s=" << m.num_shape_components() << " k_e=" << m.num_expression_components()
      << " mouth_loop=" << m.mouth_loop().size();
    return s.str();
}

fs::path sibling(const fs::path& file, const std::string& suffix)
{
    return file.parent_path() / (file.stem().string() + suffix);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
}

// ---------------------------------------------------------------- make-samples

struct MakeSamplesArgs
{
    std::string out;
    int identities = 48;
};

int make_samples(const MakeSamplesArgs& a, std::uint64_t seed)
{
    const auto set = morphablemodel::make_training_set(seed, a.identities);
    fs::create_directories(a.out);
    std::ostringstream labels;
    labels << "# file label (neutral, or the paired neutral file)\n";
    std::vector<std::string> names;
    for (std::size_t i = 0; i < set.samples.size(); ++i)
    {
        char name[32];
        if (set.labels[i].is_expressive())
            std::snprintf(name, sizeof name, "expr_%03d.obj", *set.labels[i].neutral_index);
        else
            std::snprintf(name, sizeof name, "id_%03zu.obj", i);
        names.push_back(name);
        write_obj(set.samples[i], fs::path(a.out) / name);
    }
    for (std::size_t i = 0; i < set.samples.size(); ++i)
        labels << names[i] << ' '
               << (set.labels[i].is_expressive() ? names[static_cast<std::size_t>(*set.labels[i].neutral_index)]
                                                 : std::string("neutral"))
               << '\n';
    write_text(fs::path(a.out) / "labels.txt", labels.str());
    morphablemodel::write_index_list(set.mouth_loop, fs::path(a.out) / "mouth.txt");
    std::cout << "wrote " << set.samples.size() << " samples to " << a.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- build-model

struct BuildModelArgs
{
    std::string samples, mouth, out;
    int ks = 32, ke = 32;
};

int build_model(const BuildModelArgs& a)
{
    const fs::path dir(a.samples);
    if (!fs::is_directory(dir))
        throw Error("sample directory " + dir.string() + " does not exist");
    std::vector<std::string> files;
    std::map<std::string, std::string> pairing;
    if (fs::exists(dir / "labels.txt"))
    {
        std::ifstream in(dir / "labels.txt");
        std::string line;
        int number = 0;
        while (std::getline(in, line))
        {
            ++number;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            std::istringstream fields(line);
            std::string file, label;
            if (!(fields >> file))
                continue;
            if (!(fields >> label))
                throw ParseError("labels.txt: missing label", number);
            files.push_back(file);
            pairing[file] = label;
        }
    }
    else
    {
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".obj")
                files.push_back(entry.path().filename().string());
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            pairing[f] = "neutral";
    }
    std::vector<Mesh> samples;
    std::vector<morphablemodel::SampleLabel> labels;
    for (const auto& f : files)
    {
        samples.push_back(read_obj(dir / f));
        const std::string& label = pairing[f];
        if (label == "neutral")
        {
            labels.push_back(morphablemodel::SampleLabel::neutral());
            continue;
        }
        const auto it = std::find(files.begin(), files.end(), label);
        if (it == files.end())
            throw Error("labels.txt: " + f + " is paired with unknown sample " + label);
        labels.push_back(morphablemodel::SampleLabel::expressive(static_cast<int>(it - files.begin())));
    }
    const fs::path mouth = a.mouth.empty() ? dir / "mouth.txt" : fs::path(a.mouth);
    const auto model = morphablemodel::build_from_samples(samples, labels, a.ks, a.ke, morphablemodel::read_index_list(mouth));
    morphablemodel::save_model(model, a.out);
    std::cout << "model " << a.out << ": " << model_summary(model) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- render

struct RenderArgs
{
    std::string model, params, texture, out, light, mask;
};

int render_cmd(const RenderArgs& a)
{
    const auto model = model_or_default(a.model);
    fitting::FaceParams p = fitting::load_params(a.params);
    if (!a.light.empty())
        p.lighting = shading::read_lighting(a.light);
    const Image texture = io::read_png(a.texture);
    const shading::Frame frame = shading::render_illuminated(model, p.coeffs, p.pose, p.camera, texture, p.lighting);
    io::write_png(frame.image, a.out);
    const fs::path mask = a.mask.empty() ? sibling(a.out, ".mask.png") : fs::path(a.mask);
    io::write_mask_png(frame.mask, mask);
    std::cout << "rendered " << frame.mask.count() << " face pixels to " << a.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- sample

struct SampleArgs
{
    std::string model, spec, out;
};

int sample_cmd(const SampleArgs& a, std::optional<std::uint64_t> seed)
{
    const auto model = model_or_default(a.model);
    synthcorpus::SampleSpec spec = a.spec.empty() ? synthcorpus::SampleSpec{} : synthcorpus::load_sample_spec(a.spec);
    if (seed)
        spec.seed = *seed;
    synthcorpus::write_corpus(spec, model, a.out);
    std::cout << "wrote " << spec.count << " samples to " << a.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs
{
    std::string model, image, texture, landmarks, init, mask, out, trace;
    double focal = 400.0, distance = 4.0;
    fitting::FitOptions options;
};

int fit_cmd(const FitArgs& a)
{
    const auto model = model_or_default(a.model);
    const Image target = io::read_png(a.image);
    const Image texture = io::read_png(a.texture);
    const fitting::FaceParams init =
        a.init.empty()
            ? fitting::FaceParams::neutral(model, render::Camera::centred(target.width(), target.height(), a.focal),
                                           a.distance)
            : fitting::load_params(a.init);
    std::optional<fitting::Landmarks2D> landmarks;
    if (!a.landmarks.empty())
        landmarks = fitting::read_landmarks(a.landmarks);
    fitting::FitOptions options = a.options;
    if (!a.mask.empty())
        options.target_mask = io::read_mask_png(a.mask);
    const fitting::FitResult result = fitting::fit(target, model, texture, init, landmarks, options);
    fitting::save_params(result.params, a.out);
    fitting::write_trace_csv(result.trace, a.trace.empty() ? sibling(a.out, ".trace.csv") : fs::path(a.trace));
    if (options.optimize_texture)
        io::write_png(result.texture, sibling(a.out, ".texture.png"));
    std::printf("objective %.6g -> %.6g over %zu evaluations\n", result.initial_objective, result.final_objective,
                result.trace.size());
    return kExitOk;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs
{
    std::string model, out;
    std::vector<std::string> images, params, masks, landmarks;
    bool fit = false;
    int texsize = 256;
    int iterations = 60;
    double tv = 1e-4;
    double focal = 400.0, distance = 4.0;
};

Image mean_colour_texture(const Image& image, const std::optional<Mask>& mask, int size)
{
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double count = 0.0;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
        {
            if (mask && !(*mask)(x, y))
                continue;
            for (int c = 0; c < 3; ++c)
                sum(c) += image(x, y, c);
            count += 1.0;
        }
    Image t(size, size, 3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c)
                t(x, y, c) = count > 0.0 ? sum(c) / count : 0.5;
    return t;
}

int reconstruct_cmd(const ReconstructArgs& a)
{
    const auto model = model_or_default(a.model);
    if (a.images.empty())
        throw Error("reconstruct: no images");
    if (!a.fit && a.params.size() != a.images.size())
        throw Error("reconstruct: give one params file per image, or --fit");
    if (!a.masks.empty() && a.masks.size() != a.images.size())
        throw Error("reconstruct: give one mask per image");
    if (!a.landmarks.empty() && a.landmarks.size() != a.images.size())
        throw Error("reconstruct: give one landmark file per image");
    const fs::path out(a.out);
    fs::create_directories(out);

    std::vector<texrecover::View> views;
    for (std::size_t i = 0; i < a.images.size(); ++i)
    {
        texrecover::View v;
        v.image = io::read_png(a.images[i]);
        if (!a.masks.empty())
            v.mask = io::read_mask_png(a.masks[i]);
        if (a.fit)
        {
            const fitting::FaceParams init =
                i < a.params.size()
                    ? fitting::load_params(a.params[i])
                    : fitting::FaceParams::neutral(
                          model, render::Camera::centred(v.image.width(), v.image.height(), a.focal), a.distance);
            std::optional<fitting::Landmarks2D> lms;
            if (!a.landmarks.empty())
                lms = fitting::read_landmarks(a.landmarks[i]);
            fitting::FitOptions options;
            options.target_mask = v.mask;
            const Image flat = mean_colour_texture(v.image, v.mask, 8);
            v.params = fitting::fit(v.image, model, flat, init, lms, options).params;
            char name[32];
            std::snprintf(name, sizeof name, "params_%02zu.txt", i);
            fitting::save_params(v.params, out / name);
        }
        else
        {
            v.params = fitting::load_params(a.params[i]);
        }
        views.push_back(std::move(v));
    }

    texrecover::RecoverOptions options;
    options.iterations = a.iterations;
    options.tv_weight = a.tv;
    const texrecover::RecoveredTexture rtex = texrecover::recover(views, model, a.texsize, options);
    const Image filled = texrecover::inpaint_invalid(rtex);
    io::write_png(rtex.texture, out / "texture_raw.png");
    io::write_png(rtex.validity, out / "validity.png");
    io::write_png(filled, out / "texture.png");
    {
        std::ostringstream csv;
        csv << "iteration,loss\n";
        csv.precision(17);
        for (std::size_t i = 0; i < rtex.loss_trace.size(); ++i)
            csv << i << ',' << rtex.loss_trace[i] << '\n';
        write_text(out / "loss.csv", csv.str());
    }

    // Previews under three canonical lights, in the first view's geometry.
    const auto& p = views.front().params;
    shading::SHLighting front = shading::SHLighting::constant(1.0);
    shading::SHLighting left = shading::SHLighting::constant(0.9), right = left;
    for (int c = 0; c < 3; ++c)
    {
        left.gamma(c, 3) = -0.4;
        right.gamma(c, 3) = 0.4;
    }
    io::write_png(texrecover::relight(filled, model, p.coeffs, p.pose, p.camera, front), out / "relit_front.png");
    io::write_png(texrecover::relight(filled, model, p.coeffs, p.pose, p.camera, left), out / "relit_left.png");
    io::write_png(texrecover::relight(filled, model, p.coeffs, p.pose, p.camera, right), out / "relit_right.png");
    std::printf("recovered %zu of %d texels; loss %.6g -> %.6g\n", rtex.num_valid(), a.texsize * a.texsize,
                rtex.loss_trace.front(), rtex.loss_trace.back());
    return kExitOk;
}

// ---------------------------------------------------------------- composite

struct CompositeArgs
{
    std::string face, facemask, mouthmask, background, out, model, params;
    int feather = 0;
};

int composite_cmd(const CompositeArgs& a)
{
    const Image face = io::read_png(a.face);
    const Image background = io::read_png(a.background);
    const Mask face_mask = io::read_mask_png(a.facemask);
    Mask mouth(face.width(), face.height());
    if (!a.mouthmask.empty())
    {
        mouth = io::read_mask_png(a.mouthmask);
    }
    else if (!a.params.empty())
    {
        const auto model = model_or_default(a.model);
        const fitting::FaceParams p = fitting::load_params(a.params);
        const auto proj = render::project(model.synthesize(p.coeffs).vertices, p.pose, p.camera);
        const auto mm = compositor::mouth_mask(proj.screen, model.mouth_loop(), p.camera);
        if (mm.self_intersecting)
            std::cerr << "warning: mouth loop self-intersects; using its convex hull\n";
        if (mm.behind_camera)
            std::cerr << "warning: mouth loop is behind the camera; no mouth removed\n";
        mouth = mm.mask;
        io::write_mask_png(mouth, sibling(a.out, ".mouth.png"));
    }
    const Image out = compositor::composite(face, face_mask, mouth, background, a.feather);
    io::write_png(out, a.out);
    std::cout << "composited " << compositor::effective_mask(face_mask, mouth).count() << " face pixels\n";
    return kExitOk;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs
{
    std::string mode, out, model;
};

int ablate_cmd(const AblateArgs& a, std::uint64_t seed)
{
    const auto model = model_or_default(a.model);
    std::string report;
    bool passed = false;
    if (a.mode == "rotations")
    {
        const auto r = experiments::rotation_ablation(model, seed);
        report = r.text();
        passed = r.passed;
    }
    else if (a.mode == "mouth")
    {
        const auto r = experiments::mouth_ablation(model, seed);
        report = r.text();
        passed = r.passed;
    }
    else
    {
        const auto r = experiments::relight_ablation(model, seed);
        report = r.text();
        passed = r.passed;
    }
    std::cout << report;
    if (!a.out.empty())
    {
        fs::create_directories(a.out);
        write_text(fs::path(a.out) / ("ablate_" + a.mode + ".txt"), report);
    }
    return passed ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs
{
    int scenes = 1;
    bool grazing = false;
    double tolerance = 1e-3;
    std::string out;
};

int gradcheck_cmd(const GradcheckArgs& a, std::uint64_t seed)
{
    std::ostringstream text;
    bool passed = true;
    diffrender::GradcheckOptions options;
    options.tolerance = a.tolerance;
    diffrender::ToySceneOptions scene_options;
    scene_options.grazing = a.grazing;
    for (int i = 0; i < a.scenes; ++i)
    {
        const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
        const auto toy = diffrender::make_toy_scene(s, scene_options);
        const auto report = diffrender::gradcheck(toy.scene, toy.target, toy.mask, s, options);
        text << "scene " << i << ": " << report.text();
        passed = passed && report.passed;
    }
    std::cout << text.str();
    if (!a.out.empty())
        write_text(a.out, text.str());
    return passed ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs
{
    std::string a, b, mask;
    bool machine = false;
};

int metrics_cmd(const MetricsArgs& a)
{
    const Image x = io::read_png(a.a), y = io::read_png(a.b);
    std::optional<Mask> mask;
    if (!a.mask.empty())
        mask = io::read_mask_png(a.mask);
    const double l1 = metrics::l1(x, y, mask);
    const metrics::Psnr p = metrics::psnr(x, y, mask);
    const double s = metrics::ssim(x, y, mask);
    std::printf("%-6s %12s\n", "metric", "value");
    std::printf("%-6s %12.6f\n", "L1", l1);
    std::printf("%-6s %12.6f%s\n", "PSNR", p.db, p.capped ? " (capped, identical images)" : "");
    std::printf("%-6s %12.6f\n", "SSIM", s);
    if (a.machine)
        std::printf("l1=%.17g\npsnr=%.17g\npsnr_capped=%d\nssim=%.17g\n", l1, p.db, p.capped ? 1 : 0, s);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mfe: morphable face engine (model building, rendering, fitting, texture recovery)"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name
    app.set_config("--config", "", "Read options from a TOML-style file; command-line flags take precedence");
    std::uint64_t seed = 1;
    int threads = std::max(1u, std::thread::hardware_concurrency());
    auto* seed_opt = app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);

    MakeSamplesArgs ms;
    auto* c_ms = app.add_subcommand("make-samples", "Write procedural training meshes, labels and mouth loop");
    c_ms->add_option("--out", ms.out, "Output directory")->required();
    c_ms->add_option("--identities", ms.identities, "Number of identities")->check(CLI::Range(2, 100000));

    BuildModelArgs bm;
    auto* c_bm = app.add_subcommand("build-model", "Build a morphable model by PCA over sample meshes");
    c_bm->add_option("--samples", bm.samples, "Directory of OBJ samples (with optional labels.txt)")->required();
    c_bm->add_option("--ks", bm.ks, "Shape components")->capture_default_str();
    c_bm->add_option("--ke", bm.ke, "Expression components")->capture_default_str();
    c_bm->add_option("--mouth", bm.mouth, "Mouth loop index file (default: SAMPLES/mouth.txt)");
    c_bm->add_option("--out", bm.out, "Model file")->required();

    RenderArgs rd;
    auto* c_rd = app.add_subcommand("render", "Render a face from parameters and a texture");
    c_rd->add_option("--model", rd.model, "Model file (default: built-in procedural model)");
    c_rd->add_option("--params", rd.params, "Parameter file")->required();
    c_rd->add_option("--texture", rd.texture, "UV texture PNG")->required();
    c_rd->add_option("--out", rd.out, "Output PNG")->required();
    c_rd->add_option("--light", rd.light, "Lighting file overriding the parameters' lighting");
    c_rd->add_option("--mask", rd.mask, "Coverage mask PNG (default: OUT.mask.png)");

    SampleArgs sp;
    auto* c_sp = app.add_subcommand("sample", "Sample parameters and render a ground-truth corpus");
    c_sp->add_option("--model", sp.model, "Model file (default: built-in procedural model)");
    c_sp->add_option("--spec", sp.spec, "Sample spec file");
    c_sp->add_option("--out", sp.out, "Output directory")->required();

    FitArgs ft;
    auto* c_ft = app.add_subcommand("fit", "Fit model parameters to an image");
    c_ft->add_option("--model", ft.model, "Model file (default: built-in procedural model)");
    c_ft->add_option("--image", ft.image, "Target PNG")->required();
    c_ft->add_option("--texture", ft.texture, "UV texture PNG")->required();
    c_ft->add_option("--landmarks", ft.landmarks, "Landmark file (vertex x y [weight])");
    c_ft->add_option("--init", ft.init, "Initial parameters (default: neutral face)");
    c_ft->add_option("--mask", ft.mask, "Restrict the photometric term to this mask");
    c_ft->add_option("--out", ft.out, "Output parameter file")->required();
    c_ft->add_option("--trace", ft.trace, "Trace CSV (default: OUT.trace.csv)");
    c_ft->add_option("--focal", ft.focal, "Focal length of the default initial camera")->capture_default_str();
    c_ft->add_option("--distance", ft.distance, "Depth of the default initial pose")->capture_default_str();
    c_ft->add_option("--iterations", ft.options.joint_iterations, "Joint-stage iterations")->capture_default_str();
    c_ft->add_option("--landmark-iterations", ft.options.landmark_iterations, "Landmark-stage iterations")
        ->capture_default_str();
    c_ft->add_option("--lr", ft.options.learning_rate, "Learning rate")->capture_default_str();
    c_ft->add_option("--w-photo", ft.options.photometric_weight, "Photometric weight")->capture_default_str();
    c_ft->add_option("--w-lm", ft.options.landmark_weight, "Landmark weight (per px^2)")->capture_default_str();
    c_ft->add_option("--w-reg", ft.options.regularization_weight, "Coefficient prior weight")->capture_default_str();
    c_ft->add_flag("--optimize-focal", ft.options.optimize_focal, "Also optimise the focal length");
    c_ft->add_flag("--optimize-texture", ft.options.optimize_texture, "Also optimise the texture");

    ReconstructArgs rc;
    auto* c_rc = app.add_subcommand("reconstruct", "Recover a UV texture from posed images");
    c_rc->add_option("--model", rc.model, "Model file (default: built-in procedural model)");
    c_rc->add_option("--images", rc.images, "View images")->required();
    c_rc->add_option("--params", rc.params, "Parameters per view (initial values with --fit)");
    c_rc->add_option("--masks", rc.masks, "Face masks per view");
    c_rc->add_option("--landmarks", rc.landmarks, "Landmarks per view (used with --fit)");
    c_rc->add_flag("--fit", rc.fit, "Fit the parameters of each view first");
    c_rc->add_option("--texsize", rc.texsize, "Texture size")->capture_default_str()->check(CLI::Range(1, 8192));
    c_rc->add_option("--iterations", rc.iterations, "Optimisation iterations")->capture_default_str();
    c_rc->add_option("--tv", rc.tv, "Total-variation weight")->capture_default_str();
    c_rc->add_option("--focal", rc.focal, "Focal length of the default initial camera")->capture_default_str();
    c_rc->add_option("--distance", rc.distance, "Depth of the default initial pose")->capture_default_str();
    c_rc->add_option("--out", rc.out, "Output directory")->required();

    CompositeArgs cp;
    auto* c_cp = app.add_subcommand("composite", "Blend a rendered face into a background");
    c_cp->add_option("--face", cp.face, "Rendered face PNG")->required();
    c_cp->add_option("--facemask", cp.facemask, "Face mask PNG")->required();
    c_cp->add_option("--mouthmask", cp.mouthmask, "Mouth mask PNG");
    c_cp->add_option("--params", cp.params, "Compute the mouth mask from these parameters instead");
    c_cp->add_option("--model", cp.model, "Model for --params (default: built-in procedural model)");
    c_cp->add_option("--background", cp.background, "Background PNG")->required();
    c_cp->add_option("--out", cp.out, "Output PNG")->required();
    c_cp->add_option("--feather", cp.feather, "Feather radius in pixels")->capture_default_str()->check(CLI::NonNegativeNumber);

    AblateArgs ab;
    auto* c_ab = app.add_subcommand("ablate", "Run a paired synthetic ablation and report pass/fail");
    c_ab->add_option("--mode", ab.mode, "rotations | mouth | relight")
        ->required()
        ->check(CLI::IsMember({"rotations", "mouth", "relight"}));
    c_ab->add_option("--out", ab.out, "Report directory");
    c_ab->add_option("--model", ab.model, "Model file (default: built-in procedural model)");

    GradcheckArgs gc;
    auto* c_gc = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences on toy scenes");
    c_gc->add_option("--scenes", gc.scenes, "Number of random scenes")->capture_default_str()->check(CLI::PositiveNumber);
    c_gc->add_flag("--grazing", gc.grazing, "Add a triangle seen edge-on");
    c_gc->add_option("--tolerance", gc.tolerance, "Relative error tolerance")->capture_default_str();
    c_gc->add_option("--out", gc.out, "Report file");

    MetricsArgs mt;
    auto* c_mt = app.add_subcommand("metrics", "L1, PSNR and SSIM between two images");
    c_mt->add_option("--a", mt.a, "First image")->required();
    c_mt->add_option("--b", mt.b, "Second image")->required();
    c_mt->add_option("--mask", mt.mask, "Mask restricting L1/PSNR and the SSIM window centres");
    c_mt->add_flag("--machine", mt.machine, "Also print metric=value lines");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    set_num_threads(threads);
    const std::optional<std::uint64_t> explicit_seed = seed_opt->count() > 0 ? std::optional(seed) : std::nullopt;
    try
    {
        if (c_ms->parsed())
            return make_samples(ms, seed);
        if (c_bm->parsed())
            return build_model(bm);
        if (c_rd->parsed())
            return render_cmd(rd);
        if (c_sp->parsed())
            return sample_cmd(sp, explicit_seed);
        if (c_ft->parsed())
            return fit_cmd(ft);
        if (c_rc->parsed())
            return reconstruct_cmd(rc);
        if (c_cp->parsed())
            return composite_cmd(cp);
        if (c_ab->parsed())
            return ablate_cmd(ab, seed);
        if (c_gc->parsed())
            return gradcheck_cmd(gc, seed);
        if (c_mt->parsed())
            return metrics_cmd(mt);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitInputError;
}
