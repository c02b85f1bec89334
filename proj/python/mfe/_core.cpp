/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: python/mfe/_core.cpp
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
// Python bindings for the main operations. Images cross the boundary as
// float64 arrays of shape (H, W, C), masks as bool arrays of shape (H, W).

#include "mfe/compositor/compositor.hpp"
#include "mfe/core/parallel.hpp"
#include "mfe/diffrender/diffrender.hpp"
#include "mfe/fitting/FaceParams.hpp"
#include "mfe/fitting/fitting.hpp"
#include "mfe/io/png.hpp"
#include "mfe/metrics/metrics.hpp"
#include "mfe/morphablemodel/MorphableModel.hpp"
#include "mfe/morphablemodel/procedural.hpp"
#include "mfe/render/Camera.hpp"
#include "mfe/shading/render.hpp"
#include "mfe/synthcorpus/synthcorpus.hpp"
#include "mfe/texrecover/texrecover.hpp"

#include "pybind11/eigen.h"
#include "pybind11/numpy.h"
#include "pybind11/pybind11.h"
#include "pybind11/stl.h"
#include "pybind11/stl/filesystem.h"

#include <cstring>

namespace py = pybind11;
using namespace mfe;

namespace {

using ImageArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

Image to_image(const ImageArray& a)
{
    if (a.ndim() != 2 && a.ndim() != 3)
        throw DimensionError("image arrays must have shape (H, W) or (H, W, C)");
    const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    Image out(w, h, c);
    std::memcpy(out.data().data(), a.data(), out.data().size() * sizeof(double));
    return out;
}

ImageArray from_image(const Image& img)
{
    ImageArray a({img.height(), img.width(), img.channels()});
    std::memcpy(a.mutable_data(), img.data().data(), img.data().size() * sizeof(double));
    return a;
}

Mask to_mask(const MaskArray& a)
{
    if (a.ndim() != 2)
        throw DimensionError("mask arrays must have shape (H, W)");
    Mask out(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.data()[i] ? 1 : 0;
    return out;
}

MaskArray from_mask(const Mask& m)
{
    MaskArray a({m.height(), m.width()});
    for (std::size_t i = 0; i < m.size(); ++i)
        a.mutable_data()[i] = m[i] != 0;
    return a;
}

std::optional<Mask> to_optional_mask(const std::optional<MaskArray>& a)
{
    return a ? std::optional<Mask>(to_mask(*a)) : std::nullopt;
}

Eigen::MatrixXd vertices_matrix(const std::vector<Eigen::Vector3d>& v)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return out;
}

Eigen::MatrixXi triangles_matrix(const std::vector<Eigen::Vector3i>& t)
{
    Eigen::MatrixXi out(static_cast<Eigen::Index>(t.size()), 3);
    for (std::size_t i = 0; i < t.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = t[i].transpose();
    return out;
}

morphablemodel::ShapeCoeffs coeffs_or_zero(const morphablemodel::MorphableModel& model,
                                           const std::optional<Eigen::VectorXd>& shape,
                                           const std::optional<Eigen::VectorXd>& expression)
{
    auto c = model.zero_coefficients();
    if (shape)
        c.shape = *shape;
    if (expression)
        c.expression = *expression;
    return c;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Morphable face model, differentiable rendering, fitting and texture recovery";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def("set_num_threads", &set_num_threads, py::arg("threads"));

    using morphablemodel::MorphableModel;
    py::class_<MorphableModel>(m, "MorphableModel")
        .def_property_readonly("num_vertices", &MorphableModel::num_vertices)
        .def_property_readonly("num_shape_components", &MorphableModel::num_shape_components)
        .def_property_readonly("num_expression_components", &MorphableModel::num_expression_components)
        .def_property_readonly("mean", &MorphableModel::mean)
        .def_property_readonly("shape_sigmas", &MorphableModel::shape_sigmas)
        .def_property_readonly("expression_sigmas", &MorphableModel::expression_sigmas)
        .def_property_readonly("mouth_loop", &MorphableModel::mouth_loop)
        .def_property_readonly("triangles",
                               [](const MorphableModel& self) { return triangles_matrix(self.topology().triangles); })
        .def(
            "synthesize",
            [](const MorphableModel& self, std::optional<Eigen::VectorXd> shape,
               std::optional<Eigen::VectorXd> expression) {
                return vertices_matrix(self.synthesize(coeffs_or_zero(self, shape, expression)).vertices);
            },
            py::arg("shape") = py::none(), py::arg("expression") = py::none(),
            "Vertices (N, 3) of the mean plus the weighted bases.")
        .def("save", [](const MorphableModel& self, const std::filesystem::path& p) { morphablemodel::save_model(self, p); })
        .def_static("load", &morphablemodel::load_model, py::arg("path"));

    m.def("default_model", &morphablemodel::make_default_model, py::arg("num_shape_components") = 32,
          py::arg("num_expression_components") = 32, py::arg("seed") = 7, py::arg("num_identities") = 48);

    using fitting::FaceParams;
    py::class_<FaceParams>(m, "FaceParams")
        .def_static(
            "neutral",
            [](const MorphableModel& model, int width, int height, double focal, double distance) {
                return FaceParams::neutral(model, render::Camera::centred(width, height, focal), distance);
            },
            py::arg("model"), py::arg("width") = 128, py::arg("height") = 128, py::arg("focal") = 400.0,
            py::arg("distance") = 4.0)
        .def_static("parse", [](const std::string& text) { return fitting::parse_params(text); })
        .def_static("load", [](const std::filesystem::path& p) { return fitting::load_params(p); })
        .def("format", &fitting::format_params)
        .def("save", [](const FaceParams& self, const std::filesystem::path& p) { fitting::save_params(self, p); })
        .def_property(
            "shape", [](const FaceParams& self) { return self.coeffs.shape; },
            [](FaceParams& self, const Eigen::VectorXd& v) { self.coeffs.shape = v; })
        .def_property(
            "expression", [](const FaceParams& self) { return self.coeffs.expression; },
            [](FaceParams& self, const Eigen::VectorXd& v) { self.coeffs.expression = v; })
        .def_property(
            "rotation", [](const FaceParams& self) { return self.pose.rotation; },
            [](FaceParams& self, const Eigen::Vector3d& v) { self.pose.rotation = v; })
        .def_property(
            "translation", [](const FaceParams& self) { return self.pose.translation; },
            [](FaceParams& self, const Eigen::Vector3d& v) { self.pose.translation = v; })
        .def_property(
            "focal", [](const FaceParams& self) { return self.camera.focal; },
            [](FaceParams& self, double f) { self.camera.focal = f; })
        .def_property(
            "lighting", [](const FaceParams& self) { return Eigen::MatrixXd(self.lighting.gamma); },
            [](FaceParams& self, const Eigen::Matrix<double, 3, shading::kNumSHCoeffs>& g) { self.lighting.gamma = g; })
        .def_property_readonly("image_size",
                               [](const FaceParams& self) { return std::pair{self.camera.width, self.camera.height}; })
        .def("__eq__", &FaceParams::operator==)
        .def("__repr__", &fitting::format_params);

    m.def(
        "render",
        [](const MorphableModel& model, const FaceParams& params, const ImageArray& texture) {
            const auto f = shading::render_illuminated(model, params.coeffs, params.pose, params.camera,
                                                       to_image(texture), params.lighting);
            return py::make_tuple(from_image(f.image), from_mask(f.mask));
        },
        py::arg("model"), py::arg("params"), py::arg("texture"), "Lit render; returns (image, mask).");

    m.def(
        "procedural_texture",
        [](std::uint64_t seed, int size) { return from_image(synthcorpus::procedural_texture(seed, size)); },
        py::arg("seed"), py::arg("size") = 256);

    m.def(
        "sample_params",
        [](const MorphableModel& model, std::uint64_t seed, int count, int image_size, double focal) {
            synthcorpus::SampleSpec spec;
            spec.seed = seed;
            spec.count = count;
            spec.image_size = image_size;
            spec.focal = focal;
            return synthcorpus::sample_params(spec, model);
        },
        py::arg("model"), py::arg("seed") = 1, py::arg("count") = 1, py::arg("image_size") = 128,
        py::arg("focal") = 400.0);

    m.def(
        "fit",
        [](const ImageArray& target, const MorphableModel& model, const ImageArray& texture, const FaceParams& init,
           std::optional<std::vector<std::tuple<int, double, double, double>>> landmarks, int landmark_iterations,
           int iterations, double learning_rate, std::optional<MaskArray> mask) {
            fitting::FitOptions o;
            o.landmark_iterations = landmark_iterations;
            o.joint_iterations = iterations;
            o.learning_rate = learning_rate;
            o.target_mask = to_optional_mask(mask);
            std::optional<fitting::Landmarks2D> lm;
            if (landmarks)
            {
                lm.emplace();
                for (const auto& [v, x, y, w] : *landmarks)
                    lm->push_back({v, x, y, w});
            }
            py::gil_scoped_release release;
            const auto r = fitting::fit(to_image(target), model, to_image(texture), init, lm, o);
            py::gil_scoped_acquire acquire;
            py::dict out;
            out["params"] = r.params;
            out["initial_objective"] = r.initial_objective;
            out["final_objective"] = r.final_objective;
            py::list trace;
            for (const auto& t : r.trace)
                trace.append(py::make_tuple(t.stage, t.iteration, t.objective, t.photometric, t.landmark,
                                            t.regularization));
            out["trace"] = trace;
            return out;
        },
        py::arg("target"), py::arg("model"), py::arg("texture"), py::arg("init"), py::arg("landmarks") = py::none(),
        py::arg("landmark_iterations") = 100, py::arg("iterations") = 400, py::arg("learning_rate") = 0.01,
        py::arg("mask") = py::none(),
        "Analysis-by-synthesis fit. Landmarks are (vertex, x, y, weight) tuples. Returns a dict with the fitted "
        "params, objectives and the per-iteration trace.");

    m.def(
        "recover_texture",
        [](const MorphableModel& model, const std::vector<ImageArray>& images, const std::vector<FaceParams>& params,
           std::optional<std::vector<MaskArray>> masks, int texture_size, int iterations, double tv_weight,
           bool inpaint) {
            if (images.size() != params.size() || (masks && masks->size() != images.size()))
                throw DimensionError("recover_texture: images, params and masks must have the same length");
            std::vector<texrecover::View> views;
            for (std::size_t i = 0; i < images.size(); ++i)
                views.push_back({to_image(images[i]), params[i],
                                 masks ? std::optional<Mask>(to_mask((*masks)[i])) : std::nullopt});
            texrecover::RecoverOptions o;
            o.iterations = iterations;
            o.tv_weight = tv_weight;
            py::gil_scoped_release release;
            const auto r = texrecover::recover(views, model, texture_size, o);
            const Image filled = inpaint ? texrecover::inpaint_invalid(r) : r.texture;
            py::gil_scoped_acquire acquire;
            return py::make_tuple(from_image(filled), from_image(r.validity), r.loss_trace);
        },
        py::arg("model"), py::arg("images"), py::arg("params"), py::arg("masks") = py::none(),
        py::arg("texture_size") = 256, py::arg("iterations") = 60, py::arg("tv_weight") = 1e-4,
        py::arg("inpaint") = true, "Returns (texture, validity, loss_trace).");

    m.def(
        "relight",
        [](const ImageArray& texture, const MorphableModel& model, const FaceParams& params,
           const Eigen::Matrix<double, 3, shading::kNumSHCoeffs>& gamma) {
            shading::SHLighting l;
            l.gamma = gamma;
            return from_image(
                texrecover::relight(to_image(texture), model, params.coeffs, params.pose, params.camera, l));
        },
        py::arg("texture"), py::arg("model"), py::arg("params"), py::arg("lighting"));

    m.def(
        "mouth_mask",
        [](const MorphableModel& model, const FaceParams& params) {
            const Mesh mesh = model.synthesize(params.coeffs);
            const auto proj = render::project(mesh.vertices, params.pose, params.camera);
            return from_mask(
                compositor::mouth_mask(proj.screen, model.mouth_loop(), params.camera).mask);
        },
        py::arg("model"), py::arg("params"));

    m.def(
        "composite",
        [](const ImageArray& face, const MaskArray& face_mask, const MaskArray& mouth, const ImageArray& background,
           int feather) {
            return from_image(
                compositor::composite(to_image(face), to_mask(face_mask), to_mask(mouth), to_image(background), feather));
        },
        py::arg("face"), py::arg("face_mask"), py::arg("mouth_mask"), py::arg("background"), py::arg("feather") = 0);

    m.def(
        "l1", [](const ImageArray& a, const ImageArray& b, std::optional<MaskArray> mask) {
            return metrics::l1(to_image(a), to_image(b), to_optional_mask(mask));
        },
        py::arg("a"), py::arg("b"), py::arg("mask") = py::none());
    m.def(
        "psnr", [](const ImageArray& a, const ImageArray& b, std::optional<MaskArray> mask) {
            return metrics::psnr(to_image(a), to_image(b), to_optional_mask(mask)).db;
        },
        py::arg("a"), py::arg("b"), py::arg("mask") = py::none());
    m.def(
        "ssim", [](const ImageArray& a, const ImageArray& b, std::optional<MaskArray> mask) {
            return metrics::ssim(to_image(a), to_image(b), to_optional_mask(mask));
        },
        py::arg("a"), py::arg("b"), py::arg("mask") = py::none());

    m.def(
        "gradcheck",
        [](std::uint64_t seed, bool grazing) {
            diffrender::ToySceneOptions o;
            o.grazing = grazing;
            const auto toy = diffrender::make_toy_scene(seed, o);
            const auto r = diffrender::gradcheck(toy.scene, toy.target, toy.mask, seed);
            return py::make_tuple(r.passed, r.text());
        },
        py::arg("seed") = 1, py::arg("grazing") = false,
        "Finite-difference check of the renderer gradients on a random toy scene. Returns (passed, report).");

    m.def(
        "read_png", [](const std::filesystem::path& p, int channels) { return from_image(io::read_png(p, channels)); },
        py::arg("path"), py::arg("channels") = 3);
    m.def(
        "write_png", [](const ImageArray& a, const std::filesystem::path& p) { io::write_png(to_image(a), p); },
        py::arg("image"), py::arg("path"));
}
