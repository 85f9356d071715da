// Copyright 2026 The bit-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings: metrics, CKA, window partitioning, synthetic data and
// model inference. Arrays cross the boundary as float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bit/analysis.hpp"
#include "bit/dataset.hpp"
#include "bit/errors.hpp"
#include "bit/network.hpp"
#include "bit/ops.hpp"
#include "bit/swin.hpp"
#include "bit/training.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

bit::Tensor to_tensor(const Array& a, bit::DType dtype = bit::DType::f64) {
  bit::Shape shape(a.shape(), a.shape() + a.ndim());
  return bit::Tensor::from_vector(shape, std::span<const double>(a.data(), static_cast<std::size_t>(a.size())), dtype);
}

Array to_array(const bit::Tensor& t) {
  const auto values = t.to_vector();
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

Array to_array(const bit::Matrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

bit::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw bit::DimensionError("expected a 2-D array");
  bit::Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

bit::Tensor batched(const Array& a, bit::DType dtype) {
  bit::Tensor t = to_tensor(a, dtype);
  if (t.rank() == 3) t = bit::reshape(t, {1, t.dim(0), t.dim(1), t.dim(2)});
  return t;
}

py::dict triplet_dict(const bit::BlurTriplet& tr) {
  py::dict d;
  d["prev"] = to_array(tr.prev);
  d["cur"] = to_array(tr.cur);
  d["nxt"] = to_array(tr.nxt);
  py::list targets;
  for (const auto& t : tr.targets) targets.append(to_array(t));
  d["targets"] = targets;
  d["t"] = tr.t;
  d["index"] = tr.index;
  return d;
}

}  // namespace

PYBIND11_MODULE(bitpy, m) {
  m.doc() = "Blur interpolation transformer: inference, metrics and analysis";
  m.attr("__version__") = BIT_VERSION;

  py::register_exception<bit::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<bit::DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<bit::DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<bit::RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<bit::ModeError>(m, "ModeError", PyExc_RuntimeError);
  py::register_exception<bit::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("psnr", [](const Array& a, const Array& b, double peak) { return bit::psnr(to_tensor(a), to_tensor(b), peak); },
        py::arg("pred"), py::arg("gt"), py::arg("peak") = 1.0);
  m.def("ssim", [](const Array& a, const Array& b) { return bit::ssim(to_tensor(a), to_tensor(b)); }, py::arg("pred"),
        py::arg("gt"));

  m.def("gram_linear", [](const Array& x) { return to_array(bit::gram_linear(to_matrix(x))); }, py::arg("samples"));
  m.def("hsic", [](const Array& k, const Array& l) { return bit::hsic(to_matrix(k), to_matrix(l)); });
  m.def("cka", [](const Array& k, const Array& l) { return bit::cka(to_matrix(k), to_matrix(l)); });
  m.def(
      "cka_map",
      [](const Array& features, std::int64_t max_samples, std::uint64_t seed, const std::string& reorder) {
        bit::CkaOptions opts;
        opts.max_samples = max_samples;
        opts.seed = seed;
        opts.reorder = bit::reorder_from_string(reorder);
        const bit::CkaMap map = bit::cka_map(to_tensor(features), opts);
        return py::make_tuple(to_array(map.values), map.order, map.constant_channels);
      },
      py::arg("features"), py::arg("max_samples") = 2048, py::arg("seed") = 0, py::arg("reorder") = "none",
      "Channel CKA of [B, C, H, W] features: (values, order, constant_channels).");
  m.def("spectral_order", [](const Array& s) { return bit::spectral_order(to_matrix(s)); });

  m.def("window_partition", [](const Array& x, int window) { return to_array(bit::window_partition(to_tensor(x), window)); },
        py::arg("x"), py::arg("window"));
  m.def(
      "window_reverse",
      [](const Array& w, int window, std::int64_t b, std::int64_t h, std::int64_t wd) {
        return to_array(bit::window_reverse(to_tensor(w), window, b, h, wd));
      },
      py::arg("windows"), py::arg("window"), py::arg("batch"), py::arg("height"), py::arg("width"));

  m.def("uniform_t_grid", &bit::uniform_t_grid, py::arg("k"));
  m.def("cosine_lr", &bit::cosine_lr, py::arg("step"), py::arg("total"), py::arg("lr_start"), py::arg("lr_end"));

  m.def(
      "synth_triplets",
      [](std::int64_t scenes, std::int64_t blur_per_scene, std::int64_t height, std::int64_t width, std::uint64_t seed) {
        bit::SynthOptions o;
        o.scenes = scenes;
        o.blur_per_scene = blur_per_scene;
        o.height = height;
        o.width = width;
        o.seed = seed;
        py::list out;
        for (const auto& tr : bit::centre_triplets(bit::synth_sequences(o))) out.append(triplet_dict(tr));
        return out;
      },
      py::arg("scenes") = 4, py::arg("blur_per_scene") = 3, py::arg("height") = 64, py::arg("width") = 64,
      py::arg("seed") = 0, "Centre triplet of each synthetic sequence, as dicts of [3, H, W] arrays.");

  py::class_<bit::BiTConfig>(m, "BiTConfig")
      .def(py::init<>())
      .def_static("paper", &bit::BiTConfig::paper)
      .def_static("tiny", &bit::BiTConfig::tiny)
      .def_readwrite("n_shared", &bit::BiTConfig::n_shared)
      .def_readwrite("m_render", &bit::BiTConfig::m_render)
      .def_readwrite("heads", &bit::BiTConfig::heads)
      .def_readwrite("channels", &bit::BiTConfig::channels)
      .def_readwrite("window", &bit::BiTConfig::window)
      .def_readwrite("scales", &bit::BiTConfig::scales)
      .def_readwrite("ratio", &bit::BiTConfig::ratio)
      .def_readwrite("upscale", &bit::BiTConfig::upscale)
      .def_readwrite("mlp_ratio", &bit::BiTConfig::mlp_ratio)
      .def_readwrite("rstb_depth", &bit::BiTConfig::rstb_depth)
      .def_readwrite("fuse_kernel", &bit::BiTConfig::fuse_kernel)
      .def_readwrite("global_residual", &bit::BiTConfig::global_residual)
      .def("validate", &bit::BiTConfig::validate);

  m.def("param_count", [](const bit::BiTConfig& cfg) { return bit::param_count(cfg); }, py::arg("config"));
  m.def(
      "flop_ratio",
      [](const bit::BiTConfig& cfg, std::int64_t h, std::int64_t w) {
        const bit::FlopRatio r = bit::ms_rstb_flop_ratio(cfg, h, w);
        return py::make_tuple(r.measured, r.closed_form);
      },
      py::arg("config"), py::arg("height"), py::arg("width"), "(measured, closed_form) MS-RSTB / RSTB flop ratio.");

  py::class_<bit::BiT, std::unique_ptr<bit::BiT>>(m, "BiT")
      .def(py::init([](const bit::BiTConfig& cfg, std::uint64_t seed) {
             auto model = std::make_unique<bit::BiT>(cfg, seed);
             model->set_training(false);
             return model;
           }),
           py::arg("config"), py::arg("seed") = 0)
      .def_static("load", [](const std::string& path) { return bit::load_model(path); }, py::arg("path"))
      .def_property_readonly("config", &bit::BiT::config)
      .def_property_readonly("extract_calls", &bit::BiT::extract_calls)
      .def("reset_extract_calls", &bit::BiT::reset_extract_calls)
      .def(
          "interpolate",
          [](bit::BiT& model, const Array& prev, const Array& cur, const Array& nxt, const std::vector<double>& ts,
             bool ensemble) {
            const bit::DType dt = model.config().dtype;
            const bit::Triplet frames{batched(prev, dt), batched(cur, dt), batched(nxt, dt)};
            std::vector<bit::Tensor> frames_t;
            {
              py::gil_scoped_release release;
              frames_t = bit::interpolate(model, frames, ts, ensemble);
            }
            std::vector<Array> out;
            for (const auto& t : frames_t) out.push_back(to_array(t));
            return out;
          },
          py::arg("prev"), py::arg("cur"), py::arg("nxt"), py::arg("ts"), py::arg("ensemble") = false,
          "Sharp frames at each t from blurred [3, H, W] or [B, 3, H, W] inputs.");
}
