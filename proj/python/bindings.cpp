/*
 * Copyright 2026 The pugd-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pugd/config.hpp"
#include "pugd/errors.hpp"
#include "pugd/harness.hpp"
#include "pugd/landscape.hpp"
#include "pugd/optimizers.hpp"
#include "pugd/ragged_tensor.hpp"
#include "pugd/schedules.hpp"

namespace py = pybind11;
using namespace pugd;

namespace {

RaggedTensor from_arrays(const std::vector<std::pair<std::string, py::array_t<double>>>& items) {
  RaggedTensor t;
  for (const auto& [name, arr] : items) {
    auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(arr);
    std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
    if (shape.empty()) shape.push_back(1);
    t.add_component(name, shape, std::vector<double>(a.data(), a.data() + a.size()));
  }
  return t;
}

py::dict to_arrays(const RaggedTensor& t) {
  py::dict d;
  for (const auto& c : t.components()) {
    py::array_t<double> a(c.shape);
    std::copy(c.values.begin(), c.values.end(), a.mutable_data());
    d[py::str(c.name)] = a;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_pugd, m) {
  m.doc() = "Unit-gradient optimizers, ragged tensors and loss-landscape tools";
  m.attr("__version__") = PUGD_VERSION;

  py::register_exception<Error>(m, "PugdError", PyExc_RuntimeError);
  py::register_exception<ZeroNorm>(m, "ZeroNorm", PyExc_ValueError);
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<RaggedTensor>(m, "RaggedTensor")
      .def(py::init<>())
      .def(py::init(&from_arrays), py::arg("components"),
           "Build from a list of (name, ndarray) pairs.")
      .def_property_readonly("num_components", &RaggedTensor::num_components)
      .def_property_readonly("num_elements", &RaggedTensor::num_elements)
      .def("flatten", &RaggedTensor::flatten)
      .def("to_dict", &to_arrays)
      .def("__add__", [](const RaggedTensor& a, const RaggedTensor& b) { return add(a, b); })
      .def("__sub__", [](const RaggedTensor& a, const RaggedTensor& b) { return sub(a, b); })
      .def("__mul__", [](const RaggedTensor& a, double s) { return scale(a, s); })
      .def("__rmul__", [](const RaggedTensor& a, double s) { return scale(a, s); })
      .def("__eq__", [](const RaggedTensor& a, const RaggedTensor& b) { return a == b; })
      .def("__len__", &RaggedTensor::num_components);

  m.def("dual_norm", &dual_norm, py::arg("t"));
  m.def("unit", &unit, py::arg("t"));
  m.def("check_bounded_difference", &check_bounded_difference, py::arg("prev_unit"),
        py::arg("curr_unit"));

  m.def(
      "lr_at",
      [](double lr_max, double lr_min, std::size_t total_steps, std::size_t t,
         const std::string& kind) {
        Schedule s{parse_schedule_kind(kind), lr_max, lr_min, total_steps};
        s.validate();
        return lr_at(s, t);
      },
      py::arg("lr_max"), py::arg("lr_min"), py::arg("total_steps"), py::arg("t"),
      py::arg("kind") = "cosine_annealing");
  m.def("linspace", &linspace, py::arg("lo"), py::arg("hi"), py::arg("n"));

  py::class_<Mlp>(m, "Mlp")
      .def(py::init([](std::vector<std::size_t> dims, const std::string& act,
                       std::uint64_t seed) {
             return Mlp::uniform_init(std::move(dims), parse_activation(act), seed);
           }),
           py::arg("layers"), py::arg("activation") = "tanh", py::arg("seed") = 0)
      .def_property("params", py::overload_cast<>(&Mlp::params, py::const_),
                    &Mlp::set_params)
      .def(
          "forward",
          [](const Mlp& self, const RaggedTensor& p, const Matrix& x) {
            return self.forward_at(p, x);
          },
          py::arg("params"), py::arg("inputs"))
      .def(
          "loss_and_grad",
          [](const Mlp& self, const RaggedTensor& p, const Matrix& x, const Matrix& y,
             const std::string& kind) {
            auto lg = self.loss_and_grad_at(p, Batch{x, y}, parse_loss_kind(kind));
            return py::make_tuple(lg.loss, lg.grad);
          },
          py::arg("params"), py::arg("inputs"), py::arg("targets"),
          py::arg("loss") = "mse");

  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("step_index", &StepRecord::step_index)
      .def_readonly("lr_used", &StepRecord::lr_used)
      .def_readonly("loss_before", &StepRecord::loss_before)
      .def_readonly("grad_dual_norm", &StepRecord::grad_dual_norm)
      .def_readonly("update_dual_norm", &StepRecord::update_dual_norm)
      .def_readonly("d_t", &StepRecord::d_t)
      .def_readonly("perturb_norm", &StepRecord::perturb_norm)
      .def_readonly("flags", &StepRecord::flags);

  py::class_<OptimizerState>(m, "OptimizerState").def(py::init<>());

  m.def("optimizer_kinds", [] {
    std::vector<std::string> out;
    for (auto k : all_optimizer_kinds()) out.push_back(to_string(k));
    return out;
  });

  m.def(
      "optimizer_step",
      [](RaggedTensor params, const std::function<py::tuple(const RaggedTensor&)>& oracle,
         double lr, const std::string& kind, OptimizerState& state, double weight_decay,
         std::optional<double> rho) {
        OptimizerConfig cfg;
        cfg.kind = parse_optimizer_kind(kind);
        cfg.weight_decay = weight_decay;
        cfg.rho = rho;
        cfg.validate();
        const GradientOracle g = [&](const RaggedTensor& w) {
          py::tuple r = oracle(w);
          return LossGrad{r[0].cast<double>(), r[1].cast<RaggedTensor>()};
        };
        StepRecord rec = optimizer_step(params, g, lr, cfg, state);
        return py::make_tuple(params, rec);
      },
      py::arg("params"), py::arg("oracle"), py::arg("lr"), py::arg("kind"),
      py::arg("state"), py::arg("weight_decay") = 0.0, py::arg("rho") = py::none(),
      "One step; oracle(params) -> (loss, grad). Returns (new_params, record).");

  m.def(
      "run_config",
      [](const std::string& text) {
        const auto cfg = ExperimentConfig::from_key_values(KeyValueConfig::parse(text));
        cfg.validate();
        py::gil_scoped_release release;
        return run_experiment(cfg).string();
      },
      py::arg("config_text"), "Run an experiment from key = value text; returns output dir.");

  m.def(
      "run_invariant_checks",
      [](std::uint64_t seed, const std::string& data_root, std::size_t iterations) {
        std::vector<std::tuple<std::string, bool, std::string>> out;
        for (auto& r : run_invariant_checks({seed, data_root, iterations}))
          out.emplace_back(r.name, r.passed, r.detail);
        return out;
      },
      py::arg("seed") = 0, py::arg("data_root") = "", py::arg("iterations") = 200);
}
