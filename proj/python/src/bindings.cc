// Copyright 2026 The fedguard-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "fedguard/aggregation.h"
#include "fedguard/attacks.h"
#include "fedguard/common.h"
#include "fedguard/config.h"
#include "fedguard/defense.h"
#include "fedguard/sim.h"

namespace py = pybind11;

namespace fedguard {
namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

nn::ParamVector ToParams(const FloatArray& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D parameter array");
  return nn::ParamVector{std::vector<float>(a.data(), a.data() + a.size()), ""};
}

FloatArray ToArray(const nn::ParamVector& p) {
  FloatArray out(static_cast<py::ssize_t>(p.size()));
  std::copy(p.values.begin(), p.values.end(), out.mutable_data());
  return out;
}

std::vector<nn::ParamVector> ToUpdates(const FloatArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected an (n_clients, dim) array");
  std::vector<nn::ParamVector> out;
  const auto dim = static_cast<std::size_t>(a.shape(1));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const float* row = a.data(i, 0);
    out.push_back({std::vector<float>(row, row + dim), ""});
  }
  return out;
}

ConfidenceMatrix ToConfidences(const FloatArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected an (N, L) confidence array");
  return ConfidenceMatrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                          std::vector<float>(a.data(), a.data() + a.size()));
}

py::dict RecordToDict(const sim::RoundRecord& r) {
  py::dict mistaken;
  for (std::size_t a = 0; a < sim::kAttackCount; ++a) {
    mistaken[py::str(std::string(attacks::AttackName(attacks::kAllAttacks[a])))] = r.mistaken[a];
  }
  py::dict d;
  d["round"] = r.round;
  d["selected"] = r.selected;
  d["n_b"] = r.n_b;
  d["n_m"] = r.n_m;
  d["mistaken"] = mistaken;
  d["accuracy"] = r.accuracy;
  d["nonfinite_uploads"] = r.nonfinite_uploads;
  d["fallback"] = r.fallback;
  return d;
}

py::dict ReportToDict(const sim::ExperimentReport& rep) {
  py::list records;
  for (const auto& r : rep.records) records.append(RecordToDict(r));
  py::dict d;
  d["records"] = records;
  d["final_accuracy"] = rep.final_accuracy;
  d["aer"] = rep.aer;
  return d;
}

}  // namespace
}  // namespace fedguard

PYBIND11_MODULE(_fedguard, m) {
  using namespace fedguard;
  m.doc() = "Native core of the fedguard-sim federated-learning simulator.";

  static py::exception<Error> error(m, "FedGuardError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", error.ptr());

  m.def("default_config_json", [] { return sim::ConfigToJson(sim::DefaultConfig()); },
        "Default experiment configuration as a JSON string.");
  m.def("normalize_config", [](const std::string& text) {
    return sim::ConfigToJson(sim::ParseConfig(text));
  }, py::arg("config_json"), "Parses, validates and re-serialises a JSON config.");
  m.def("csv_header", &sim::CsvHeader);
  m.def("attack_names", [] {
    std::vector<std::string> out;
    for (auto k : attacks::kAllAttacks) out.emplace_back(attacks::AttackName(k));
    return out;
  });

  m.def("run_experiment", [](const std::string& config_json, const std::string& csv_path) {
    const sim::ExperimentConfig c = sim::ParseConfig(config_json);
    sim::ExperimentReport rep;
    {
      py::gil_scoped_release release;
      rep = sim::RunExperiment(c, csv_path);
    }
    return ReportToDict(rep);
  }, py::arg("config_json"), py::arg("csv_path") = "",
        "Runs one experiment; returns records, final_accuracy and aer.");
  m.def("sweep", [](const std::string& config_json, const std::vector<double>& fractions,
                    const std::string& out_dir) {
    const sim::ExperimentConfig c = sim::ParseConfig(config_json);
    std::vector<sim::ExperimentReport> reps;
    {
      py::gil_scoped_release release;
      reps = sim::Sweep(c, fractions, out_dir);
    }
    py::list out;
    for (const auto& r : reps) out.append(ReportToDict(r));
    return out;
  }, py::arg("config_json"), py::arg("fractions"), py::arg("out_dir"));

  m.def("extract_features", [](const FloatArray& c_model, const FloatArray& c_ref,
                               const std::vector<int>& labels) {
    const auto f = defense::ExtractFeatures(ToConfidences(c_model), ToConfidences(c_ref), labels);
    return py::make_tuple(f.mse, f.tcd);
  }, py::arg("c_model"), py::arg("c_ref"), py::arg("labels"), "Returns (mse, tcd).");

  m.def("sign_flip", [](const FloatArray& p) { return ToArray(attacks::SignFlip(ToParams(p))); });
  m.def("bit_flip", [](const FloatArray& p, int bit_index) {
    return ToArray(attacks::BitFlip(ToParams(p), bit_index));
  }, py::arg("params"), py::arg("bit_index") = 10);

  m.def("fedavg", [](const FloatArray& u) { return ToArray(aggregation::FedAvg(ToUpdates(u))); });
  m.def("coordinate_median", [](const FloatArray& u) {
    return ToArray(aggregation::CoordinateMedian(ToUpdates(u)));
  });
  m.def("krum_select", [](const FloatArray& u, int f, int m) {
    return aggregation::KrumSelect(ToUpdates(u), f, m);
  }, py::arg("updates"), py::arg("f"), py::arg("m"));
  m.def("bulyan", [](const FloatArray& u, int f) {
    std::vector<int> selected;
    auto out = aggregation::Bulyan(ToUpdates(u), f, &selected);
    return py::make_tuple(ToArray(out), selected);
  }, py::arg("updates"), py::arg("f"), "Returns (aggregate, selected indices).");
}
