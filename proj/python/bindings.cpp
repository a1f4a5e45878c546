#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "flsched/channel.hpp"
#include "flsched/config.hpp"
#include "flsched/datasets.hpp"
#include "flsched/error.hpp"
#include "flsched/freshness.hpp"
#include "flsched/learner.hpp"
#include "flsched/metrics.hpp"
#include "flsched/scheduler.hpp"
#include "flsched/simulator.hpp"
#include "flsched/valuation.hpp"

namespace py = pybind11;
using namespace flsched;

namespace {

template <typename T>
std::vector<T> to_vector(std::span<const T> s) {
  return {s.begin(), s.end()};
}

py::dict record_to_dict(const RoundRecord& rec) {
  py::dict d;
  d["round"] = rec.round;
  d["selected"] = rec.selected;
  d["n_reliable"] = rec.n_reliable;
  d["accuracy"] = rec.accuracy;
  d["loss"] = rec.loss;
  d["v"] = rec.v;
  d["mean_aou"] = rec.mean_aou;
  d["max_aou"] = rec.max_aou;
  if (!rec.client_aou.empty()) {
    d["client_aou"] = rec.client_aou;
    d["client_scores"] = rec.client_scores;
  }
  return d;
}

py::dict result_to_dict(const RunResult& r) {
  py::dict d;
  d["policy"] = to_string(r.policy.kind);
  d["aou_threshold"] = r.policy.threshold.to_string();
  d["seed"] = r.seed;
  d["initial_accuracy"] = r.initial_accuracy;
  py::list records;
  for (const auto& rec : r.records) records.append(record_to_dict(rec));
  d["records"] = records;
  return d;
}

ExperimentConfig parse_config(const std::string& text) {
  return experiment_from_json(text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text));
}

std::vector<Policy> sweep_policies(const ExperimentConfig& cfg) {
  return cfg.sweep.policies.empty() ? std::vector<Policy>{cfg.run.policy} : cfg.sweep.policies;
}

std::vector<std::uint64_t> sweep_seeds(const ExperimentConfig& cfg) {
  return cfg.sweep.seeds.empty() ? std::vector<std::uint64_t>{cfg.run.master_seed}
                                 : cfg.sweep.seeds;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Federated learning client scheduling simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<AouState>(m, "AouState")
      .def(py::init([](std::size_t clients, const std::string& growth) {
             return AouState(clients, Growth::parse(growth));
           }),
           py::arg("clients"), py::arg("growth") = "constant")
      .def_property_readonly("ages", [](const AouState& s) { return to_vector(s.ages()); })
      .def_property_readonly("last_selected",
                             [](const AouState& s) { return to_vector(s.last_selected()); })
      .def_property_readonly("growth", [](const AouState& s) { return s.growth().to_string(); })
      .def("__len__", &AouState::size);

  m.def(
      "aou_step",
      [](const AouState& state, const std::vector<std::size_t>& selected, std::size_t round) {
        return aou_step(state, selected, round);
      },
      py::arg("state"), py::arg("selected"), py::arg("round"));

  py::class_<ValueLedger>(m, "ValueLedger")
      .def(py::init<std::vector<double>, double>(), py::arg("initial"), py::arg("gamma") = 0.0)
      .def_property_readonly("rounds", &ValueLedger::rounds)
      .def_property_readonly("gamma", &ValueLedger::gamma)
      .def_property_readonly("initial", [](const ValueLedger& l) { return to_vector(l.initial()); })
      .def_property_readonly("scores", [](const ValueLedger& l) { return to_vector(l.scores()); })
      .def("history", [](const ValueLedger& l, std::size_t k) { return to_vector(l.history(k)); })
      .def(
          "record_round",
          [](const ValueLedger& l, const std::vector<std::size_t>& participants, double v) {
            return l.record_round(participants, v);
          },
          py::arg("participants"), py::arg("v"))
      .def("__len__", &ValueLedger::size);

  m.def("init_values", &init_values, py::arg("clients"), py::arg("seed"), py::arg("gamma") = 0.0);

  py::class_<ChannelConfig>(m, "ChannelConfig")
      .def(py::init<>())
      .def_readwrite("p", &ChannelConfig::p)
      .def_readwrite("n_subchannels", &ChannelConfig::n_subchannels)
      .def_readwrite("tx_power", &ChannelConfig::tx_power)
      .def_readwrite("rayleigh_scale", &ChannelConfig::rayleigh_scale)
      .def_readwrite("snr_threshold", &ChannelConfig::snr_threshold)
      .def("violations", &ChannelConfig::violations);

  py::class_<ChannelRealization>(m, "ChannelRealization")
      .def_property_readonly("clients", &ChannelRealization::clients)
      .def_property_readonly("subchannels", &ChannelRealization::subchannels)
      .def_property_readonly("round", &ChannelRealization::round)
      .def("reliable", &ChannelRealization::reliable)
      .def("gain", &ChannelRealization::gain)
      .def("feasible", [](const ChannelRealization& c, std::size_t k, std::size_t n) {
        return feasible(c, k, n);
      });

  m.def("draw_round", &draw_round, py::arg("config"), py::arg("clients"), py::arg("round"),
        py::arg("seed"));
  m.def("reliable_set", &reliable_set);

  m.def(
      "select",
      [](const std::string& policy, const std::vector<std::size_t>& reliable, std::size_t n,
         const std::vector<double>& aou, const std::vector<double>& scores, std::uint64_t seed,
         const std::string& threshold) {
        const Policy p{parse_policy_kind(policy), ThresholdRule::parse(threshold)};
        return select(p, reliable, n, aou, scores, seed).selected;
      },
      py::arg("policy"), py::arg("reliable"), py::arg("n_channels"), py::arg("aou"),
      py::arg("scores"), py::arg("seed") = 0, py::arg("threshold") = "mean",
      "Selected client ids in rank order.");

  py::class_<LabeledDataset>(m, "LabeledDataset")
      .def_readonly("dim", &LabeledDataset::dim)
      .def_readonly("classes", &LabeledDataset::classes)
      .def_readonly("features", &LabeledDataset::features)
      .def_readonly("labels", &LabeledDataset::labels)
      .def("__len__", &LabeledDataset::size);

  m.def("synth_gaussian", &synth_gaussian, py::arg("classes"), py::arg("dim"), py::arg("n"),
        py::arg("separation"), py::arg("seed"));
  m.def(
      "load_idx",
      [](const std::string& images, const std::string& labels) { return load_idx(images, labels); },
      py::arg("images"), py::arg("labels"));
  m.def("partition_iid",
        [](const LabeledDataset& ds, std::size_t clients, std::uint64_t seed) {
          return partition_iid(ds, clients, seed).assignment;
        });
  m.def("partition_shards", [](const LabeledDataset& ds, std::size_t clients, std::size_t shards,
                               std::size_t per_client, std::uint64_t seed) {
    return partition_shards(ds, clients, shards, per_client, seed).assignment;
  });

  py::class_<ModelParams>(m, "ModelParams")
      .def_static(
          "initialize",
          [](const std::string& arch, std::size_t inputs, std::size_t classes, std::size_t hidden,
             std::uint64_t seed) {
            if (arch != "softmax" && arch != "mlp") {
              throw std::invalid_argument("arch must be softmax or mlp, got '" + arch + "'");
            }
            const auto a = arch == "softmax" ? Architecture::softmax(inputs, classes)
                                             : Architecture::mlp(inputs, classes, hidden);
            return ModelParams::initialize(a, seed);
          },
          py::arg("arch"), py::arg("inputs"), py::arg("classes"), py::arg("hidden") = 64,
          py::arg("seed") = 0)
      .def_property_readonly("values", [](const ModelParams& p) { return to_vector(p.values()); })
      .def_property_readonly("architecture", [](const ModelParams& p) { return p.arch().to_string(); })
      .def("__len__", &ModelParams::size);

  m.def("local_loss",
        [](const ModelParams& p, const LabeledDataset& ds) { return local_loss(p, ds); });
  m.def(
      "grad_check",
      [](const ModelParams& p, const LabeledDataset& ds, double step) {
        return grad_check(p, ds, {}, step);
      },
      py::arg("params"), py::arg("data"), py::arg("step") = 1e-5);
  m.def("evaluate", [](const ModelParams& p, const LabeledDataset& ds) {
    const auto e = evaluate(p, ds);
    return py::make_tuple(e.accuracy, e.loss);
  });

  m.def("default_config", [] { return default_config_json().dump(2); },
        "Every config key at its default, as JSON text.");
  m.def(
      "resolve_config",
      [](const std::string& text) { return to_json(parse_config(text)).dump(2); },
      py::arg("config_json"));
  m.def(
      "run",
      [](const std::string& text, std::size_t threads) {
        const auto cfg = parse_config(text);
        RunResult result;
        {
          py::gil_scoped_release release;
          result = run(cfg.run, ExecutionOptions{threads});
        }
        return result_to_dict(result);
      },
      py::arg("config_json") = "", py::arg("threads") = 1);
  m.def(
      "sweep",
      [](const std::string& text, std::size_t threads) {
        const auto cfg = parse_config(text);
        const auto policies = sweep_policies(cfg);
        const auto seeds = sweep_seeds(cfg);
        std::vector<RunResult> results;
        {
          py::gil_scoped_release release;
          results = sweep(cfg.run, policies, seeds, ExecutionOptions{threads});
        }
        py::list out;
        for (const auto& r : results) out.append(result_to_dict(r));
        return out;
      },
      py::arg("config_json") = "", py::arg("threads") = 1);
  m.def(
      "metrics_csv",
      [](const std::string& text, std::size_t threads) {
        const auto cfg = parse_config(text);
        const auto policies = sweep_policies(cfg);
        const auto seeds = sweep_seeds(cfg);
        std::ostringstream out;
        {
          py::gil_scoped_release release;
          const auto results = sweep(cfg.run, policies, seeds, ExecutionOptions{threads});
          write_metrics_csv(out, metrics_rows(results));
        }
        return out.str();
      },
      py::arg("config_json") = "", py::arg("threads") = 1,
      "metrics.csv text for the config's policy x seed sweep.");
}
