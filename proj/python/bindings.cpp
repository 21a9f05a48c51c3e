// Python bindings. Structured values cross the boundary as JSON text; the
// Python package turns them into dicts.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cimnet/experiment.hpp"

namespace py = pybind11;
using namespace cimnet;
using nlohmann::json;

namespace {

ArchSpace arch_space_of(const std::string& family, const std::string& space_json) {
  return space_json.empty() ? builtin_space(family_from_string(family)) : json::parse(space_json).get<ArchSpace>();
}

ConfigSpace config_space_of(const std::string& text) {
  return text.empty() ? default_config_space() : json::parse(text).get<ConfigSpace>();
}

SubnetArch arch_of(const ArchSpace& space, const std::string& arch) {
  if (arch == "canonical") return canonical_subnet(space);
  if (arch == "minimal") return minimal_subnet(space);
  if (arch == "maximal") return maximal_subnet(space);
  auto a = json::parse(arch).get<SubnetArch>();
  validate_subnet(space, a);
  return a;
}

HardwareConfig config_of(const ConfigSpace& space, const std::string& cfg) {
  if (cfg == "static") return static_config(space);
  return config_from_json(json::parse(cfg), space);
}

json layer_cycles_json(const LayerCycles& r) {
  return {{"cycles", r.cycles},
          {"binding", resource_name(r.binding)},
          {"bytes", {{"dram", r.bytes.dram}, {"l2", r.bytes.l2}, {"l1", r.bytes.l1}, {"ma", r.bytes.ma}}},
          {"terms",
           {{"compute", r.terms.compute}, {"dram", r.terms.dram}, {"l2", r.terms.l2}, {"l1", r.terms.l1}, {"ma", r.terms.ma}}}};
}

std::vector<ParetoPoint> points_of(const std::vector<std::pair<double, double>>& pts) {
  std::vector<ParetoPoint> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ParetoPoint p;
    p.accuracy = pts[i].first;
    p.cycles = pts[i].second;
    p.id = static_cast<std::int64_t>(i);
    out.push_back(p);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cimnet core: CiM simulator, dataflow compiler, genome encoding and joint search";

  py::register_exception<WorkloadError>(m, "WorkloadError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<GenomeError>(m, "GenomeError", PyExc_ValueError);
  py::register_exception<PredictError>(m, "PredictError", PyExc_ValueError);

  m.def("arch_space", [](const std::string& family) { return json(builtin_space(family_from_string(family))).dump(); },
        py::arg("family"));
  m.def("config_space", [] { return json(default_config_space()).dump(); });
  m.def(
      "sample_subnet",
      [](const std::string& family, std::uint64_t seed, const std::string& space) {
        return json(sample_subnet(arch_space_of(family, space), seed)).dump();
      },
      py::arg("family"), py::arg("seed"), py::arg("space") = "");
  m.def(
      "lower",
      [](const std::string& family, const std::string& arch, const std::string& space) {
        const auto s = arch_space_of(family, space);
        return json(lower_to_layers(s, arch_of(s, arch))).dump();
      },
      py::arg("family"), py::arg("arch") = "canonical", py::arg("space") = "");
  m.def(
      "count_params",
      [](const std::string& family, const std::string& arch) {
        const auto s = builtin_space(family_from_string(family));
        return count_params(s, arch_of(s, arch));
      },
      py::arg("family"), py::arg("arch") = "canonical");

  m.def(
      "sample_config",
      [](std::uint64_t seed, const std::string& space) {
        const auto s = config_space_of(space);
        return config_to_json(sample_config(s, seed), s).dump();
      },
      py::arg("seed"), py::arg("space") = "");
  m.def(
      "static_config",
      [](const std::string& space) {
        const auto s = config_space_of(space);
        return config_to_json(static_config(s), s).dump();
      },
      py::arg("space") = "");
  m.def(
      "validate_config",
      [](const std::string& cfg, const std::string& space) {
        const auto s = config_space_of(space);
        return validate_config(config_of(s, cfg), s).violations;
      },
      py::arg("config"), py::arg("space") = "");
  m.def(
      "count_valid_configs", [](const std::string& space) { return count_valid_configs(config_space_of(space)); },
      py::arg("space") = "");

  m.def(
      "compile_dataflow",
      [](const std::string& layer, const std::string& cfg, const std::string& space) {
        const auto s = config_space_of(space);
        return json(compile_dataflow(json::parse(layer).get<LayerSpec>(), config_of(s, cfg))).dump();
      },
      py::arg("layer"), py::arg("config") = "static", py::arg("space") = "");
  m.def(
      "simulate_layer",
      [](const std::string& layer, const std::string& cfg, const std::string& dataflow, const std::string& space) {
        const auto s = config_space_of(space);
        const auto l = json::parse(layer).get<LayerSpec>();
        const auto c = config_of(s, cfg);
        const Dataflow df = dataflow.empty() ? compile_dataflow(l, c) : json::parse(dataflow).get<Dataflow>();
        auto out = layer_cycles_json(simulate_layer(l, c, df));
        out["dataflow"] = df;
        return out.dump();
      },
      py::arg("layer"), py::arg("config") = "static", py::arg("dataflow") = "", py::arg("space") = "");
  m.def(
      "simulate",
      [](const std::string& family, const std::string& arch, const std::string& cfg, const std::string& space) {
        const auto as = builtin_space(family_from_string(family));
        const auto cs = config_space_of(space);
        py::gil_scoped_release release;
        const auto report = simulate(lower_to_layers(as, arch_of(as, arch)), config_of(cs, cfg), compile_dataflow);
        json layers = json::array();
        for (const auto& l : report.per_layer) {
          layers.push_back({{"name", l.name}, {"cycles", l.cycles}, {"binding", resource_name(l.binding)},
                            {"dataflow", l.dataflow}});
        }
        return json{{"total_cycles", report.total_cycles}, {"layers", layers}}.dump();
      },
      py::arg("family"), py::arg("arch") = "canonical", py::arg("config") = "static", py::arg("space") = "");

  m.def(
      "proxy_accuracy",
      [](const std::string& family, const std::string& arch) {
        const auto s = builtin_space(family_from_string(family));
        return proxy_accuracy(s, arch_of(s, arch), ProxyParams{});
      },
      py::arg("family"), py::arg("arch") = "canonical");

  m.def(
      "encode",
      [](const std::string& family, const std::string& setting, const std::string& arch, const std::string& cfg) {
        const auto space = make_genome_space(setting_from_string(setting), builtin_space(family_from_string(family)),
                                             default_config_space());
        return encode(arch_of(space.arch, arch), config_of(space.config, cfg), space).to_string();
      },
      py::arg("family"), py::arg("setting"), py::arg("arch") = "canonical", py::arg("config") = "static");
  m.def(
      "decode",
      [](const std::string& family, const std::string& setting, const std::string& genome) {
        const auto space = make_genome_space(setting_from_string(setting), builtin_space(family_from_string(family)),
                                             default_config_space());
        const auto d = decode(Genome::from_string(genome), space);
        return json{{"arch", d.arch}, {"config", config_to_json(d.config, space.config)}}.dump();
      },
      py::arg("family"), py::arg("setting"), py::arg("genome"));
  m.def(
      "genome_schema",
      [](const std::string& family, const std::string& setting) {
        const auto space = make_genome_space(setting_from_string(setting), builtin_space(family_from_string(family)),
                                             default_config_space());
        return genome_layout(space).schema(space).dump();
      },
      py::arg("family"), py::arg("setting"));

  m.def(
      "fit_ridge",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, bool log_target) {
        const auto model = fit_ridge(X, y, lambda, log_target ? TargetTransform::Log : TargetTransform::Identity);
        return py::make_tuple(model.weights, model.bias);
      },
      py::arg("X"), py::arg("y"), py::arg("lam") = 1.0, py::arg("log_target") = false,
      "Ridge fit with an unpenalized bias; returns (weights, bias) in the transformed target domain.");
  m.def("kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau(x, y); });
  m.def("mape", [](const std::vector<double>& t, const std::vector<double>& p) { return mape(t, p); });

  m.def("non_dominated_sort", [](const std::vector<std::pair<double, double>>& pts) {
    std::vector<Objectives> o;
    for (const auto& [a, c] : pts) o.push_back({a, c});
    return non_dominated_sort(o);
  });
  m.def("pareto_front", [](const std::vector<std::pair<double, double>>& pts) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : pareto_front(points_of(pts))) out.emplace_back(p.accuracy, p.cycles);
    return out;
  });
  m.def("hypervolume", [](const std::vector<std::pair<double, double>>& pts, std::pair<double, double> ref) {
    return hypervolume(points_of(pts), {ref.first, ref.second});
  });
  m.def("cycle_reduction_at_iso_accuracy",
        [](const std::vector<std::pair<double, double>>& pts, std::pair<double, double> baseline) {
          try {
            return cycle_reduction_at_iso_accuracy(points_of(pts), {baseline.first, baseline.second});
          } catch (const std::domain_error& e) {
            throw py::value_error(e.what());
          }
        });

  m.def(
      "baseline",
      [](const std::string& family) {
        const auto b = evaluate_baseline(builtin_space(family_from_string(family)), default_config_space(), ProxyParams{});
        return json{{"accuracy", b.accuracy}, {"cycles", b.cycles}, {"arch", b.arch},
                    {"config", config_to_json(b.config, default_config_space())}}
            .dump();
      },
      py::arg("family"));
  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& base_dir) {
        RunOutcome out;
        {
          py::gil_scoped_release release;
          try {
            out = run_experiment(parse_experiment(text, base_dir));
          } catch (const ExperimentConfigError& e) {
            out = {kExitConfigError, e.what(), {}};
          }
        }
        std::vector<std::string> written;
        for (const auto& p : out.written) written.push_back(p.string());
        return py::make_tuple(out.exit_code, out.message, written);
      },
      py::arg("config_json"), py::arg("base_dir") = ".");
}
