#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cimnet/experiment.hpp"

using namespace cimnet;
namespace fs = std::filesystem;

namespace {

int report(const RunOutcome& out) {
  if (out.exit_code == kExitOk) {
    std::cerr << out.message << '\n';
    for (const auto& p : out.written) std::cerr << "  wrote " << p.string() << '\n';
  } else {
    std::cerr << "error: " << out.message << '\n';
  }
  return out.exit_code;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ExperimentConfigError("", 0, "cannot read '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ExperimentConfigError("", 0, path + ": " + e.what());
  }
}

SubnetArch resolve_arch(const ArchSpace& space, const std::string& what) {
  if (what == "canonical") return canonical_subnet(space);
  if (what == "minimal") return minimal_subnet(space);
  if (what == "maximal") return maximal_subnet(space);
  auto arch = read_json(what).get<SubnetArch>();
  validate_subnet(space, arch);
  return arch;
}

HardwareConfig resolve_config(const ConfigSpace& space, const std::string& what) {
  if (what == "static") return static_config(space);
  return config_from_json(read_json(what), space);
}

LayerSpec parse_layer(const std::string& text) {
  std::vector<std::int64_t> v;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      v.push_back(std::stoll(part));
    } catch (const std::exception&) {
      throw ExperimentConfigError("layer", 0, "--layer expects G,I,Ic,Oc[,elem_bytes], got '" + text + "'");
    }
  }
  if (v.size() != 4 && v.size() != 5) {
    throw ExperimentConfigError("layer", 0, "--layer expects G,I,Ic,Oc[,elem_bytes], got '" + text + "'");
  }
  LayerSpec l{"layer", v[0], v[1], v[2], v[3], v.size() == 5 ? static_cast<int>(v[4]) : 1};
  l.validate();
  return l;
}

void emit(const std::string& out_path, const std::string& body) {
  if (out_path.empty() || out_path == "-") {
    std::cout << body;
  } else {
    write_file_atomic(out_path, body);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// Reads points from a CSV with `accuracy` and `cycles` columns (and an
// optional `genome_id` or `id` column).
std::vector<ParetoPoint> read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ExperimentConfigError("in", 0, "cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ExperimentConfigError("in", 1, path + ": empty file");
  const auto header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int acc = col("accuracy"), cyc = col("cycles");
  const int id = col("genome_id") >= 0 ? col("genome_id") : col("id");
  if (acc < 0 || cyc < 0) throw ExperimentConfigError("in", 1, path + ": line 1: need 'accuracy' and 'cycles' columns");
  std::vector<ParetoPoint> pts;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    try {
      ParetoPoint p;
      p.accuracy = std::stod(cells.at(static_cast<std::size_t>(acc)));
      p.cycles = std::stod(cells.at(static_cast<std::size_t>(cyc)));
      p.id = id >= 0 ? std::stoll(cells.at(static_cast<std::size_t>(id))) : lineno - 2;
      pts.push_back(p);
    } catch (const std::exception&) {
      throw ExperimentConfigError("in", lineno, path + ": line " + std::to_string(lineno) + ": malformed row");
    }
  }
  if (pts.empty()) throw ExperimentConfigError("in", 0, path + ": no points");
  return pts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint DNN architecture / compute-in-memory hardware search"};
  app.require_subcommand(1);

  // search
  auto* search = app.add_subcommand("search", "Run the joint NSGA-II search");
  std::string s_setting = "elastic-arch-elastic-config", s_family = "mbv3", s_out = "run", s_predictor = "ridge",
              s_config;
  int s_k = 5, s_threads = 1;
  std::size_t s_m = 2000, s_n = 500;
  std::uint64_t s_seed = 0;
  search->add_option("--setting", s_setting, "elastic-arch-static-config | static-arch-elastic-config | elastic-arch-elastic-config");
  search->add_option("--family", s_family, "mbv3 | resnet50 | vit");
  search->add_option("--k", s_k, "outer iterations K");
  search->add_option("--m", s_m, "screened pool size M");
  search->add_option("--n", s_n, "true evaluations per iteration N");
  search->add_option("--seed", s_seed, "master seed");
  search->add_option("--out", s_out, "output directory");
  search->add_option("--predictor", s_predictor, "ridge | svr");
  search->add_option("--threads", s_threads, "parallel true evaluations");
  search->add_option("--config", s_config, "experiment JSON used as defaults; explicit flags override it");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment JSON file");
  std::string r_path;
  run->add_option("config", r_path, "experiment JSON")->required();

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Per-layer cycle report for one subnet and configuration");
  std::string m_family = "mbv3", m_arch = "canonical", m_cfg = "static", m_out;
  simulate_cmd->add_option("--family", m_family, "mbv3 | resnet50 | vit");
  simulate_cmd->add_option("--arch", m_arch, "canonical | minimal | maximal | subnet JSON file");
  simulate_cmd->add_option("--config", m_cfg, "static | hardware JSON file");
  simulate_cmd->add_option("--out", m_out, "CSV destination (default stdout)");

  // dataflow
  auto* dataflow_cmd = app.add_subcommand("dataflow", "Inspect the tiling options of one layer");
  std::string d_layer, d_cfg = "static";
  std::size_t d_top = 20;
  dataflow_cmd->add_option("--layer", d_layer, "G,I,Ic,Oc[,elem_bytes]")->required();
  dataflow_cmd->add_option("--config", d_cfg, "static | hardware JSON file");
  dataflow_cmd->add_option("--top", d_top, "rows to print (0 = all)");

  // predictors-eval
  auto* peval = app.add_subcommand("predictors-eval", "Predictor learning curves on random genomes");
  std::string p_family = "mbv3", p_out = "run", p_model = "ridge";
  std::vector<std::string> p_settings;
  std::vector<std::size_t> p_sizes = {100, 250, 500, 1000};
  std::size_t p_pool = 1500;
  int p_trials = 10;
  std::uint64_t p_seed = 0;
  peval->add_option("--family", p_family, "mbv3 | resnet50 | vit");
  peval->add_option("--setting", p_settings, "search space(s); default all three");
  peval->add_option("--sizes", p_sizes, "training sizes")->delimiter(',');
  peval->add_option("--pool", p_pool, "labelled genomes per space");
  peval->add_option("--trials", p_trials, "resampling trials per size");
  peval->add_option("--model", p_model, "ridge | svr");
  peval->add_option("--seed", p_seed, "master seed");
  peval->add_option("--out", p_out, "output directory");

  // pareto
  auto* pareto = app.add_subcommand("pareto", "Extract the Pareto front of a CSV of (accuracy, cycles) points");
  std::string f_in, f_out;
  std::optional<double> f_acc, f_cyc;
  pareto->add_option("--in", f_in, "CSV with accuracy and cycles columns")->required();
  pareto->add_option("--out", f_out, "front CSV destination (default stdout)");
  pareto->add_option("--baseline-accuracy", f_acc, "baseline accuracy for the iso-accuracy reduction");
  pareto->add_option("--baseline-cycles", f_cyc, "baseline cycles for the iso-accuracy reduction");

  // schema
  auto* schema = app.add_subcommand("schema", "Print the genome layout of a search space");
  std::string g_family = "mbv3", g_setting = "elastic-arch-elastic-config";
  schema->add_option("--family", g_family, "mbv3 | resnet50 | vit");
  schema->add_option("--setting", g_setting, "search setting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*run) return report(run_experiment_file(r_path));

    if (*search) {
      ExperimentConfig cfg;
      if (!s_config.empty()) cfg = load_experiment(s_config);
      auto given = [&](const char* flag) { return search->count(flag) > 0; };
      if (s_config.empty() || given("--family")) cfg.family = family_from_string(s_family);
      if (s_config.empty() || given("--setting")) cfg.setting = setting_from_string(s_setting);
      if (s_config.empty() || given("--k")) cfg.search.k = s_k;
      if (s_config.empty() || given("--m")) cfg.search.m = s_m;
      if (s_config.empty() || given("--n")) cfg.search.n = s_n;
      if (s_config.empty() || given("--seed")) cfg.search.seed = s_seed;
      if (s_config.empty() || given("--out")) cfg.output_dir = s_out;
      if (s_config.empty() || given("--threads")) cfg.search.threads = s_threads;
      if (s_config.empty() || given("--predictor")) cfg.search.surrogate.kind = model_kind_from_string(s_predictor);
      cfg.command = Command::Search;
      return report(run_experiment(cfg));
    }

    if (*peval) {
      ExperimentConfig cfg;
      cfg.command = Command::PredictorsEval;
      cfg.family = family_from_string(p_family);
      cfg.output_dir = p_out;
      cfg.search.seed = p_seed;
      cfg.search.surrogate.kind = model_kind_from_string(p_model);
      if (!p_settings.empty()) {
        cfg.predictor_eval.settings.clear();
        for (const auto& s : p_settings) cfg.predictor_eval.settings.push_back(setting_from_string(s));
      }
      cfg.predictor_eval.pool_size = p_pool;
      cfg.predictor_eval.plan.train_sizes = p_sizes;
      cfg.predictor_eval.plan.trials = p_trials;
      cfg.predictor_eval.plan.seed = p_seed;
      return report(run_experiment(cfg));
    }

    if (*simulate_cmd) {
      const ArchSpace space = builtin_space(family_from_string(m_family));
      const ConfigSpace cs = default_config_space();
      const SubnetArch arch = resolve_arch(space, m_arch);
      const HardwareConfig hw = resolve_config(cs, m_cfg);
      CachingCompiler compiler;
      const CycleReport rep = simulate(lower_to_layers(space, arch), hw,
                                       [&](const LayerSpec& l, const HardwareConfig& c) { return compiler(l, c); });
      std::ostringstream csv;
      rep.write_csv(csv);
      emit(m_out, csv.str());
      std::cerr << "total_cycles " << rep.total_cycles << "  proxy_accuracy "
                << format_double(proxy_accuracy(space, arch, ProxyParams{})) << '\n';
      return kExitOk;
    }

    if (*dataflow_cmd) {
      const LayerSpec layer = parse_layer(d_layer);
      const ConfigSpace cs = default_config_space();
      const HardwareConfig hw = resolve_config(cs, d_cfg);
      auto options = enumerate_tile_options(layer, hw);
      if (options.empty()) throw InfeasibleError("no tiling of this layer fits the memory arrays");
      std::sort(options.begin(), options.end(), [](const TileOption& a, const TileOption& b) {
        return better_option(a.result, a.dataflow, b.result, b.dataflow);
      });
      const Dataflow chosen = compile_dataflow(layer, hw);
      std::printf("%-4s %-5s %5s %5s %5s %5s %5s %5s %5s %5s %6s %6s %10s %-7s\n", "rank", "pick", "sg", "si", "so",
                  "sic", "tg", "ti", "to", "tic", "nodes", "steps", "cycles", "binding");
      const std::size_t rows = d_top == 0 ? options.size() : std::min(d_top, options.size());
      for (std::size_t i = 0; i < rows; ++i) {
        const auto& df = options[i].dataflow;
        std::printf("%-4zu %-5s %5lld %5lld %5lld %5lld %5lld %5lld %5lld %5lld %6lld %6lld %10lld %-7s\n", i + 1,
                    df == chosen ? "*" : "", static_cast<long long>(df.sg), static_cast<long long>(df.si),
                    static_cast<long long>(df.so), static_cast<long long>(df.sic), static_cast<long long>(df.tg),
                    static_cast<long long>(df.ti), static_cast<long long>(df.to), static_cast<long long>(df.tic),
                    static_cast<long long>(df.active_nodes()), static_cast<long long>(df.temporal_steps()),
                    static_cast<long long>(options[i].result.cycles), resource_name(options[i].result.binding));
      }
      std::printf("%zu options; compute lower bound %lld cycles\n", options.size(),
                  static_cast<long long>(compute_lower_bound(layer, hw)));
      return kExitOk;
    }

    if (*pareto) {
      const auto pts = read_points(f_in);
      const auto front = pareto_front(pts);
      std::string body = "genome_id,accuracy,cycles\n";
      for (const auto& p : front) {
        body += std::to_string(p.id) + ',' + format_double(p.accuracy) + ',' + format_double(p.cycles) + '\n';
      }
      emit(f_out, body);
      if (f_acc.has_value() != f_cyc.has_value()) {
        throw ExperimentConfigError("baseline", 0, "give both --baseline-accuracy and --baseline-cycles");
      }
      if (f_acc) {
        std::cerr << "cycle_reduction_at_iso_accuracy " << format_double(cycle_reduction_at_iso_accuracy(front, {*f_acc, *f_cyc}))
                  << '\n';
      }
      return kExitOk;
    }

    if (*schema) {
      const GenomeSpace space = make_genome_space(setting_from_string(g_setting),
                                                  builtin_space(family_from_string(g_family)), default_config_space());
      const auto layout = genome_layout(space);
      auto j = layout.schema(space);
      j["schema_hash"] = layout.schema_hash(space);
      std::cout << j.dump(2) << '\n';
      return kExitOk;
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitOk;
}
