#include "cimnet/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cimnet {

namespace fs = std::filesystem;

namespace {

// 1-based line of the first key in `path`, searched in order; 0 if absent.
int line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const auto hit = text.find('"' + key + '"', pos);
    if (hit == std::string::npos) return 0;
    pos = hit + 1;
  }
  if (path.empty()) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

std::string join(const std::vector<std::string>& path) {
  std::string s;
  for (const auto& p : path) s += (s.empty() ? "" : ".") + p;
  return s;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    const int line = line_of(text_, path);
    std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
    throw ExperimentConfigError(join(path), line, where + "field '" + join(path) + "': " + msg);
  }

  // Runs `fn`, re-anchoring any exception at `path`.
  template <typename Fn>
  auto at(const std::vector<std::string>& path, Fn&& fn) const {
    try {
      return fn();
    } catch (const ExperimentConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
  }

  void only_keys(const nlohmann::json& obj, const std::vector<std::string>& prefix,
                 const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(prefix, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) {
        auto p = prefix;
        p.push_back(key);
        fail(p, "unknown field");
      }
    }
  }

 private:
  const std::string& text_;
};

template <typename T>
T get_positive(const Reader& r, const nlohmann::json& j, const std::vector<std::string>& path, T fallback) {
  const auto& key = path.back();
  if (!j.contains(key)) return fallback;
  return r.at(path, [&] {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1) throw std::invalid_argument("must be a positive integer");
    return static_cast<T>(v.get<long long>());
  });
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

ArchSpace ExperimentConfig::resolved_arch_space() const { return arch_space ? *arch_space : builtin_space(family); }

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& msg) { throw ExperimentConfigError(field, 0, "field '" + field + "': " + msg); };
  if (search.k < 1) bad("k", "must be >= 1");
  if (search.n < 1) bad("n", "must be >= 1");
  if (search.m < search.n) bad("m", "must be >= n");
  if (search.threads < 1) bad("threads", "must be >= 1");
  if (evaluation_budget && static_cast<std::size_t>(search.k) * search.n > evaluation_budget) {
    bad("evaluation_budget", "k*n = " + std::to_string(static_cast<std::size_t>(search.k) * search.n) +
                                 " exceeds the declared budget " + std::to_string(evaluation_budget));
  }
  if (arch_space && arch_space->family != family) bad("arch_space", "family does not match 'family'");
  if (command == Command::PredictorsEval) {
    const auto& pe = predictor_eval;
    if (pe.settings.empty()) bad("predictor_eval.settings", "must not be empty");
    if (pe.plan.trials < 1) bad("predictor_eval.trials", "must be >= 1");
    for (auto s : pe.plan.train_sizes) {
      if (s < 1 || s >= pe.pool_size) bad("predictor_eval.train_sizes", "each size must be in [1, pool_size)");
    }
  }
}

ExperimentConfig parse_experiment(const std::string& text, const fs::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte ? byte - 1 : 0), '\n'));
    throw ExperimentConfigError("", line, "line " + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  Reader r(text);
  r.only_keys(j, {}, {"command", "family", "setting", "k", "m", "n", "seed", "threads", "evaluation_budget", "output_dir",
                      "predictor", "nsga", "proxy", "config_space", "arch_space", "predictor_eval"});
  ExperimentConfig cfg;
  if (j.contains("command")) {
    cfg.command = r.at({"command"}, [&] {
      const auto s = j.at("command").get<std::string>();
      if (s == "search") return Command::Search;
      if (s == "predictors-eval") return Command::PredictorsEval;
      throw std::invalid_argument("unknown command '" + s + "' (expected search or predictors-eval)");
    });
  }
  if (!j.contains("family")) r.fail({"family"}, "required");
  cfg.family = r.at({"family"}, [&] { return family_from_string(j.at("family").get<std::string>()); });
  if (j.contains("setting")) {
    cfg.setting = r.at({"setting"}, [&] { return setting_from_string(j.at("setting").get<std::string>()); });
  }
  cfg.search.k = get_positive<int>(r, j, {"k"}, cfg.search.k);
  cfg.search.m = get_positive<std::size_t>(r, j, {"m"}, cfg.search.m);
  cfg.search.n = get_positive<std::size_t>(r, j, {"n"}, cfg.search.n);
  cfg.search.threads = get_positive<int>(r, j, {"threads"}, cfg.search.threads);
  if (j.contains("seed")) {
    cfg.search.seed = r.at({"seed"}, [&] {
      if (!j.at("seed").is_number_unsigned()) throw std::invalid_argument("must be a non-negative integer");
      return j.at("seed").get<std::uint64_t>();
    });
  }
  cfg.evaluation_budget = get_positive<std::size_t>(r, j, {"evaluation_budget"}, 0);
  if (j.contains("output_dir")) {
    cfg.output_dir = r.at({"output_dir"}, [&] { return fs::path(j.at("output_dir").get<std::string>()); });
    if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
  }
  if (j.contains("predictor")) {
    r.only_keys(j.at("predictor"), {"predictor"}, {"kind", "lambda", "cv_lambda", "svr_c", "svr_epsilon", "svr_epochs"});
    cfg.search.surrogate = r.at({"predictor"}, [&] { return j.at("predictor").get<SurrogateParams>(); });
  }
  if (j.contains("nsga")) {
    r.only_keys(j.at("nsga"), {"nsga"}, {"population", "crossover_prob", "mutation_rate", "stall_factor"});
    cfg.search.nsga = r.at({"nsga"}, [&] { return j.at("nsga").get<NsgaParams>(); });
  }
  if (j.contains("proxy")) {
    r.only_keys(j.at("proxy"), {"proxy"}, {"ceiling", "capacity", "perturbation", "seed"});
    cfg.proxy = r.at({"proxy"}, [&] { return j.at("proxy").get<ProxyParams>(); });
  }
  if (j.contains("config_space")) {
    r.only_keys(j.at("config_space"), {"config_space"}, {"base", "ladder", "compute_budget", "memory_budget_range"});
    cfg.config_space = r.at({"config_space"}, [&] { return j.at("config_space").get<ConfigSpace>(); });
  }
  if (j.contains("arch_space")) {
    cfg.arch_space = r.at({"arch_space"}, [&] {
      const auto& a = j.at("arch_space");
      if (a.is_string()) {
        fs::path p = a.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        return nlohmann::json::parse(read_text(p)).get<ArchSpace>();
      }
      return a.get<ArchSpace>();
    });
  }
  if (j.contains("predictor_eval")) {
    const auto& pe = j.at("predictor_eval");
    r.only_keys(pe, {"predictor_eval"}, {"settings", "pool_size", "train_sizes", "trials", "test_size"});
    auto& spec = cfg.predictor_eval;
    if (pe.contains("settings")) {
      spec.settings = r.at({"predictor_eval", "settings"}, [&] {
        std::vector<SearchSetting> out;
        for (const auto& s : pe.at("settings")) out.push_back(setting_from_string(s.get<std::string>()));
        return out;
      });
    }
    spec.pool_size = get_positive<std::size_t>(r, pe, {"predictor_eval", "pool_size"}, spec.pool_size);
    spec.plan.trials = get_positive<int>(r, pe, {"predictor_eval", "trials"}, spec.plan.trials);
    if (pe.contains("test_size")) {
      spec.plan.test_size = r.at({"predictor_eval", "test_size"}, [&] { return pe.at("test_size").get<std::size_t>(); });
    }
    if (pe.contains("train_sizes")) {
      spec.plan.train_sizes =
          r.at({"predictor_eval", "train_sizes"}, [&] { return pe.at("train_sizes").get<std::vector<std::size_t>>(); });
    }
  }
  cfg.predictor_eval.plan.seed = cfg.search.seed;
  cfg.predictor_eval.plan.lambda = cfg.search.surrogate.lambda;
  cfg.predictor_eval.plan.svr_c = cfg.search.surrogate.svr_c;
  cfg.predictor_eval.plan.svr_epsilon = cfg.search.surrogate.svr_epsilon;
  cfg.predictor_eval.plan.svr_epochs = cfg.search.surrogate.svr_epochs;
  try {
    cfg.validate();
  } catch (const ExperimentConfigError& e) {
    std::vector<std::string> path;
    std::stringstream ss(e.field());
    for (std::string part; std::getline(ss, part, '.');) path.push_back(part);
    const std::string what = e.what();
    r.fail(path, what.substr(what.find(": ") + 2));
  }
  return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw ExperimentConfigError("", 0, e.what());
  }
  return parse_experiment(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
  nlohmann::json settings = nlohmann::json::array();
  for (auto s : cfg.predictor_eval.settings) settings.push_back(setting_name(s));
  nlohmann::json j{
      {"command", cfg.command == Command::Search ? "search" : "predictors-eval"},
      {"family", to_string(cfg.family)},
      {"setting", setting_name(cfg.setting)},
      {"k", cfg.search.k},
      {"m", cfg.search.m},
      {"n", cfg.search.n},
      {"seed", cfg.search.seed},
      {"threads", cfg.search.threads},
      {"evaluation_budget", cfg.evaluation_budget},
      {"output_dir", cfg.output_dir.string()},
      {"predictor", cfg.search.surrogate},
      {"nsga", cfg.search.nsga},
      {"proxy", cfg.proxy},
      {"config_space", cfg.config_space},
      {"arch_space", cfg.resolved_arch_space()},
      {"predictor_eval",
       {{"settings", settings},
        {"pool_size", cfg.predictor_eval.pool_size},
        {"train_sizes", cfg.predictor_eval.plan.train_sizes},
        {"trials", cfg.predictor_eval.plan.trials},
        {"test_size", cfg.predictor_eval.plan.test_size}}}};
  if (cfg.evaluation_budget == 0) j.erase("evaluation_budget");  // unbounded
  return j;
}

Baseline evaluate_baseline(const ArchSpace& arch, const ConfigSpace& config, const ProxyParams& proxy,
                           std::shared_ptr<CachingCompiler> compiler) {
  const GenomeSpace space = make_genome_space(SearchSetting::ElasticArchStaticCfg, arch, config);
  Baseline b{canonical_subnet(arch), *space.frozen_config, 0.0, 0};
  const TrueEval e = make_true_evaluator(space, proxy, std::move(compiler))(encode(b.arch, b.config, space));
  if (!e.feasible) throw InfeasibleError("the static baseline has no feasible dataflow");
  b.accuracy = e.accuracy;
  b.cycles = e.cycles;
  return b;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

std::string front_csv(const SearchHistory& history) {
  std::string s = "genome_id,accuracy,cycles\n";
  for (const auto& p : history.front) {
    s += std::to_string(p.id) + ',' + format_double(p.accuracy) + ',' +
         std::to_string(static_cast<std::int64_t>(p.cycles)) + '\n';
  }
  return s;
}

std::string history_jsonl(const SearchHistory& history) {
  std::string s;
  for (const auto& r : history.iterations) s += iteration_to_json(r).dump() + '\n';
  return s;
}

std::string genomes_jsonl(const SearchHistory& history, const GenomeSpace& space) {
  std::string s;
  for (std::size_t i = 0; i < history.evaluated.size(); ++i) {
    const auto& p = history.evaluated[i];
    const Decoded d = decode(p.genome, space);
    nlohmann::json j{{"id", p.id},
                     {"genome", p.genome.to_string()},
                     {"provenance", provenance_name(p.provenance)},
                     {"feasible", static_cast<bool>(history.feasible[i])},
                     {"accuracy", p.accuracy},
                     {"cycles", static_cast<std::int64_t>(p.cycles)},
                     {"arch", d.arch},
                     {"config", config_to_json(d.config, space.config).at("normalized")}};
    s += j.dump() + '\n';
  }
  return s;
}

std::string search_predictor_csv(const SearchHistory& history) {
  std::string s = "iteration,training_size,target,mape,kendall_tau\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : history.iterations) {
    if (r.iteration == 1) continue;
    const std::string head = std::to_string(r.iteration) + ',' + std::to_string(r.training_size) + ',';
    s += head + "cycles," + cell(r.cycles_mape) + ',' + cell(r.cycles_tau) + '\n';
    s += head + "accuracy,," + cell(r.accuracy_tau) + '\n';
  }
  return s;
}

namespace {

RunOutcome run_search(const ExperimentConfig& cfg) {
  const ArchSpace arch = cfg.resolved_arch_space();
  auto compiler = std::make_shared<CachingCompiler>();
  const Baseline baseline = evaluate_baseline(arch, cfg.config_space, cfg.proxy, compiler);
  const GenomeSpace space = make_genome_space(cfg.setting, arch, cfg.config_space);
  const SearchHistory history = joint_search(space, cfg.search, make_true_evaluator(space, cfg.proxy, compiler));

  const Objectives base{baseline.accuracy, static_cast<double>(baseline.cycles)};
  nlohmann::json summary{{"family", to_string(cfg.family)},
                         {"setting", setting_name(cfg.setting)},
                         {"k", cfg.search.k},
                         {"m", cfg.search.m},
                         {"n", cfg.search.n},
                         {"seed", cfg.search.seed},
                         {"accuracy_kind", "PROXY"},
                         {"genome_schema_hash", genome_layout(space).schema_hash(space)},
                         {"true_evaluations", history.evaluated.size()},
                         {"training_size", history.training_ids.size()},
                         {"front_size", history.front.size()},
                         {"baseline",
                          {{"accuracy", baseline.accuracy},
                           {"cycles", baseline.cycles},
                           {"arch", baseline.arch},
                           {"config", config_to_json(baseline.config, cfg.config_space).at("normalized")}}}};
  try {
    summary["cycle_reduction_at_iso_accuracy"] = cycle_reduction_at_iso_accuracy(history.front, base);
  } catch (const std::domain_error& e) {
    summary["cycle_reduction_at_iso_accuracy"] = nullptr;
    summary["cycle_reduction_error"] = e.what();
  }
  const Objectives reference{0.0, 2.0 * base.cycles};
  summary["hypervolume"] = {{"value", hypervolume(history.front, reference)},
                            {"reference", {{"accuracy", reference.accuracy}, {"cycles", reference.cycles}}}};

  // Render everything before touching the output directory.
  const std::vector<std::pair<std::string, std::string>> files = {
      {"front.csv", front_csv(history)},
      {"history.jsonl", history_jsonl(history)},
      {"genomes.jsonl", genomes_jsonl(history, space)},
      {"predictor_eval.csv", search_predictor_csv(history)},
      {"summary.json", summary.dump(2) + '\n'},
  };
  RunOutcome out;
  fs::create_directories(cfg.output_dir);
  for (const auto& [name, body] : files) {
    write_file_atomic(cfg.output_dir / name, body);
    out.written.push_back(cfg.output_dir / name);
  }
  out.message = "front of " + std::to_string(history.front.size()) + " points from " +
                std::to_string(history.evaluated.size()) + " true evaluations";
  return out;
}

RunOutcome run_predictor_eval(const ExperimentConfig& cfg) {
  const ArchSpace arch = cfg.resolved_arch_space();
  auto compiler = std::make_shared<CachingCompiler>();
  std::string csv = "family,setting,model,target,n_train,n_test,mape,kendall_tau\n";
  nlohmann::json summary{{"family", to_string(cfg.family)}, {"accuracy_kind", "PROXY"}, {"spaces", nlohmann::json::array()}};
  const ModelKind kind = cfg.search.surrogate.kind;
  for (std::size_t si = 0; si < cfg.predictor_eval.settings.size(); ++si) {
    const SearchSetting setting = cfg.predictor_eval.settings[si];
    const GenomeSpace space = make_genome_space(setting, arch, cfg.config_space);
    const auto evaluate = make_true_evaluator(space, cfg.proxy, compiler);
    Rng rng(derive_seed(cfg.search.seed, 77 + si));
    std::vector<Genome> pool;
    std::vector<double> cycles;
    while (pool.size() < cfg.predictor_eval.pool_size) {
      Genome g = sample_genome(space, rng);
      const TrueEval e = evaluate(g);
      if (!e.feasible) continue;
      pool.push_back(std::move(g));
      cycles.push_back(static_cast<double>(e.cycles));
    }
    const Eigen::MatrixXd X = genome_features(pool);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(cycles.data(), static_cast<Eigen::Index>(cycles.size()));
    EvalPlan plan = cfg.predictor_eval.plan;
    plan.transform = TargetTransform::Log;
    const auto curve = evaluate_predictor(X, y, plan, kind);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& e : curve) {
      csv += std::string(to_string(cfg.family)) + ',' + setting_name(setting) + ',' + model_kind_name(kind) + ",cycles," +
             std::to_string(e.n_train) + ',' + std::to_string(e.n_test) + ',' + format_double(e.mape) + ',' +
             format_double(e.kendall_tau) + '\n';
      points.push_back({{"n_train", e.n_train}, {"n_test", e.n_test}, {"mape", e.mape}, {"kendall_tau", e.kendall_tau}});
    }
    summary["spaces"].push_back({{"setting", setting_name(setting)}, {"model", model_kind_name(kind)}, {"curve", points}});
  }
  RunOutcome out;
  fs::create_directories(cfg.output_dir);
  for (const auto& [name, body] : std::vector<std::pair<std::string, std::string>>{
           {"predictor_eval.csv", csv}, {"summary.json", summary.dump(2) + '\n'}}) {
    write_file_atomic(cfg.output_dir / name, body);
    out.written.push_back(cfg.output_dir / name);
  }
  out.message = "evaluated " + std::to_string(cfg.predictor_eval.settings.size()) + " search spaces";
  return out;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  try {
    cfg.validate();
    if (count_valid_configs(cfg.config_space) == 0) {
      return {kExitInfeasible, "no hardware configuration satisfies the compute and memory budgets", {}};
    }
    return cfg.command == Command::Search ? run_search(cfg) : run_predictor_eval(cfg);
  } catch (const ExperimentConfigError& e) {
    return {kExitConfigError, e.what(), {}};
  } catch (const InfeasibleError& e) {
    return {kExitInfeasible, e.what(), {}};
  } catch (const ConfigError& e) {
    return {kExitConfigError, e.what(), {}};
  }
}

RunOutcome run_experiment_file(const fs::path& path) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(path);
  } catch (const ExperimentConfigError& e) {
    return {kExitConfigError, path.string() + ": " + e.what(), {}};
  }
  return run_experiment(cfg);
}

}  // namespace cimnet
