#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimnet/search.hpp"

namespace cimnet {

// Malformed experiment configuration. `line` is 1-based, 0 when unknown.
class ExperimentConfigError : public std::runtime_error {
 public:
  ExperimentConfigError(std::string field, int line, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInfeasible = 3;

enum class Command { Search, PredictorsEval };

struct PredictorEvalSpec {
  std::vector<SearchSetting> settings = {SearchSetting::ElasticArchStaticCfg, SearchSetting::StaticArchElasticCfg,
                                         SearchSetting::ElasticArchElasticCfg};
  std::size_t pool_size = 1500;
  EvalPlan plan;
};

struct ExperimentConfig {
  Command command = Command::Search;
  Family family = Family::MobileNetV3;
  SearchSetting setting = SearchSetting::ElasticArchElasticCfg;
  std::optional<ArchSpace> arch_space;  // defaults to the family's built-in space
  ConfigSpace config_space = default_config_space();
  SearchParams search;
  // Upper bound on true evaluations; K*N must not exceed it. 0 = unbounded.
  std::size_t evaluation_budget = 0;
  ProxyParams proxy;
  PredictorEvalSpec predictor_eval;
  std::filesystem::path output_dir = "run";

  ArchSpace resolved_arch_space() const;
  void validate() const;
};

// Parses the JSON text of an experiment file. Relative paths resolve against
// `base_dir`. Throws ExperimentConfigError naming the field and its line.
ExperimentConfig parse_experiment(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_experiment(const std::filesystem::path& path);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);

// The "black square": canonical architecture on the static configuration.
struct Baseline {
  SubnetArch arch;
  HardwareConfig config;
  double accuracy = 0.0;
  std::int64_t cycles = 0;
};

Baseline evaluate_baseline(const ArchSpace& arch, const ConfigSpace& config, const ProxyParams& proxy,
                           std::shared_ptr<CachingCompiler> compiler = nullptr);

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::filesystem::path> written;
};

// Executes the experiment and writes its artifacts (write-then-rename).
// Nothing is written when the run fails.
RunOutcome run_experiment(const ExperimentConfig& cfg);
// Loads the file, then runs; config problems map to exit code 2 and an empty
// or infeasible hardware space to exit code 3.
RunOutcome run_experiment_file(const std::filesystem::path& path);

// Atomically replaces `path` with `contents`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string format_double(double v);

// Artifact renderers, exposed for tests and bindings.
std::string front_csv(const SearchHistory& history);
std::string history_jsonl(const SearchHistory& history);
std::string genomes_jsonl(const SearchHistory& history, const GenomeSpace& space);
std::string search_predictor_csv(const SearchHistory& history);

}  // namespace cimnet
