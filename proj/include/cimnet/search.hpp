#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cimnet/accuracy_proxy.hpp"
#include "cimnet/dataflow.hpp"
#include "cimnet/encoding.hpp"
#include "cimnet/predict.hpp"

namespace cimnet {

enum class SearchSetting { ElasticArchStaticCfg, StaticArchElasticCfg, ElasticArchElasticCfg };

// "elastic-arch-static-config", "static-arch-elastic-config", "elastic-arch-elastic-config".
const char* setting_name(SearchSetting s);
SearchSetting setting_from_string(const std::string& s);

// Freezes the static side. Defaults: canonical subnet, C_s configuration.
GenomeSpace make_genome_space(SearchSetting setting, const ArchSpace& arch, const ConfigSpace& config,
                              std::optional<SubnetArch> static_arch = std::nullopt,
                              std::optional<HardwareConfig> static_cfg = std::nullopt);

// Accuracy is maximized, cycles minimized.
struct Objectives {
  double accuracy = 0.0;
  double cycles = 0.0;
};

bool dominates(const Objectives& p, const Objectives& q);

// Fronts of indices into `points`, best first; indices ascend within a front.
std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Objectives> points);

// Distances for the points of one front, in the given order.
std::vector<double> crowding_distance(std::span<const Objectives> front);

enum class Provenance { Predicted, True };
const char* provenance_name(Provenance p);

struct ParetoPoint {
  Genome genome;
  double accuracy = 0.0;
  double cycles = 0.0;
  Provenance provenance = Provenance::True;
  std::int64_t id = -1;  // index into SearchHistory::evaluated for TRUE points

  Objectives objectives() const { return {accuracy, cycles}; }
};

// Front 1, sorted by cycles ascending (ties: accuracy descending, then genome).
std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points);

// Area dominated by the front and bounded by `reference` (accuracy floor,
// cycle ceiling). Points outside the reference box contribute nothing.
double hypervolume(std::span<const ParetoPoint> points, const Objectives& reference);

// baseline.cycles over the front's cycles at baseline.accuracy, reading the
// front as a piecewise-linear curve. Throws std::domain_error when every
// front point is below the baseline accuracy.
double cycle_reduction_at_iso_accuracy(std::span<const ParetoPoint> points, const Objectives& baseline);

using ObjectiveFn = std::function<Objectives(const Genome&)>;

struct NsgaParams {
  int population = 100;
  double crossover_prob = 0.9;
  double mutation_rate = kDefaultMutationRate;
  // Consecutive duplicate offspring tolerated per population member before
  // the space counts as exhausted.
  int stall_factor = 50;
};

void to_json(nlohmann::json& j, const NsgaParams& p);
void from_json(const nlohmann::json& j, NsgaParams& p);

struct ScreenResult {
  std::vector<ParetoPoint> pool;  // PREDICTED, in evaluation order
  bool exhausted = false;
};

// Generational NSGA-II on predicted objectives until `pool_size` unique
// genomes have been scored. Each generation's survivors are the best
// `population` of parents plus offspring by (rank, crowding).
ScreenResult nsga2_screen(const GenomeSpace& space, const ObjectiveFn& predictor, std::size_t pool_size,
                          const NsgaParams& params, std::uint64_t seed);

// Indices into `pool` ordered by (rank asc, crowding desc, genome), first n.
std::vector<std::size_t> select_top_n(std::span<const ParetoPoint> pool, std::size_t n);

struct TrueEval {
  double accuracy = 0.0;
  std::int64_t cycles = 0;
  bool feasible = true;
};

using TrueEvaluator = std::function<TrueEval(const Genome&)>;

// Decodes, lowers, compiles and simulates; accuracy from the proxy.
// Infeasible dataflow is reported through TrueEval::feasible.
TrueEvaluator make_true_evaluator(const GenomeSpace& space, const ProxyParams& proxy,
                                  std::shared_ptr<CachingCompiler> compiler = nullptr);

struct SurrogateParams {
  ModelKind kind = ModelKind::Ridge;
  double lambda = 1.0;
  bool cv_lambda = false;
  double svr_c = 10.0;
  double svr_epsilon = 0.01;
  int svr_epochs = 60;
};

void to_json(nlohmann::json& j, const SurrogateParams& p);
void from_json(const nlohmann::json& j, SurrogateParams& p);

// Cycle model on a LOG target, accuracy model on the raw target.
struct Surrogates {
  ModelKind kind = ModelKind::Ridge;
  RidgeModel ridge_cycles, ridge_accuracy;
  SvrModel svr_cycles, svr_accuracy;

  Objectives predict(const Genome& g) const;
};

Surrogates fit_surrogates(std::span<const Genome> genomes, std::span<const Objectives> truth,
                          const SurrogateParams& params, std::uint64_t seed);

struct SearchParams {
  int k = 5;
  std::size_t m = 2000;
  std::size_t n = 500;
  NsgaParams nsga;
  SurrogateParams surrogate;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct IterationRecord {
  int iteration = 0;
  std::size_t training_size = 0;
  std::size_t screened = 0;
  bool exhausted = false;
  std::size_t fresh = 0;  // selected genomes not true-evaluated before
  // Quality of the previous iteration's predictors on this batch (absent in
  // the bootstrap iteration).
  std::optional<double> cycles_mape, cycles_tau, accuracy_tau;
  std::vector<std::int64_t> front_ids;
};

struct SearchHistory {
  std::vector<IterationRecord> iterations;
  std::vector<ParetoPoint> evaluated;       // unique TRUE points, first-evaluation order
  std::vector<bool> feasible;               // parallel to `evaluated`
  std::vector<std::int64_t> training_ids;  // training set, with repeats
  std::vector<ParetoPoint> front;           // final TRUE front over feasible points
};

// Sentinel cycles for infeasible genomes: twice the largest feasible cycle
// count observed so far (1 if none). Their accuracy is 0.
double infeasible_sentinel(const SearchHistory& history);

// K-iteration loop: random bootstrap of N, then screen M / select N /
// true-evaluate / retrain. Throws InfeasibleError if no evaluated genome is
// feasible.
SearchHistory joint_search(const GenomeSpace& space, const SearchParams& params, const TrueEvaluator& evaluate);

nlohmann::json iteration_to_json(const IterationRecord& r);

}  // namespace cimnet
