#include "cimnet/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace cimnet {

const char* setting_name(SearchSetting s) {
  switch (s) {
    case SearchSetting::ElasticArchStaticCfg: return "elastic-arch-static-config";
    case SearchSetting::StaticArchElasticCfg: return "static-arch-elastic-config";
    case SearchSetting::ElasticArchElasticCfg: return "elastic-arch-elastic-config";
  }
  return "?";
}

SearchSetting setting_from_string(const std::string& s) {
  for (auto v : {SearchSetting::ElasticArchStaticCfg, SearchSetting::StaticArchElasticCfg,
                 SearchSetting::ElasticArchElasticCfg}) {
    if (s == setting_name(v)) return v;
  }
  throw std::invalid_argument("unknown search setting '" + s +
                              "' (expected elastic-arch-static-config, static-arch-elastic-config or "
                              "elastic-arch-elastic-config)");
}

GenomeSpace make_genome_space(SearchSetting setting, const ArchSpace& arch, const ConfigSpace& config,
                              std::optional<SubnetArch> static_arch, std::optional<HardwareConfig> static_cfg) {
  GenomeSpace space{arch, config, std::nullopt, std::nullopt};
  if (setting == SearchSetting::StaticArchElasticCfg) {
    space.frozen_arch = static_arch ? *static_arch : canonical_subnet(arch);
    validate_subnet(arch, *space.frozen_arch);
  }
  if (setting == SearchSetting::ElasticArchStaticCfg) {
    space.frozen_config = static_cfg ? *static_cfg : static_config(config);
    config.rungs_of(*space.frozen_config);  // must sit on the ladder
  }
  return space;
}

bool dominates(const Objectives& p, const Objectives& q) {
  return p.accuracy >= q.accuracy && p.cycles <= q.cycles && (p.accuracy > q.accuracy || p.cycles < q.cycles);
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Objectives> points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(points[p], points[q])) {
        dominated[p].push_back(q);
        ++count[q];
      } else if (dominates(points[q], points[p])) {
        dominated[q].push_back(p);
        ++count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (auto p : current) {
      for (auto q : dominated[p]) {
        if (--count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const Objectives> front) {
  const std::size_t n = front.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  std::vector<std::size_t> order(n);
  for (int obj = 0; obj < 2; ++obj) {
    auto value = [&](std::size_t i) { return obj == 0 ? front[i].accuracy : front[i].cycles; };
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return value(a) < value(b); });
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    const double range = value(order.back()) - value(order.front());
    if (range <= 0.0) continue;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
    }
  }
  return dist;
}

const char* provenance_name(Provenance p) { return p == Provenance::True ? "TRUE" : "PREDICTED"; }

namespace {

std::vector<Objectives> objectives_of(std::span<const ParetoPoint> points) {
  std::vector<Objectives> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.objectives());
  return out;
}

struct RankCrowd {
  std::vector<int> rank;
  std::vector<double> crowd;
};

RankCrowd rank_and_crowding(std::span<const Objectives> objs) {
  RankCrowd rc{std::vector<int>(objs.size(), 0), std::vector<double>(objs.size(), 0.0)};
  const auto fronts = non_dominated_sort(objs);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<Objectives> members;
    for (auto i : fronts[f]) members.push_back(objs[i]);
    const auto d = crowding_distance(members);
    for (std::size_t k = 0; k < fronts[f].size(); ++k) {
      rc.rank[fronts[f][k]] = static_cast<int>(f);
      rc.crowd[fronts[f][k]] = d[k];
    }
  }
  return rc;
}

// Full (rank asc, crowding desc, genome asc) order of `points`.
std::vector<std::size_t> nsga_order(std::span<const ParetoPoint> points) {
  const auto objs = objectives_of(points);
  const auto rc = rank_and_crowding(objs);
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (rc.rank[a] != rc.rank[b]) return rc.rank[a] < rc.rank[b];
    if (rc.crowd[a] != rc.crowd[b]) return rc.crowd[a] > rc.crowd[b];
    if (points[a].genome != points[b].genome) return points[a].genome < points[b].genome;
    return a < b;
  });
  return order;
}

}  // namespace

std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points) {
  if (points.empty()) return {};
  const auto objs = objectives_of(points);
  const auto fronts = non_dominated_sort(objs);
  std::vector<ParetoPoint> front;
  for (auto i : fronts.front()) front.push_back(points[i]);
  std::sort(front.begin(), front.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.cycles != b.cycles) return a.cycles < b.cycles;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.genome < b.genome;
  });
  return front;
}

double hypervolume(std::span<const ParetoPoint> points, const Objectives& reference) {
  const auto front = pareto_front(points);
  double area = 0.0;
  double floor = reference.accuracy;
  for (const auto& p : front) {
    if (p.cycles >= reference.cycles || p.accuracy <= floor) continue;
    area += (reference.cycles - p.cycles) * (p.accuracy - floor);
    floor = p.accuracy;
  }
  return area;
}

double cycle_reduction_at_iso_accuracy(std::span<const ParetoPoint> points, const Objectives& baseline) {
  if (points.empty()) throw std::domain_error("cycle reduction: empty front");
  const auto front = pareto_front(points);
  for (std::size_t i = 0; i < front.size(); ++i) {
    if (front[i].accuracy < baseline.accuracy) continue;
    double cycles = front[i].cycles;
    if (i > 0) {
      const auto& lo = front[i - 1];
      const auto& hi = front[i];
      const double t = (baseline.accuracy - lo.accuracy) / (hi.accuracy - lo.accuracy);
      cycles = lo.cycles + t * (hi.cycles - lo.cycles);
    }
    if (cycles <= 0.0) throw std::domain_error("cycle reduction: non-positive front cycles");
    return baseline.cycles / cycles;
  }
  throw std::domain_error("cycle reduction: every front point is below the baseline accuracy");
}

void to_json(nlohmann::json& j, const NsgaParams& p) {
  j = nlohmann::json{{"population", p.population},
                     {"crossover_prob", p.crossover_prob},
                     {"mutation_rate", p.mutation_rate},
                     {"stall_factor", p.stall_factor}};
}

void from_json(const nlohmann::json& j, NsgaParams& p) {
  p = NsgaParams{};
  p.population = j.value("population", p.population);
  p.crossover_prob = j.value("crossover_prob", p.crossover_prob);
  p.mutation_rate = j.value("mutation_rate", p.mutation_rate);
  p.stall_factor = j.value("stall_factor", p.stall_factor);
  if (p.population < 2) throw std::invalid_argument("nsga.population must be >= 2");
  if (p.crossover_prob < 0 || p.crossover_prob > 1) throw std::invalid_argument("nsga.crossover_prob must be in [0, 1]");
  if (p.mutation_rate < 0 || p.mutation_rate > 1) throw std::invalid_argument("nsga.mutation_rate must be in [0, 1]");
  if (p.stall_factor < 1) throw std::invalid_argument("nsga.stall_factor must be >= 1");
}

ScreenResult nsga2_screen(const GenomeSpace& space, const ObjectiveFn& predictor, std::size_t pool_size,
                          const NsgaParams& params, std::uint64_t seed) {
  Rng rng(seed);
  ScreenResult result;
  std::unordered_set<Genome, GenomeHash> seen;
  const std::size_t pop_size = std::min<std::size_t>(static_cast<std::size_t>(params.population), pool_size);
  const std::size_t stall_limit = static_cast<std::size_t>(params.stall_factor) * pop_size + 1;

  auto score = [&](Genome g) {
    ParetoPoint p;
    const Objectives o = predictor(g);
    p.genome = std::move(g);
    p.accuracy = o.accuracy;
    p.cycles = o.cycles;
    p.provenance = Provenance::Predicted;
    result.pool.push_back(p);
    return p;
  };

  std::vector<ParetoPoint> population;
  for (std::size_t stall = 0; population.size() < pop_size && stall < stall_limit;) {
    Genome g = sample_genome(space, rng);
    if (!seen.insert(g).second) {
      ++stall;
      continue;
    }
    stall = 0;
    population.push_back(score(std::move(g)));
  }
  if (population.size() < pop_size) result.exhausted = true;

  while (!result.exhausted && result.pool.size() < pool_size) {
    const auto rc = rank_and_crowding(objectives_of(population));
    auto tournament = [&]() -> const Genome& {
      const auto a = static_cast<std::size_t>(uniform_index(rng, static_cast<int>(population.size())));
      const auto b = static_cast<std::size_t>(uniform_index(rng, static_cast<int>(population.size())));
      const bool pick_b = rc.rank[b] < rc.rank[a] || (rc.rank[b] == rc.rank[a] && rc.crowd[b] > rc.crowd[a]);
      return population[pick_b ? b : a].genome;
    };
    std::vector<ParetoPoint> offspring;
    std::size_t stall = 0;
    while (offspring.size() < pop_size && result.pool.size() < pool_size) {
      const Genome& pa = tournament();
      const Genome& pb = tournament();
      Genome child = coin(rng, params.crossover_prob) ? crossover(pa, pb, space, rng) : pa;
      child = mutate(child, params.mutation_rate, space, rng);
      if (!seen.insert(child).second) {
        if (++stall >= stall_limit) {
          result.exhausted = true;
          break;
        }
        continue;
      }
      stall = 0;
      offspring.push_back(score(std::move(child)));
    }
    if (result.pool.size() >= pool_size || result.exhausted) break;

    std::vector<ParetoPoint> merged = std::move(population);
    merged.insert(merged.end(), offspring.begin(), offspring.end());
    const auto order = nsga_order(merged);
    population.clear();
    for (std::size_t k = 0; k < pop_size && k < order.size(); ++k) population.push_back(merged[order[k]]);
  }
  return result;
}

std::vector<std::size_t> select_top_n(std::span<const ParetoPoint> pool, std::size_t n) {
  auto order = nsga_order(pool);
  if (order.size() > n) order.resize(n);
  return order;
}

TrueEvaluator make_true_evaluator(const GenomeSpace& space, const ProxyParams& proxy,
                                  std::shared_ptr<CachingCompiler> compiler) {
  if (!compiler) compiler = std::make_shared<CachingCompiler>();
  proxy.validate();
  return [space, proxy, compiler](const Genome& g) {
    const Decoded d = decode(g, space);
    TrueEval e;
    e.accuracy = proxy_accuracy(space.arch, d.arch, proxy);
    try {
      const auto layers = lower_to_layers(space.arch, d.arch);
      e.cycles = simulate(layers, d.config, [&](const LayerSpec& l, const HardwareConfig& c) {
                   return (*compiler)(l, c);
                 }).total_cycles;
    } catch (const InfeasibleError&) {
      e.feasible = false;
      e.cycles = 0;
    }
    return e;
  };
}

void to_json(nlohmann::json& j, const SurrogateParams& p) {
  j = nlohmann::json{{"kind", model_kind_name(p.kind)}, {"lambda", p.lambda},       {"cv_lambda", p.cv_lambda},
                     {"svr_c", p.svr_c},                {"svr_epsilon", p.svr_epsilon}, {"svr_epochs", p.svr_epochs}};
}

void from_json(const nlohmann::json& j, SurrogateParams& p) {
  p = SurrogateParams{};
  if (j.contains("kind")) p.kind = model_kind_from_string(j.at("kind").get<std::string>());
  p.lambda = j.value("lambda", p.lambda);
  p.cv_lambda = j.value("cv_lambda", p.cv_lambda);
  p.svr_c = j.value("svr_c", p.svr_c);
  p.svr_epsilon = j.value("svr_epsilon", p.svr_epsilon);
  p.svr_epochs = j.value("svr_epochs", p.svr_epochs);
  if (p.lambda < 0) throw std::invalid_argument("predictor.lambda must be >= 0");
  if (p.svr_c <= 0) throw std::invalid_argument("predictor.svr_c must be > 0");
  if (p.svr_epochs < 1) throw std::invalid_argument("predictor.svr_epochs must be >= 1");
}

Objectives Surrogates::predict(const Genome& g) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(g.bits.size()));
  for (std::size_t i = 0; i < g.bits.size(); ++i) x[static_cast<Eigen::Index>(i)] = g.bits[i];
  if (kind == ModelKind::Svr) return {svr_accuracy.predict_one(x), svr_cycles.predict_one(x)};
  return {ridge_accuracy.predict_one(x), ridge_cycles.predict_one(x)};
}

Surrogates fit_surrogates(std::span<const Genome> genomes, std::span<const Objectives> truth,
                          const SurrogateParams& params, std::uint64_t seed) {
  if (genomes.size() != truth.size() || genomes.empty()) throw PredictError("fit_surrogates: bad training set");
  const Eigen::MatrixXd X = genome_features(genomes);
  Eigen::VectorXd cycles(static_cast<Eigen::Index>(truth.size())), acc(static_cast<Eigen::Index>(truth.size()));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    cycles[static_cast<Eigen::Index>(i)] = truth[i].cycles;
    acc[static_cast<Eigen::Index>(i)] = truth[i].accuracy;
  }
  Surrogates s;
  s.kind = params.kind;
  if (params.kind == ModelKind::Svr) {
    s.svr_cycles = fit_svr_linear(X, cycles, params.svr_c, params.svr_epsilon, params.svr_epochs, derive_seed(seed, 1),
                                  TargetTransform::Log);
    s.svr_accuracy = fit_svr_linear(X, acc, params.svr_c, params.svr_epsilon, params.svr_epochs, derive_seed(seed, 2),
                                    TargetTransform::Identity);
    return s;
  }
  double lambda_c = params.lambda, lambda_a = params.lambda;
  if (params.cv_lambda && X.rows() >= 5) {
    lambda_c = select_lambda_cv(X, cycles, kDefaultLambdaGrid, 5, TargetTransform::Log, derive_seed(seed, 3));
    lambda_a = select_lambda_cv(X, acc, kDefaultLambdaGrid, 5, TargetTransform::Identity, derive_seed(seed, 4));
  }
  s.ridge_cycles = fit_ridge(X, cycles, lambda_c, TargetTransform::Log);
  s.ridge_accuracy = fit_ridge(X, acc, lambda_a, TargetTransform::Identity);
  return s;
}

double infeasible_sentinel(const SearchHistory& history) {
  double worst = 0.0;
  for (std::size_t i = 0; i < history.evaluated.size(); ++i) {
    if (history.feasible[i]) worst = std::max(worst, history.evaluated[i].cycles);
  }
  return worst > 0.0 ? 2.0 * worst : 1.0;
}

namespace {

std::vector<TrueEval> evaluate_all(const std::vector<Genome>& batch, const TrueEvaluator& evaluate, int threads) {
  std::vector<TrueEval> out(batch.size());
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || batch.size() < 2) {
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = evaluate(batch[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, batch.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < batch.size();) {
        try {
          out[i] = evaluate(batch[i]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

class Bookkeeper {
 public:
  Bookkeeper(SearchHistory& h, const TrueEvaluator& evaluate, int threads)
      : history_(h), evaluate_(evaluate), threads_(threads) {}

  bool known(const Genome& g) const { return ids_.count(g) != 0; }

  // True-evaluates the unseen genomes of `batch` and appends all of it to the
  // training set. Returns the ids in batch order.
  std::vector<std::int64_t> add(const std::vector<Genome>& batch) {
    std::vector<Genome> fresh;
    std::unordered_set<Genome, GenomeHash> queued;
    for (const auto& g : batch) {
      if (!known(g) && queued.insert(g).second) fresh.push_back(g);
    }
    const auto results = evaluate_all(fresh, evaluate_, threads_);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      ParetoPoint p;
      p.genome = fresh[i];
      p.accuracy = results[i].feasible ? results[i].accuracy : 0.0;
      p.cycles = static_cast<double>(results[i].cycles);
      p.provenance = Provenance::True;
      p.id = static_cast<std::int64_t>(history_.evaluated.size());
      ids_.emplace(fresh[i], p.id);
      history_.evaluated.push_back(std::move(p));
      history_.feasible.push_back(results[i].feasible);
    }
    std::vector<std::int64_t> ids;
    for (const auto& g : batch) ids.push_back(ids_.at(g));
    history_.training_ids.insert(history_.training_ids.end(), ids.begin(), ids.end());
    return ids;
  }

  Objectives truth(std::int64_t id, double sentinel) const {
    const auto i = static_cast<std::size_t>(id);
    if (!history_.feasible[i]) return {0.0, sentinel};
    return history_.evaluated[i].objectives();
  }

  std::vector<ParetoPoint> feasible_points() const {
    std::vector<ParetoPoint> out;
    for (std::size_t i = 0; i < history_.evaluated.size(); ++i) {
      if (history_.feasible[i]) out.push_back(history_.evaluated[i]);
    }
    return out;
  }

 private:
  SearchHistory& history_;
  const TrueEvaluator& evaluate_;
  int threads_;
  std::unordered_map<Genome, std::int64_t, GenomeHash> ids_;
};

std::vector<Genome> bootstrap(const GenomeSpace& space, std::size_t n, std::size_t stall_limit, Rng& rng) {
  std::vector<Genome> out;
  std::unordered_set<Genome, GenomeHash> seen;
  for (std::size_t stall = 0; out.size() < n && stall < stall_limit;) {
    Genome g = sample_genome(space, rng);
    if (!seen.insert(g).second) {
      ++stall;
      continue;
    }
    stall = 0;
    out.push_back(std::move(g));
  }
  // Small spaces: repeat draws to keep the training set at N.
  while (out.size() < n) out.push_back(sample_genome(space, rng));
  return out;
}

std::optional<double> safe(double (*fn)(std::span<const double>, std::span<const double>),
                           const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return std::nullopt;
  try {
    return fn(a, b);
  } catch (const PredictError&) {
    return std::nullopt;
  }
}

}  // namespace

SearchHistory joint_search(const GenomeSpace& space, const SearchParams& params, const TrueEvaluator& evaluate) {
  if (params.k < 1) throw std::invalid_argument("search: K must be >= 1");
  if (params.n < 1 || params.m < params.n) throw std::invalid_argument("search: need M >= N >= 1");
  SearchHistory history;
  Bookkeeper book(history, evaluate, params.threads);
  Rng rng(derive_seed(params.seed, 0));
  const std::size_t stall_limit = static_cast<std::size_t>(params.nsga.stall_factor) * params.n + 1;

  auto retrain = [&](int iteration) {
    const double sentinel = infeasible_sentinel(history);
    std::vector<Genome> genomes;
    std::vector<Objectives> truth;
    for (auto id : history.training_ids) {
      genomes.push_back(history.evaluated[static_cast<std::size_t>(id)].genome);
      truth.push_back(book.truth(id, sentinel));
    }
    return fit_surrogates(genomes, truth, params.surrogate, derive_seed(params.seed, 1000 + iteration));
  };
  auto record_front = [&](IterationRecord& rec) {
    const auto pts = book.feasible_points();
    for (const auto& p : pareto_front(pts)) rec.front_ids.push_back(p.id);
  };

  {
    IterationRecord rec;
    rec.iteration = 1;
    const auto batch = bootstrap(space, params.n, stall_limit, rng);
    const std::size_t before = history.evaluated.size();
    book.add(batch);
    rec.fresh = history.evaluated.size() - before;
    rec.training_size = history.training_ids.size();
    record_front(rec);
    history.iterations.push_back(std::move(rec));
  }

  for (int it = 2; it <= params.k; ++it) {
    const Surrogates model = retrain(it - 1);
    IterationRecord rec;
    rec.iteration = it;
    const auto screen = nsga2_screen(
        space, [&](const Genome& g) { return model.predict(g); }, params.m, params.nsga,
        derive_seed(params.seed, static_cast<std::uint64_t>(it)));
    rec.screened = screen.pool.size();
    rec.exhausted = screen.exhausted;

    // Walk the screened pool in selection order, preferring genomes that
    // have not been true-evaluated yet.
    const auto order = select_top_n(screen.pool, screen.pool.size());
    std::vector<std::size_t> chosen;
    for (auto i : order) {
      if (chosen.size() < params.n && !book.known(screen.pool[i].genome)) chosen.push_back(i);
    }
    for (auto i : order) {
      if (chosen.size() < params.n && book.known(screen.pool[i].genome)) chosen.push_back(i);
    }
    std::vector<Genome> batch;
    std::vector<Objectives> predicted;
    for (auto i : chosen) {
      batch.push_back(screen.pool[i].genome);
      predicted.push_back(screen.pool[i].objectives());
    }
    while (batch.size() < params.n) {
      batch.push_back(sample_genome(space, rng));
      predicted.push_back(model.predict(batch.back()));
    }

    const std::size_t before = history.evaluated.size();
    const auto ids = book.add(batch);
    rec.fresh = history.evaluated.size() - before;
    rec.training_size = history.training_ids.size();

    std::vector<double> true_c, pred_c, true_a, pred_a;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto idx = static_cast<std::size_t>(ids[i]);
      true_a.push_back(history.evaluated[idx].accuracy);
      pred_a.push_back(predicted[i].accuracy);
      if (!history.feasible[idx]) continue;
      true_c.push_back(history.evaluated[idx].cycles);
      pred_c.push_back(predicted[i].cycles);
    }
    if (!true_c.empty()) rec.cycles_mape = mape(true_c, pred_c);
    rec.cycles_tau = safe(&kendall_tau, true_c, pred_c);
    rec.accuracy_tau = safe(&kendall_tau, true_a, pred_a);
    record_front(rec);
    history.iterations.push_back(std::move(rec));
  }

  const auto feasible = book.feasible_points();
  if (feasible.empty()) throw InfeasibleError("search: no evaluated genome admits a feasible dataflow");
  history.front = pareto_front(feasible);
  return history;
}

nlohmann::json iteration_to_json(const IterationRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return nlohmann::json{{"iteration", r.iteration},
                        {"training_size", r.training_size},
                        {"screened", r.screened},
                        {"exhausted", r.exhausted},
                        {"fresh", r.fresh},
                        {"cycles_mape", opt(r.cycles_mape)},
                        {"cycles_tau", opt(r.cycles_tau)},
                        {"accuracy_tau", opt(r.accuracy_tau)},
                        {"front_ids", r.front_ids}};
}

}  // namespace cimnet
