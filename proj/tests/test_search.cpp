#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cimnet/search.hpp"

using namespace cimnet;

namespace {

std::vector<Objectives> random_points(Rng& rng, int n, int grid) {
  std::vector<Objectives> out;
  for (int i = 0; i < n; ++i) out.push_back({double(uniform_index(rng, grid)), double(1 + uniform_index(rng, grid))});
  return out;
}

ParetoPoint point(double acc, double cyc) {
  ParetoPoint p;
  p.accuracy = acc;
  p.cycles = cyc;
  return p;
}

// Union area of [a_floor, acc] x [cyc, c_ceiling] rectangles by coordinate compression.
double hypervolume_reference(const std::vector<ParetoPoint>& pts, const Objectives& ref) {
  std::set<double> xs{ref.accuracy}, ys{ref.cycles};
  for (const auto& p : pts) {
    xs.insert(std::max(p.accuracy, ref.accuracy));
    ys.insert(std::min(p.cycles, ref.cycles));
  }
  const std::vector<double> X(xs.begin(), xs.end()), Y(ys.begin(), ys.end());
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < X.size(); ++i) {
    for (std::size_t j = 0; j + 1 < Y.size(); ++j) {
      const double cx = 0.5 * (X[i] + X[i + 1]), cy = 0.5 * (Y[j] + Y[j + 1]);
      const bool covered = std::any_of(pts.begin(), pts.end(), [&](const ParetoPoint& p) {
        return p.accuracy >= cx && p.cycles <= cy && cx >= ref.accuracy && cy <= ref.cycles;
      });
      if (covered) area += (X[i + 1] - X[i]) * (Y[j + 1] - Y[j]);
    }
  }
  return area;
}

GenomeSpace small_space(SearchSetting s = SearchSetting::ElasticArchElasticCfg) {
  return make_genome_space(s, mobilenet_v3_space(), default_config_space());
}

// Cheap, feasible-everywhere evaluator: proxy accuracy and MAC-derived cycles.
TrueEvaluator fake_evaluator(const GenomeSpace& space) {
  return [space](const Genome& g) {
    const auto d = decode(g, space);
    const double macs = static_cast<double>(count_macs(space.arch, d.arch));
    const double speed = static_cast<double>(d.config.ma_comp_per_core * d.config.ma_num_child * d.config.l1_num_child);
    return TrueEval{proxy_accuracy(space.arch, d.arch, ProxyParams{}), static_cast<std::int64_t>(macs / speed) + 1, true};
  };
}

}  // namespace

TEST_CASE("dominance") {
  CHECK(dominates({0.8, 100}, {0.7, 100}));
  CHECK(dominates({0.8, 90}, {0.8, 100}));
  CHECK_FALSE(dominates({0.8, 100}, {0.8, 100}));
  CHECK_FALSE(dominates({0.9, 200}, {0.8, 100}));
}

TEST_CASE("non-dominated sorting") {
  SUBCASE("worked example") {
    const std::vector<Objectives> pts{{0.7, 100}, {0.8, 200}, {0.6, 150}, {0.75, 300}, {0.9, 400}};
    const auto fronts = non_dominated_sort(pts);
    REQUIRE(fronts.size() == 2);
    CHECK(fronts[0] == std::vector<std::size_t>{0, 1, 4});
    CHECK(fronts[1] == std::vector<std::size_t>{2, 3});
  }
  SUBCASE("duplicates share a front") {
    const std::vector<Objectives> pts{{0.5, 10}, {0.5, 10}, {0.4, 20}};
    const auto fronts = non_dominated_sort(pts);
    REQUIRE(fronts.size() == 2);
    CHECK(fronts[0] == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("brute-force agreement on random clouds") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
      const auto pts = random_points(rng, 200, 30);
      const auto fronts = non_dominated_sort(pts);
      std::vector<int> rank(pts.size(), -1);
      std::size_t total = 0;
      for (std::size_t r = 0; r < fronts.size(); ++r) {
        total += fronts[r].size();
        CHECK(std::is_sorted(fronts[r].begin(), fronts[r].end()));
        for (auto i : fronts[r]) rank[i] = static_cast<int>(r);
      }
      CHECK(total == pts.size());
      // Peel fronts by brute force and compare.
      std::vector<int> brute(pts.size(), -1);
      for (int r = 0, left = static_cast<int>(pts.size()); left > 0; ++r) {
        std::vector<std::size_t> layer;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (brute[i] != -1) continue;
          bool dominated = false;
          for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
            dominated = brute[j] == -1 && dominates(pts[j], pts[i]);
          }
          if (!dominated) layer.push_back(i);
        }
        for (auto i : layer) brute[i] = r;
        left -= static_cast<int>(layer.size());
      }
      CHECK(rank == brute);
    }
  }
}

TEST_CASE("crowding distance") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(crowding_distance(std::vector<Objectives>{{0.5, 10}, {0.6, 20}}) == std::vector<double>{inf, inf});
  const auto even = crowding_distance(std::vector<Objectives>{{0.1, 10}, {0.2, 20}, {0.3, 30}});
  CHECK(even[0] == inf);
  CHECK(even[2] == inf);
  CHECK(even[1] == doctest::Approx(2.0));
  // Constant accuracy contributes nothing; cycles alone give 1.0.
  const auto flat = crowding_distance(std::vector<Objectives>{{0.5, 10}, {0.5, 20}, {0.5, 30}});
  CHECK(flat[1] == doctest::Approx(1.0));
}

TEST_CASE("pareto_front matches brute force and is sorted by cycles") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ParetoPoint> pts;
    for (const auto& o : random_points(rng, 80, 25)) pts.push_back(point(o.accuracy, o.cycles));
    const auto front = pareto_front(pts);
    std::size_t expected = 0;
    for (const auto& p : pts) {
      const bool nd = std::none_of(pts.begin(), pts.end(), [&](const ParetoPoint& q) { return dominates(q.objectives(), p.objectives()); });
      if (nd) ++expected;
    }
    CHECK(front.size() == expected);
    for (std::size_t i = 1; i < front.size(); ++i) CHECK(front[i - 1].cycles <= front[i].cycles);
  }
}

TEST_CASE("cycle reduction at iso-accuracy") {
  const std::vector<ParetoPoint> front{point(0.7, 100), point(0.8, 200)};
  CHECK(cycle_reduction_at_iso_accuracy(front, {0.75, 300}) == doctest::Approx(2.0));
  CHECK(cycle_reduction_at_iso_accuracy(front, {0.8, 500}) == doctest::Approx(2.5));
  CHECK(cycle_reduction_at_iso_accuracy(front, {0.6, 100}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cycle_reduction_at_iso_accuracy(front, {0.9, 100}), std::domain_error);
  CHECK_THROWS_AS(cycle_reduction_at_iso_accuracy(std::vector<ParetoPoint>{}, {0.5, 1}), std::domain_error);
}

TEST_CASE("hypervolume") {
  const std::vector<ParetoPoint> front{point(0.7, 100), point(0.8, 200)};
  // (300-100)*(0.7-0) + (300-200)*(0.8-0.7)
  CHECK(hypervolume(front, {0.0, 300}) == doctest::Approx(150.0));
  CHECK(hypervolume(front, {0.9, 300}) == 0.0);
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ParetoPoint> pts;
    for (const auto& o : random_points(rng, 25, 20)) pts.push_back(point(o.accuracy, o.cycles));
    const Objectives ref{double(uniform_index(rng, 5)), double(10 + uniform_index(rng, 12))};
    CHECK(hypervolume(pts, ref) == doctest::Approx(hypervolume_reference(pts, ref)));
  }
}

TEST_CASE("screening") {
  const auto space = small_space();
  NsgaParams params;
  params.population = 20;
  const ObjectiveFn f1 = [](const Genome& g) {
    return Objectives{double(std::count(g.bits.begin(), g.bits.end(), 1)), 1.0 + g.bits[0]};
  };
  const ObjectiveFn f2 = [](const Genome& g) { return Objectives{double(g.bits[1]), 1.0 + g.bits[2]}; };

  SUBCASE("a pool the size of the population is the initial sample") {
    const auto a = nsga2_screen(space, f1, 20, params, 5);
    const auto b = nsga2_screen(space, f2, 20, params, 5);
    REQUIRE(a.pool.size() == 20);
    for (std::size_t i = 0; i < a.pool.size(); ++i) CHECK(a.pool[i].genome == b.pool[i].genome);
  }
  SUBCASE("pool genomes are unique, decodable and PREDICTED") {
    const auto r = nsga2_screen(space, f1, 150, params, 9);
    CHECK(r.pool.size() == 150);
    CHECK_FALSE(r.exhausted);
    std::set<Genome> seen;
    for (const auto& p : r.pool) {
      CHECK(seen.insert(p.genome).second);
      CHECK(p.provenance == Provenance::Predicted);
      CHECK_NOTHROW(decode(p.genome, space));
    }
  }
  SUBCASE("seeded screening is reproducible") {
    const auto a = nsga2_screen(space, f1, 60, params, 3);
    const auto b = nsga2_screen(space, f1, 60, params, 3);
    for (std::size_t i = 0; i < a.pool.size(); ++i) CHECK(a.pool[i].genome == b.pool[i].genome);
  }
  SUBCASE("a tiny space is reported as exhausted") {
    auto arch = vit_b_space();  // one layer count, one head count, two MLP widths
    arch.layer_options = {arch.layer_options[static_cast<std::size_t>(arch.canonical_layers)]};
    arch.head_options = {arch.head_options[static_cast<std::size_t>(arch.canonical_heads)]};
    arch.intermediate_options.resize(2);
    arch.canonical_layers = arch.canonical_heads = arch.canonical_intermediate = 0;
    const auto tiny = make_genome_space(SearchSetting::ElasticArchStaticCfg, arch, default_config_space());
    const auto r = nsga2_screen(tiny, f1, 50, params, 1);
    CHECK(r.exhausted);
    CHECK(r.pool.size() < 50);
  }
}

TEST_CASE("select_top_n orders by rank, then crowding") {
  std::vector<ParetoPoint> pool{point(0.5, 50), point(0.9, 100), point(0.4, 60), point(0.7, 70), point(0.1, 10)};
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].genome.bits = {std::uint8_t(i)};
  const auto top = select_top_n(pool, 5);
  REQUIRE(top.size() == 5);
  // Front {4, 0, 3, 1}; boundaries 4 and 1 first, then the interior by crowding; 2 last.
  CHECK(top[0] == 1);
  CHECK(top[1] == 4);
  CHECK(top.back() == 2);
  CHECK(select_top_n(pool, 2).size() == 2);
}

TEST_CASE("joint search bookkeeping") {
  const auto space = small_space();
  SearchParams params;
  params.k = 3;
  params.m = 60;
  params.n = 20;
  params.nsga.population = 20;
  params.seed = 4;
  const auto history = joint_search(space, params, fake_evaluator(space));

  REQUIRE(history.iterations.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(history.iterations[static_cast<std::size_t>(i)].training_size == 20u * (i + 1));
  CHECK(history.training_ids.size() == 60);
  CHECK_FALSE(history.iterations[0].cycles_tau.has_value());
  CHECK(history.iterations[1].cycles_tau.has_value());
  for (const auto& p : history.front) {
    CHECK(p.provenance == Provenance::True);
    CHECK(history.evaluated[static_cast<std::size_t>(p.id)].genome == p.genome);
  }
  std::set<Genome> unique;
  for (const auto& p : history.evaluated) CHECK(unique.insert(p.genome).second);

  SUBCASE("K = 1 is the random bootstrap") {
    auto one = params;
    one.k = 1;
    const auto h = joint_search(space, one, fake_evaluator(space));
    CHECK(h.iterations.size() == 1);
    CHECK(h.evaluated.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(h.evaluated[i].genome == history.evaluated[i].genome);
  }
  SUBCASE("same seed, same history") {
    const auto again = joint_search(space, params, fake_evaluator(space));
    REQUIRE(again.evaluated.size() == history.evaluated.size());
    for (std::size_t i = 0; i < again.evaluated.size(); ++i) CHECK(again.evaluated[i].genome == history.evaluated[i].genome);
  }
}

TEST_CASE("frozen side never moves") {
  for (auto setting : {SearchSetting::ElasticArchStaticCfg, SearchSetting::StaticArchElasticCfg}) {
    const auto space = small_space(setting);
    SearchParams params;
    params.k = 2;
    params.m = 40;
    params.n = 10;
    params.nsga.population = 10;
    const auto history = joint_search(space, params, fake_evaluator(space));
    for (const auto& p : history.evaluated) {
      const auto d = decode(p.genome, space);
      if (space.frozen_arch) CHECK(d.arch == *space.frozen_arch);
      if (space.frozen_config) CHECK(d.config == *space.frozen_config);
    }
  }
}

TEST_CASE("infeasible genomes get the sentinel and stay off the front") {
  const auto space = small_space();
  const auto base = fake_evaluator(space);
  const TrueEvaluator flaky = [&](const Genome& g) {
    auto r = base(g);
    if (g.bits[0] == 1) r = TrueEval{0.0, 0, false};
    return r;
  };
  SearchParams params;
  params.k = 2;
  params.m = 40;
  params.n = 20;
  params.nsga.population = 20;
  params.seed = 2;
  const auto history = joint_search(space, params, flaky);
  double max_feasible = 0;
  bool saw_infeasible = false;
  for (std::size_t i = 0; i < history.evaluated.size(); ++i) {
    if (history.feasible[i]) {
      max_feasible = std::max(max_feasible, history.evaluated[i].cycles);
    } else {
      saw_infeasible = true;
      CHECK(history.evaluated[i].accuracy == 0.0);
    }
  }
  CHECK(saw_infeasible);
  CHECK(infeasible_sentinel(history) == 2 * max_feasible);
  for (const auto& p : history.front) CHECK(history.feasible[static_cast<std::size_t>(p.id)]);
  CHECK(infeasible_sentinel(SearchHistory{}) == 1.0);

  const TrueEvaluator never = [](const Genome&) { return TrueEval{0.0, 0, false}; };
  params.k = 1;
  CHECK_THROWS_AS(joint_search(space, params, never), InfeasibleError);
}

TEST_CASE("true evaluator is deterministic and hardware-independent in accuracy") {
  const auto space = small_space();
  const auto eval = make_true_evaluator(space, ProxyParams{});
  Rng rng(10);
  const auto g = sample_genome(space, rng);
  const auto a = eval(g), b = eval(g);
  CHECK(a.cycles == b.cycles);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.feasible);
  const auto d = decode(g, space);
  const auto other = encode(d.arch, sample_config(space.config, 77), space);
  CHECK(eval(other).accuracy == a.accuracy);
}

TEST_CASE("setting names round trip") {
  for (auto s : {SearchSetting::ElasticArchStaticCfg, SearchSetting::StaticArchElasticCfg,
                 SearchSetting::ElasticArchElasticCfg}) {
    CHECK(setting_from_string(setting_name(s)) == s);
  }
  CHECK_THROWS(setting_from_string("both"));
}
