// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   cimnet_acceptance [--desk] [--only N,...] [--out DIR]
//
// --desk reduces the search criterion to M=500, N=125.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cimnet/experiment.hpp"

using namespace cimnet;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- 1

HardwareConfig random_small_machine(Rng& rng) {
  HardwareConfig c;
  c.l1_num_child = 1 << uniform_index(rng, 2);  // 1..2
  c.ma_num_child = 1 << uniform_index(rng, 3);  // 1..4  -> at most 8 nodes
  c.dram_bw = 1 << (1 + uniform_index(rng, 6));
  c.l2_bw = 1 << (1 + uniform_index(rng, 6));
  c.l1_bw = 1 << (1 + uniform_index(rng, 6));
  c.ma_bw = 1 << (1 + uniform_index(rng, 5));
  c.ma_mem_size = 64 << uniform_index(rng, 7);
  c.ma_comp_per_core = 1 << uniform_index(rng, 6);
  return c;
}

std::int64_t cdiv(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Exhaustive minimum over spatial tuples from `spatial_values` and temporal
// tuples from `ti_values`. `full_tg_tic` pins tg/tic to the tile extent (the
// smallest chunk); `g_first` applies the ladder's G-saturation rule.
std::int64_t brute_force_min(const LayerSpec& layer, const HardwareConfig& cfg,
                             const std::function<std::vector<std::int64_t>(std::int64_t, std::int64_t)>& spatial_values,
                             const std::function<std::vector<std::int64_t>(std::int64_t)>& ti_values, bool full_tg_tic,
                             bool g_first) {
  const std::int64_t nodes = cfg.num_nodes();
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  const std::vector<std::int64_t> sg_values =
      g_first && layer.groups >= nodes ? std::vector<std::int64_t>{nodes} : spatial_values(layer.groups, nodes);
  for (auto sg : sg_values) {
    for (auto si : spatial_values(layer.rows, nodes / sg)) {
      for (auto so : spatial_values(layer.out_channels, nodes / (sg * si))) {
        for (auto sic : spatial_values(layer.reduction, nodes / (sg * si * so))) {
          const std::int64_t eg = cdiv(layer.groups, sg), ei = cdiv(layer.rows, si);
          const std::int64_t eo = cdiv(layer.out_channels, so), ec = cdiv(layer.reduction, sic);
          const auto tgs = full_tg_tic ? std::vector<std::int64_t>{eg} : ti_values(eg);
          const auto tcs = full_tg_tic ? std::vector<std::int64_t>{ec} : ti_values(ec);
          for (auto tg : tgs) {
            for (auto ti : ti_values(ei)) {
              for (auto to : ti_values(eo)) {
                for (auto tic : tcs) {
                  const Dataflow df{sg, si, so, sic, tg, ti, to, tic};
                  if (chunk_working_set(layer, df) > cfg.ma_mem_size) continue;
                  best = std::min(best, simulate_layer(layer, cfg, df).cycles);
                }
              }
            }
          }
        }
      }
    }
  }
  return best;
}

Verdict criterion_dataflow() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::vector<HardwareConfig> machines;
  for (int i = 0; i < 10; ++i) machines.push_back(random_small_machine(rng));
  const auto ladder = [](std::int64_t extent, std::int64_t cap) { return factor_ladder(extent, cap); };
  const auto ladder_t = [](std::int64_t extent) { return factor_ladder(extent, extent); };
  const auto divisors = [](std::int64_t extent, std::int64_t cap) {
    std::vector<std::int64_t> out;
    for (std::int64_t v = 1; v <= std::min(extent, cap); ++v) {
      if (extent % v == 0) out.push_back(v);
    }
    return out;
  };
  const auto divisors_t = [&](std::int64_t extent) { return divisors(extent, extent); };
  // Informational only: every integer factor, not just divisors.
  const auto every = [](std::int64_t extent, std::int64_t cap) {
    std::vector<std::int64_t> out;
    for (std::int64_t v = 1; v <= std::min(extent, cap); ++v) out.push_back(v);
    return out;
  };
  const auto every_t = [&](std::int64_t extent) { return every(extent, extent); };

  int cases = 0, exact = 0, within = 0, infeasible_agree = 0;
  double worst_ratio = 1.0, worst_integer_ratio = 1.0, worst_free_g_ratio = 1.0;
  for (int l = 0; l < 50; ++l) {
    const LayerSpec layer{"l" + std::to_string(l), 1 + uniform_index(rng, 8), 1 + uniform_index(rng, 32),
                          1 + uniform_index(rng, 32), 1 + uniform_index(rng, 32), 1 << uniform_index(rng, 2)};
    for (const auto& cfg : machines) {
      ++cases;
      const auto restricted = brute_force_min(layer, cfg, ladder, ladder_t, false, true);
      const auto unrestricted = brute_force_min(layer, cfg, divisors, divisors_t, false, true);
      const auto without_g_first = brute_force_min(layer, cfg, divisors, divisors_t, false, false);
      const auto any_integer = brute_force_min(layer, cfg, every, every_t, true, false);
      std::int64_t compiled = std::numeric_limits<std::int64_t>::max();
      try {
        compiled = simulate_layer(layer, cfg, compile_dataflow(layer, cfg)).cycles;
      } catch (const InfeasibleError&) {
      }
      if (compiled == std::numeric_limits<std::int64_t>::max()) {
        // Infeasible must mean no ladder option fits either.
        if (restricted == compiled) {
          ++infeasible_agree;
          ++exact;
          ++within;
        }
        continue;
      }
      if (compiled == restricted) ++exact;
      const double ratio = double(compiled) / double(unrestricted);
      worst_ratio = std::max(worst_ratio, ratio);
      if (ratio <= 1.25) ++within;
      worst_integer_ratio = std::max(worst_integer_ratio, double(compiled) / double(any_integer));
      worst_free_g_ratio = std::max(worst_free_g_ratio, double(compiled) / double(without_g_first));
    }
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = exact == cases && within == cases && secs < 120;
  v.detail = std::to_string(exact) + "/" + std::to_string(cases) + " exact vs ladder brute force, " +
             std::to_string(within) + "/" + std::to_string(cases) + " within 1.25x of all-divisor brute force (worst " +
             fmt("%.3f", worst_ratio) + "x; for reference, without the G-first rule " +
             fmt("%.3f", worst_free_g_ratio) + "x, any integer factor " + fmt("%.3f", worst_integer_ratio) + "x; " +
             std::to_string(infeasible_agree) + " agreed infeasible), " +
             fmt("%.1f", secs) + " s";
  return v;
}

// ---------------------------------------------------------------- 2

Verdict criterion_simulator() {
  const auto t0 = Clock::now();
  const auto space = default_config_space();
  Rng rng(202);
  int below = 0, non_monotone = 0, triples = 0;
  while (triples < 1000) {
    const LayerSpec layer{"f", 1 + uniform_index(rng, 16), 1 + uniform_index(rng, 256), 1 + uniform_index(rng, 256),
                          1 + uniform_index(rng, 256), 1 << uniform_index(rng, 3)};
    const auto cfg = sample_config(space, rng);
    const auto options = enumerate_tile_options(layer, cfg);
    if (options.empty()) continue;
    ++triples;
    const auto& df = options[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(options.size())))].dataflow;
    const auto base = simulate_layer(layer, cfg, df).cycles;
    if (base < compute_lower_bound(layer, cfg)) ++below;
    for (auto f : {HwField::DramBw, HwField::L2Bw, HwField::L1Bw, HwField::MaBw}) {
      auto faster = cfg;
      faster[f] *= 1 + uniform_index(rng, 4);
      if (simulate_layer(layer, faster, df).cycles > base) ++non_monotone;
    }
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = below == 0 && non_monotone == 0 && secs < 60;
  v.detail = std::to_string(triples) + " triples, " + std::to_string(below) + " below the compute bound, " +
             std::to_string(non_monotone) + " bandwidth increases that raised cycles, " + fmt("%.1f", secs) + " s";
  return v;
}

// ---------------------------------------------------------------- 3

Verdict criterion_predictor() {
  const auto t0 = Clock::now();
  const ProxyParams proxy;
  bool pass = true;
  std::ostringstream detail;
  const SearchSetting settings[] = {SearchSetting::ElasticArchStaticCfg, SearchSetting::StaticArchElasticCfg,
                                    SearchSetting::ElasticArchElasticCfg};
  for (auto arch : {mobilenet_v3_space(), resnet50_space(), vit_b_space()}) {
    auto compiler = std::make_shared<CachingCompiler>();
    double tau[3] = {0, 0, 0};
    double err[3] = {0, 0, 0};
    for (int s = 0; s < 3; ++s) {
      const auto space = make_genome_space(settings[s], arch, default_config_space());
      const auto evaluate = make_true_evaluator(space, proxy, compiler);
      Rng rng(derive_seed(303, static_cast<std::uint64_t>(s)));
      std::vector<Genome> pool;
      std::vector<double> cycles;
      while (pool.size() < 2000) {
        Genome g = sample_genome(space, rng);
        const auto e = evaluate(g);
        if (!e.feasible) continue;
        pool.push_back(std::move(g));
        cycles.push_back(static_cast<double>(e.cycles));
      }
      EvalPlan plan;
      plan.train_sizes = {1000};
      plan.trials = 3;
      plan.seed = 3;
      const auto r = evaluate_predictor(genome_features(pool),
                                        Eigen::Map<Eigen::VectorXd>(cycles.data(), static_cast<Eigen::Index>(cycles.size())),
                                        plan, ModelKind::Ridge)[0];
      tau[s] = r.kendall_tau;
      err[s] = r.mape;
    }
    const bool ok = err[0] <= 10 && tau[0] >= 0.85 && err[1] <= 10 && tau[1] >= 0.85 && tau[2] >= 0.70 &&
                    tau[2] <= tau[0] && tau[2] <= tau[1];
    pass = pass && ok;
    detail << to_string(arch.family) << " [E/S mape " << fmt("%.2f", err[0]) << "% tau " << fmt("%.3f", tau[0])
           << "; S/E mape " << fmt("%.2f", err[1]) << "% tau " << fmt("%.3f", tau[1]) << "; E/E mape "
           << fmt("%.2f", err[2]) << "% tau " << fmt("%.3f", tau[2]) << "] ";
  }
  const double secs = seconds_since(t0);
  detail << fmt("%.1f", secs) << " s";
  return {pass && secs < 600, detail.str()};
}

// ---------------------------------------------------------------- 4

Verdict criterion_oracles() {
  const auto t0 = Clock::now();
  Rng rng(404);
  int tau_ok = 0, tau_total = 0;
  while (tau_total < 200) {
    const int n = 2 + uniform_index(rng, 100);
    const int levels = 2 + uniform_index(rng, 30);
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = uniform_index(rng, levels);
      y[static_cast<std::size_t>(i)] = uniform_index(rng, levels);
    }
    if (std::set<double>(x.begin(), x.end()).size() < 2 || std::set<double>(y.begin(), y.end()).size() < 2) continue;
    ++tau_total;
    std::int64_t c = 0, d = 0, tx = 0, ty = 0, pairs = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
        ++pairs;
        if (x[a] == x[b]) ++tx;
        if (y[a] == y[b]) ++ty;
        if (x[a] == x[b] || y[a] == y[b]) continue;
        ((x[a] < x[b]) == (y[a] < y[b]) ? c : d) += 1;
      }
    }
    const double oracle = double(c - d) / std::sqrt(double(pairs - tx) * double(pairs - ty));
    if (kendall_tau(x, y) == oracle) ++tau_ok;
  }

  int nds_ok = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + uniform_index(rng, 150);
    const int grid = 2 + uniform_index(rng, 40);
    std::vector<Objectives> pts;
    for (int i = 0; i < n; ++i) pts.push_back({double(uniform_index(rng, grid)), double(uniform_index(rng, grid))});
    std::vector<int> rank(pts.size(), -1), brute(pts.size(), -1);
    const auto fronts = non_dominated_sort(pts);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
      for (auto i : fronts[r]) rank[i] = static_cast<int>(r);
    }
    for (int r = 0, left = n; left > 0; ++r) {
      std::vector<std::size_t> layer;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (brute[i] != -1) continue;
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size(); ++j) {
          const auto& p = pts[j];
          const auto& q = pts[i];
          if (brute[j] == -1 && p.accuracy >= q.accuracy && p.cycles <= q.cycles &&
              (p.accuracy > q.accuracy || p.cycles < q.cycles)) {
            dominated = true;
            break;
          }
        }
        if (!dominated) layer.push_back(i);
      }
      for (auto i : layer) brute[i] = r;
      left -= static_cast<int>(layer.size());
    }
    if (rank == brute) ++nds_ok;
  }

  int ridge_ok = 0;
  double worst_grad = 0.0;
  std::normal_distribution<double> normal;
  for (int t = 0; t < 50; ++t) {
    const int n = 10 + uniform_index(rng, 200), d = 1 + uniform_index(rng, 40);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) X(i, k) = coin(rng, 0.4) ? 1.0 : 0.0;
      y[i] = 3.0 + normal(rng);
    }
    const double lambda = std::pow(10.0, -2 + uniform_index(rng, 5));
    const auto m = fit_ridge(X, y, lambda);
    const double g = ridge_gradient(X, y, m).norm();
    worst_grad = std::max(worst_grad, g);
    if (g <= 1e-8) ++ridge_ok;
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = tau_ok == 200 && nds_ok == 100 && ridge_ok == 50 && secs < 60;
  v.detail = "kendall " + std::to_string(tau_ok) + "/200 exact, NDS " + std::to_string(nds_ok) + "/100 exact, ridge " +
             std::to_string(ridge_ok) + "/50 stationary (worst |grad| " + fmt("%.2e", worst_grad) + "), " +
             fmt("%.1f", secs) + " s";
  return v;
}

// ---------------------------------------------------------------- 5 + 6

struct SearchOutcome {
  Verdict effectiveness, budget;
};

SearchOutcome criteria_search(bool desk) {
  const ProxyParams proxy;
  const auto config_space = default_config_space();
  SearchParams params;
  params.k = 5;
  params.m = desk ? 500 : 2000;
  params.n = desk ? 125 : 500;
  std::ostringstream eff, bud;
  bool eff_pass = true;
  std::int64_t checked = 0, violations = 0;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> by_setting;  // checked, violations
  eff << "K=5 M=" << params.m << " N=" << params.n << ": ";
  for (auto arch : {mobilenet_v3_space(), resnet50_space(), vit_b_space()}) {
    const auto t0 = Clock::now();
    auto compiler = std::make_shared<CachingCompiler>();
    const auto baseline = evaluate_baseline(arch, config_space, proxy, compiler);
    const Objectives base{baseline.accuracy, static_cast<double>(baseline.cycles)};
    int wins = 0;
    std::ostringstream per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      params.seed = seed;
      double reduction[2] = {0, 0};
      const SearchSetting settings[2] = {SearchSetting::ElasticArchStaticCfg, SearchSetting::ElasticArchElasticCfg};
      for (int s = 0; s < 2; ++s) {
        const auto space = make_genome_space(settings[s], arch, config_space);
        const auto history = joint_search(space, params, make_true_evaluator(space, proxy, compiler));
        auto& tally = by_setting[setting_name(settings[s])];
        for (const auto& p : history.evaluated) {
          ++checked;
          ++tally.first;
          bool ok = false;
          try {
            ok = validate_config(decode(p.genome, space).config, config_space).ok();
          } catch (const GenomeError&) {
          }
          if (!ok) {
            ++violations;
            ++tally.second;
          }
        }
        try {
          reduction[s] = cycle_reduction_at_iso_accuracy(history.front, base);
        } catch (const std::domain_error&) {
          reduction[s] = 0.0;  // front never reaches the baseline accuracy
        }
      }
      if (reduction[1] > reduction[0]) ++wins;
      per_seed << (seed > 1 ? " " : "") << fmt("%.2f", reduction[0]) << "/" << fmt("%.2f", reduction[1]);
    }
    const double secs = seconds_since(t0);
    const bool ok = wins >= 4 && secs < 1800;
    eff_pass = eff_pass && ok;
    eff << to_string(arch.family) << " " << wins << "/5 seeds E/E > E/S (E/S/E/E: " << per_seed.str() << ", "
        << fmt("%.0f", secs) << " s) ";
  }
  bud << checked << " true-evaluated genomes, " << violations << " budget violations (";
  for (const auto& [name, t] : by_setting) bud << name << ": " << t.second << "/" << t.first << " ";
  bud << "; the static configuration's memory product is "
      << fmt("%.3f", config_space.multiplier(static_config(config_space), HwField::L1NumChild) *
                         config_space.multiplier(static_config(config_space), HwField::MaNumChild) *
                         config_space.multiplier(static_config(config_space), HwField::MaMemSize))
      << ")";
  return {{eff_pass, eff.str()}, {violations == 0 && checked > 0, bud.str()}};
}

// ---------------------------------------------------------------- 7

Verdict criterion_determinism(const fs::path& out) {
  const auto t0 = Clock::now();
  bool pass = true;
  std::ostringstream detail;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const char* family : {"mbv3", "resnet50", "vit"}) {
    std::string fronts[2];
    for (int run = 0; run < 2; ++run) {
      const auto dir = out / (std::string(family) + "_run" + std::to_string(run));
      fs::remove_all(dir);
      const std::string text = std::string("{\"command\": \"search\", \"family\": \"") + family +
                               "\", \"k\": 3, \"m\": 200, \"n\": 50, \"seed\": 7, \"output_dir\": \"" + dir.string() +
                               "\"}";
      const auto outcome = run_experiment(parse_experiment(text));
      if (outcome.exit_code != kExitOk) {
        pass = false;
        detail << family << " run failed: " << outcome.message << "; ";
      }
      fronts[run] = slurp(dir / "front.csv");
    }
    const bool same = !fronts[0].empty() && fronts[0] == fronts[1];
    pass = pass && same;
    detail << family << (same ? " identical" : " DIFFERENT") << " (" << fronts[0].size() << " bytes); ";
  }
  detail << fmt("%.1f", seconds_since(t0)) << " s";
  return {pass, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cimnet acceptance criteria"};
  bool desk = false;
  std::vector<int> only;
  std::string out = (fs::temp_directory_path() / "cimnet_acceptance").string();
  app.add_flag("--desk", desk, "Reduced search scale (M=500, N=125)");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--out", out, "Scratch directory for experiment artifacts");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);

  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };
  std::map<int, Verdict> verdicts;
  auto report = [&](int c, const Verdict& v) {
    verdicts[c] = v;
    std::printf("criterion %d: %s  %s\n", c, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  };
  if (wanted(1)) report(1, criterion_dataflow());
  if (wanted(2)) report(2, criterion_simulator());
  if (wanted(3)) report(3, criterion_predictor());
  if (wanted(4)) report(4, criterion_oracles());
  if (wanted(5) || wanted(6)) {
    const auto s = criteria_search(desk);
    if (wanted(5)) report(5, s.effectiveness);
    if (wanted(6)) report(6, s.budget);
  }
  if (wanted(7)) report(7, criterion_determinism(out));

  int failed = 0;
  for (const auto& [c, v] : verdicts) failed += v.pass ? 0 : 1;
  std::printf("%zu criteria checked, %d failed\n", verdicts.size(), failed);
  return failed == 0 ? 0 : 1;
}
