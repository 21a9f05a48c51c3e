#include <doctest.h>

#include <cmath>

#include "cimnet/predict.hpp"
#include "cimnet/search.hpp"

using namespace cimnet;

namespace {

// Independent tau-b: classify every pair as concordant, discordant or tied.
double tau_reference(const std::vector<double>& x, const std::vector<double>& y) {
  std::int64_t concordant = 0, discordant = 0, tied_x = 0, tied_y = 0, pairs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      ++pairs;
      const bool tx = x[i] == x[j], ty = y[i] == y[j];
      if (tx) ++tied_x;
      if (ty) ++tied_y;
      if (tx || ty) continue;
      if ((x[i] < x[j]) == (y[i] < y[j])) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  return double(concordant - discordant) / std::sqrt(double(pairs - tied_x) * double(pairs - tied_y));
}

// Ridge by QR on the augmented least-squares system.
std::pair<Eigen::VectorXd, double> ridge_reference(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
  const auto n = X.rows(), d = X.cols();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + d, d + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + d);
  A.topLeftCorner(n, d) = X;
  A.topRightCorner(n, 1).setOnes();
  A.bottomLeftCorner(d, d) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(d, d);
  b.head(n) = y;
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
  return {sol.head(d), sol[d]};
}

}  // namespace

TEST_CASE("ridge on two points") {
  Eigen::MatrixXd X(2, 1);
  X << 1, 2;
  Eigen::VectorXd y(2);
  y << 2, 4;
  SUBCASE("lambda = 0 recovers the line") {
    const auto m = fit_ridge(X, y, 0.0);
    CHECK(m.weights[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.bias == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
  SUBCASE("lambda = 1 matches the centered closed form") {
    // Centered x = (-0.5, 0.5), y = (-1, 1): w = sum(xy) / (sum(x^2) + 1) = 1 / 1.5.
    const auto m = fit_ridge(X, y, 1.0);
    CHECK(m.weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.bias == doctest::Approx(3.0 - 1.5 * 2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("huge lambda shrinks to the mean") {
    const auto m = fit_ridge(X, y, 1e9);
    CHECK(std::abs(m.weights[0]) < 1e-8);
    CHECK(m.predict(X)[0] == doctest::Approx(3.0).epsilon(1e-6));
  }
}

TEST_CASE("ridge reports a singular system at lambda = 0") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 2, 2, 3, 3, 4, 4;
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  CHECK_THROWS_AS(fit_ridge(X, y, 0.0), PredictError);
  CHECK_NOTHROW(fit_ridge(X, y, 0.1));
}

TEST_CASE("ridge agrees with a QR reference and is stationary") {
  Rng rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 20 + uniform_index(rng, 60), d = 2 + uniform_index(rng, 15);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) X(i, k) = coin(rng, 0.5) ? 1.0 : 0.0;
      y[i] = 5.0 + normal(rng);
    }
    const double lambda = std::pow(10.0, uniform_index(rng, 5) - 2);
    const auto m = fit_ridge(X, y, lambda);
    const auto [w, b] = ridge_reference(X, y, lambda);
    CHECK((m.weights - w).norm() < 1e-8);
    CHECK(std::abs(m.bias - b) < 1e-8);
    CHECK(ridge_gradient(X, y, m).norm() <= 1e-8);
  }
}

TEST_CASE("LOG target fits multiplicative data exactly") {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd y(4);
  y << 100, 200, 300, 600;
  const auto m = fit_ridge(X, y, 0.0, TargetTransform::Log);
  const Eigen::VectorXd p = m.predict(X);
  for (int i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(y[i]).epsilon(1e-9));
  Eigen::VectorXd bad = y;
  bad[0] = 0;
  CHECK_THROWS_AS(fit_ridge(X, bad, 1.0, TargetTransform::Log), PredictError);
}

TEST_CASE("ridge model JSON round trip") {
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd y(3);
  y << 1, 2, 4;
  auto m = fit_ridge(X, y, 0.5, TargetTransform::Log);
  m.schema_hash = "abc";
  const nlohmann::json j = m;
  const auto back = j.get<RidgeModel>();
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
  CHECK(back.transform == TargetTransform::Log);
  CHECK(back.schema_hash == "abc");
}

TEST_CASE("lambda cross-validation returns a grid member") {
  Rng rng(6);
  Eigen::MatrixXd X(40, 5);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    for (int k = 0; k < 5; ++k) X(i, k) = coin(rng, 0.5);
    y[i] = 1 + X(i, 0) + 2 * X(i, 3);
  }
  const double l = select_lambda_cv(X, y, kDefaultLambdaGrid, 5, TargetTransform::Identity, 1);
  CHECK(std::find(kDefaultLambdaGrid.begin(), kDefaultLambdaGrid.end(), l) != kDefaultLambdaGrid.end());
  CHECK(l == 0.01);  // noiseless data favours the least shrinkage
}

TEST_CASE("mape") {
  const std::vector<double> t{100, 200}, p{110, 180};
  CHECK(mape(t, p) == doctest::Approx(10.0));
  CHECK(mape(t, t) == 0.0);
  const std::vector<double> t3{300, 600}, p3{330, 540};
  CHECK(mape(t3, p3) == doctest::Approx(mape(t, p)));
  const std::vector<double> zero{0, 1};
  CHECK_THROWS_AS(mape(zero, zero), PredictError);
}

TEST_CASE("kendall tau") {
  const std::vector<double> a{1, 2, 3, 4}, rev{4, 3, 2, 1}, swap{1, 3, 2, 4}, flat{2, 2, 2, 2};
  CHECK(kendall_tau(a, a) == 1.0);
  CHECK(kendall_tau(a, rev) == -1.0);
  CHECK(kendall_tau(a, swap) == doctest::Approx(4.0 / 6.0));
  CHECK_THROWS_AS(kendall_tau(a, flat), PredictError);

  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + uniform_index(rng, 60);
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = uniform_index(rng, 8);
      y[static_cast<std::size_t>(i)] = uniform_index(rng, 8);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) {
      continue;
    }
    CHECK(kendall_tau(x, y) == tau_reference(x, y));
  }
}

TEST_CASE("linear SVR") {
  Eigen::MatrixXd X(30, 3);
  Eigen::VectorXd y(30);
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    for (int k = 0; k < 3; ++k) X(i, k) = coin(rng, 0.5);
    y[i] = 2.0 + 0.5 * X(i, 0) - 0.25 * X(i, 2);
  }
  SUBCASE("huge epsilon keeps w at zero") {
    const auto m = fit_svr_linear(X, y, 1.0, 1e6, 20, 1);
    CHECK(m.weights.norm() == 0.0);
    CHECK(m.bias == 0.0);
  }
  SUBCASE("linear data ends inside the tube") {
    const double eps = 0.05;
    const auto m = fit_svr_linear(X, y, 100.0, eps, 400, 1);
    const Eigen::VectorXd p = m.predict(X);
    CHECK((p - y).cwiseAbs().maxCoeff() <= eps + 0.02);
  }
  SUBCASE("bad hyper-parameters") {
    CHECK_THROWS_AS(fit_svr_linear(X, y, 0.0, 0.1, 5, 1), PredictError);
    CHECK_THROWS_AS(fit_svr_linear(X, y, 1.0, -0.1, 5, 1), PredictError);
  }
}

namespace {

struct Labelled {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Labelled simulator_labels(std::size_t n, std::uint64_t seed) {
  const auto space = make_genome_space(SearchSetting::ElasticArchStaticCfg, mobilenet_v3_space(), default_config_space());
  const auto eval = make_true_evaluator(space, ProxyParams{});
  Rng rng(seed);
  std::vector<Genome> genomes;
  Labelled out;
  out.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    genomes.push_back(sample_genome(space, rng));
    out.y[static_cast<Eigen::Index>(i)] = static_cast<double>(eval(genomes.back()).cycles);
  }
  out.X = genome_features(genomes);
  return out;
}

}  // namespace

TEST_CASE("predictor learning curve on simulator labels") {
  const auto data = simulator_labels(2000, 31);
  EvalPlan plan;
  plan.seed = 5;
  const auto curve = evaluate_predictor(data.X, data.y, plan, ModelKind::Ridge);
  REQUIRE(curve.size() == 4);
  CHECK(curve[0].n_train == 100);
  CHECK(curve[3].n_train == 1000);
  CHECK(curve[3].n_test == 1000);
  CHECK(curve[3].mape <= curve[0].mape);
  for (const auto& e : curve) {
    CHECK(e.mape >= 0.0);
    CHECK(e.kendall_tau <= 1.0);
  }

  EvalPlan too_big = plan;
  too_big.train_sizes = {2000};
  CHECK_THROWS_AS(evaluate_predictor(data.X, data.y, too_big, ModelKind::Ridge), PredictError);
}

TEST_CASE("SVR ranks about as well as ridge on 200 simulator-labelled genomes") {
  const auto data = simulator_labels(400, 77);
  EvalPlan plan;
  plan.train_sizes = {200};
  plan.trials = 3;
  plan.seed = 2;
  const double ridge = evaluate_predictor(data.X, data.y, plan, ModelKind::Ridge)[0].kendall_tau;
  const double svr = evaluate_predictor(data.X, data.y, plan, ModelKind::Svr)[0].kendall_tau;
  CHECK(std::abs(ridge - svr) <= 0.1);
}

TEST_CASE("predictor accepts any genome of its space") {
  const auto space = make_genome_space(SearchSetting::ElasticArchElasticCfg, vit_b_space(), default_config_space());
  Rng rng(1);
  std::vector<Genome> g;
  std::vector<Objectives> truth;
  for (int i = 0; i < 20; ++i) {
    g.push_back(sample_genome(space, rng));
    truth.push_back({0.5 + 0.01 * i, 1000.0 + i});
  }
  const auto s = fit_surrogates(g, truth, SurrogateParams{}, 1);
  CHECK(s.ridge_cycles.weights.size() == static_cast<Eigen::Index>(genome_layout(space).length));
  const auto o = s.predict(sample_genome(space, rng));
  CHECK(o.cycles > 0.0);
}
