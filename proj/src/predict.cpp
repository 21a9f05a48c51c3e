#include "cimnet/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cimnet/rng.hpp"

namespace cimnet {

const char* transform_name(TargetTransform t) { return t == TargetTransform::Log ? "log" : "identity"; }

namespace {

TargetTransform transform_from_string(const std::string& s) {
  if (s == "log") return TargetTransform::Log;
  if (s == "identity") return TargetTransform::Identity;
  throw PredictError("unknown target transform '" + s + "'");
}

Eigen::VectorXd forward(const Eigen::VectorXd& y, TargetTransform t) {
  if (t == TargetTransform::Identity) return y;
  if ((y.array() <= 0.0).any()) throw PredictError("LOG transform needs strictly positive targets");
  return y.array().log().matrix();
}

double inverse(double v, TargetTransform t) { return t == TargetTransform::Log ? std::exp(v) : v; }

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& y, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Eigen::Index>(r)] = y[static_cast<Eigen::Index>(rows[r])];
  return out;
}

}  // namespace

Eigen::MatrixXd genome_features(std::span<const Genome> genomes) {
  if (genomes.empty()) return {};
  Eigen::MatrixXd X(static_cast<Eigen::Index>(genomes.size()), static_cast<Eigen::Index>(genomes[0].bits.size()));
  for (std::size_t r = 0; r < genomes.size(); ++r) {
    if (genomes[r].bits.size() != genomes[0].bits.size()) throw PredictError("genomes differ in length");
    for (std::size_t c = 0; c < genomes[r].bits.size(); ++c) {
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = genomes[r].bits[c];
    }
  }
  return X;
}

double RidgeModel::predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != weights.size()) throw PredictError("feature length does not match the model");
  return inverse(weights.dot(x) + bias, transform);
}

Eigen::VectorXd RidgeModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != weights.size()) throw PredictError("feature length does not match the model");
  Eigen::VectorXd raw = (X * weights).array() + bias;
  for (auto& v : raw) v = inverse(v, transform);
  return raw;
}

void to_json(nlohmann::json& j, const RidgeModel& m) {
  j = nlohmann::json{{"kind", "ridge"},
                     {"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())},
                     {"bias", m.bias},
                     {"lambda", m.lambda},
                     {"transform", transform_name(m.transform)},
                     {"schema_hash", m.schema_hash}};
}

void from_json(const nlohmann::json& j, RidgeModel& m) {
  const auto w = j.at("weights").get<std::vector<double>>();
  m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.bias = j.at("bias").get<double>();
  m.lambda = j.at("lambda").get<double>();
  m.transform = transform_from_string(j.at("transform").get<std::string>());
  m.schema_hash = j.value("schema_hash", std::string{});
}

RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, TargetTransform transform) {
  if (X.rows() != y.size() || X.rows() < 1) throw PredictError("fit_ridge: need rows(X) = len(y) >= 1");
  if (lambda < 0) throw PredictError("fit_ridge: lambda must be >= 0");
  const Eigen::VectorXd t = forward(y, transform);
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double t_mean = t.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  Eigen::MatrixXd A = Xc.transpose() * Xc;
  A.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = Xc.transpose() * (t.array() - t_mean).matrix();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  const bool degenerate = pivots.size() > 0 && !(pivots.minCoeff() > 1e-12 * std::max(1.0, pivots.maxCoeff()));
  // NaN-safe: a zero pivot makes the rcond estimate NaN.
  if (ldlt.info() != Eigen::Success || (lambda == 0.0 && (degenerate || !(ldlt.rcond() >= 1e-12)))) {
    throw PredictError("fit_ridge: normal equations are ill-conditioned (rcond " + std::to_string(ldlt.rcond()) +
                       "); use lambda > 0");
  }
  RidgeModel m;
  m.weights = ldlt.solve(rhs);
  // One refinement step tightens stationarity on badly scaled problems.
  m.weights += ldlt.solve(rhs - A * m.weights);
  m.bias = t_mean - x_mean.dot(m.weights);
  m.lambda = lambda;
  m.transform = transform;
  return m;
}

Eigen::VectorXd ridge_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RidgeModel& m) {
  const Eigen::VectorXd t = forward(y, m.transform);
  const Eigen::VectorXd r = (X * m.weights).array() + m.bias - t.array();
  Eigen::VectorXd g(m.weights.size() + 1);
  g.head(m.weights.size()) = 2.0 * (X.transpose() * r) + 2.0 * m.lambda * m.weights;
  g[m.weights.size()] = 2.0 * r.sum();
  return g;
}

double select_lambda_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& grid,
                        int folds, TargetTransform transform, std::uint64_t seed) {
  if (grid.empty()) throw PredictError("select_lambda_cv: empty grid");
  if (folds < 2 || X.rows() < folds) throw PredictError("select_lambda_cv: need at least `folds` rows");
  const auto n = static_cast<std::size_t>(X.rows());
  const auto order = shuffled(n, seed);
  const Eigen::VectorXd t = forward(y, transform);
  double best_lambda = grid.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    double err = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t k = 0; k < n; ++k) (static_cast<int>(k % static_cast<std::size_t>(folds)) == f ? test : train).push_back(order[k]);
      const auto m = fit_ridge(take_rows(X, train), take(t, train), lambda, TargetTransform::Identity);
      const Eigen::VectorXd pred = m.predict(take_rows(X, test));
      err += (pred - take(t, test)).squaredNorm();
    }
    if (err <= best_err) {
      best_err = err;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

double SvrModel::predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != weights.size()) throw PredictError("feature length does not match the model");
  return inverse(weights.dot(x) + bias, transform);
}

Eigen::VectorXd SvrModel::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd raw = (X * weights).array() + bias;
  for (auto& v : raw) v = inverse(v, transform);
  return raw;
}

SvrModel fit_svr_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double c, double epsilon, int epochs,
                        std::uint64_t seed, TargetTransform transform) {
  if (c <= 0) throw PredictError("fit_svr_linear: c must be > 0");
  if (epsilon < 0) throw PredictError("fit_svr_linear: epsilon must be >= 0");
  if (X.rows() != y.size() || X.rows() < 1) throw PredictError("fit_svr_linear: need rows(X) = len(y) >= 1");
  const Eigen::VectorXd t = forward(y, transform);
  const auto n = static_cast<std::size_t>(X.rows());
  const double reg = 1.0 / (c * static_cast<double>(n));
  const double max_norm = std::max(1.0, X.rowwise().squaredNorm().maxCoeff() + 1.0);
  const double eta0 = 1.0 / max_norm;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
  double b = 0.0;
  Eigen::VectorXd w_avg = Eigen::VectorXd::Zero(X.cols());
  double b_avg = 0.0;
  std::int64_t averaged = 0;
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double eta = eta0 / std::sqrt(1.0 + epoch);
    for (auto row : order) {
      const auto r = static_cast<Eigen::Index>(row);
      const double residual = X.row(r).dot(w) + b - t[r];
      double s = 0.0;
      if (residual > epsilon) s = 1.0;
      if (residual < -epsilon) s = -1.0;
      if (reg != 0.0) w *= (1.0 - eta * reg);
      if (s != 0.0) {
        w -= eta * s * X.row(r).transpose();
        b -= eta * s;
      }
      if (2 * epoch >= epochs) {
        ++averaged;
        const double k = 1.0 / static_cast<double>(averaged);
        w_avg += k * (w - w_avg);
        b_avg += k * (b - b_avg);
      }
    }
  }
  SvrModel m;
  m.weights = averaged ? w_avg : w;
  m.bias = averaged ? b_avg : b;
  m.transform = transform;
  return m;
}

double mape(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) throw PredictError("mape: length mismatch or empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 0.0) throw PredictError("mape: ground truth contains zero");
    total += std::abs(y_true[i] - y_pred[i]) / std::abs(y_true[i]);
  }
  return 100.0 * total / static_cast<double>(y_true.size());
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PredictError("kendall_tau: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw PredictError("kendall_tau: need at least two observations");
  std::int64_t score = 0, untied_x = 0, untied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int sx = (x[i] > x[j]) - (x[i] < x[j]);
      const int sy = (y[i] > y[j]) - (y[i] < y[j]);
      score += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }
  }
  if (untied_x == 0 || untied_y == 0) throw PredictError("kendall_tau: undefined for a constant vector");
  return static_cast<double>(score) / std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

const char* model_kind_name(ModelKind k) { return k == ModelKind::Svr ? "svr" : "ridge"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "ridge") return ModelKind::Ridge;
  if (s == "svr") return ModelKind::Svr;
  throw PredictError("unknown predictor kind '" + s + "'");
}

std::vector<PredictorEval> evaluate_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                              const EvalPlan& plan, ModelKind kind) {
  if (X.rows() != y.size()) throw PredictError("evaluate_predictor: rows(X) != len(y)");
  if (plan.trials < 1) throw PredictError("evaluate_predictor: trials must be >= 1");
  const auto pool = static_cast<std::size_t>(X.rows());
  std::vector<PredictorEval> curve;
  for (std::size_t size : plan.train_sizes) {
    const std::size_t test = plan.test_size ? plan.test_size : pool - std::min(pool, size);
    if (size < 1 || size + std::max<std::size_t>(test, 1) > pool) {
      throw PredictError("evaluate_predictor: pool of " + std::to_string(pool) + " cannot supply " +
                         std::to_string(size) + " training rows plus a test set");
    }
    PredictorEval eval;
    eval.n_train = size;
    eval.n_test = test;
    for (int trial = 0; trial < plan.trials; ++trial) {
      const auto order = shuffled(pool, derive_seed(plan.seed, static_cast<std::uint64_t>(trial)));
      const std::span<const std::size_t> train_rows(order.data(), size);
      const std::span<const std::size_t> test_rows(order.data() + size, test);
      const Eigen::MatrixXd Xtr = take_rows(X, train_rows);
      const Eigen::VectorXd ytr = take(y, train_rows);
      const Eigen::MatrixXd Xte = take_rows(X, test_rows);
      const Eigen::VectorXd yte = take(y, test_rows);
      Eigen::VectorXd pred;
      if (kind == ModelKind::Ridge) {
        pred = fit_ridge(Xtr, ytr, plan.lambda, plan.transform).predict(Xte);
      } else {
        pred = fit_svr_linear(Xtr, ytr, plan.svr_c, plan.svr_epsilon, plan.svr_epochs,
                              derive_seed(plan.seed, 1000 + static_cast<std::uint64_t>(trial)), plan.transform)
                   .predict(Xte);
      }
      const std::span<const double> truth(yte.data(), static_cast<std::size_t>(yte.size()));
      const std::span<const double> guess(pred.data(), static_cast<std::size_t>(pred.size()));
      eval.mape += mape(truth, guess);
      double tau = 0.0;
      try {
        tau = kendall_tau(truth, guess);
      } catch (const PredictError&) {
        // Constant predictions or targets carry no ranking information.
      }
      eval.kendall_tau += tau;
    }
    eval.mape /= plan.trials;
    eval.kendall_tau /= plan.trials;
    curve.push_back(eval);
  }
  return curve;
}

}  // namespace cimnet
