#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cimnet/encoding.hpp"

namespace cimnet {

class PredictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TargetTransform { Identity, Log };

const char* transform_name(TargetTransform t);

// One row per genome; columns are the genome bits.
Eigen::MatrixXd genome_features(std::span<const Genome> genomes);

struct RidgeModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double lambda = 1.0;
  TargetTransform transform = TargetTransform::Identity;
  std::string schema_hash;

  double predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

void to_json(nlohmann::json& j, const RidgeModel& m);
void from_json(const nlohmann::json& j, RidgeModel& m);

// Minimizes ||X w + b - t(y)||^2 + lambda ||w||^2 with the bias unpenalized,
// solved on centered normal equations. Throws PredictError when the system is
// singular (only possible at lambda = 0) or LOG is asked of non-positive y.
RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                     TargetTransform transform = TargetTransform::Identity);

// Gradient of the ridge objective at (w, b), in the transformed target domain.
Eigen::VectorXd ridge_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RidgeModel& m);

inline const std::vector<double> kDefaultLambdaGrid = {0.01, 0.1, 1.0, 10.0};

// k-fold cross-validated lambda (mean squared error in the transformed domain;
// ties go to the larger lambda).
double select_lambda_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& grid,
                        int folds, TargetTransform transform, std::uint64_t seed);

struct SvrModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  TargetTransform transform = TargetTransform::Identity;

  double predict_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// Linear epsilon-insensitive SVR, 0.5||w||^2 + c * sum max(0, |r| - epsilon),
// trained by averaged subgradient descent with seeded shuffling.
SvrModel fit_svr_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double c, double epsilon, int epochs,
                        std::uint64_t seed, TargetTransform transform = TargetTransform::Identity);

// Mean absolute percentage error, in percent.
double mape(std::span<const double> y_true, std::span<const double> y_pred);
// Tie-corrected Kendall tau-b by exact pair counting.
double kendall_tau(std::span<const double> x, std::span<const double> y);

struct PredictorEval {
  double mape = 0.0;
  double kendall_tau = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

enum class ModelKind { Ridge, Svr };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct EvalPlan {
  std::vector<std::size_t> train_sizes = {100, 250, 500, 1000};
  int trials = 10;
  // Held-out rows per trial; 0 means every row not used for training.
  std::size_t test_size = 0;
  std::uint64_t seed = 0;
  TargetTransform transform = TargetTransform::Log;
  double lambda = 1.0;
  double svr_c = 10.0;
  double svr_epsilon = 0.01;
  int svr_epochs = 60;
};

// Learning curve: for each train size, MAPE and tau averaged over seeded
// resampling trials. Throws PredictError when the pool cannot supply a train
// size plus at least one test row.
std::vector<PredictorEval> evaluate_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                              const EvalPlan& plan, ModelKind kind);

}  // namespace cimnet
