#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tkrr/cpd.hpp"
#include "tkrr/data.hpp"
#include "tkrr/features.hpp"
#include "tkrr/solver.hpp"

namespace tkrr {

enum class Task { regression, classification };

/// Trained artifact: scaling, feature basis, CPD weights and the task kind,
/// plus the training configuration for provenance. Immutable after fit;
/// predict/classify are safe for concurrent callers.
struct TkrrModel {
  Scaler scaler;
  FeatureConfig feature_config;
  CpdWeights weights;
  Task task = Task::regression;
  TrainConfig train_config;
};

struct FitOverrides {
  std::optional<double> lengthscale;  // default: mean per-dimension std of the scaled inputs
  double margin = 1.25;
  std::optional<Task> task;  // default: inferred (all targets in {-1,+1} means classification)
};

/// Full pipeline: fit scaler on the data, standardize targets (regression
/// only), train the CPD weights. Deterministic given cfg.seed.
std::pair<TkrrModel, std::vector<double>> fit(const Dataset& dataset, const TrainConfig& cfg,
                                              const FitOverrides& overrides = {});

/// Raw-scale predictions at the rows of X_raw (inputs are scaled and clipped
/// into the feature box first).
Eigen::VectorXd predict(const TkrrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_raw);

/// Labels in {-1, +1} by the sign of the raw score; a score of exactly 0
/// maps to +1. Requires a classification model.
Eigen::VectorXi classify(const TkrrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_raw);

/// Versioned JSON persistence; numbers are written with shortest
/// round-trip precision so load(save(m)) reproduces predictions bit-exactly.
void save(const TkrrModel& model, const std::string& path);
TkrrModel load(const std::string& path);

/// Mean squared error and misclassification rate helpers shared by the CLI.
double mean_squared_error(const Eigen::Ref<const Eigen::VectorXd>& predictions,
                          const Eigen::Ref<const Eigen::VectorXd>& targets);
double misclassification_rate(const Eigen::Ref<const Eigen::VectorXi>& labels,
                              const Eigen::Ref<const Eigen::VectorXd>& targets);

}  // namespace tkrr
