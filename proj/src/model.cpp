#include "tkrr/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tkrr/errors.hpp"

namespace tkrr {

namespace {

constexpr int kSchemaVersion = 1;

bool all_labels(const Eigen::Ref<const Eigen::VectorXd>& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 1.0 && y(i) != -1.0) return false;
  }
  return true;
}

double lengthscale_heuristic(const Eigen::Ref<const Eigen::MatrixXd>& scaled) {
  // mean over dimensions of the per-dimension population std of the scaled inputs
  double acc = 0.0;
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    const double mean = scaled.col(j).mean();
    acc += std::sqrt((scaled.col(j).array() - mean).square().mean());
  }
  return acc / static_cast<double>(scaled.cols());
}

Eigen::VectorXd raw_scores(const TkrrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_raw) {
  if (X_raw.cols() != model.feature_config.dims)
    throw InvalidParameterError("predict: input has " + std::to_string(X_raw.cols()) +
                                " columns, model expects " +
                                std::to_string(model.feature_config.dims));
  const Eigen::MatrixXd scaled = apply_scaler(model.scaler, X_raw);
  Eigen::MatrixXd products = Eigen::MatrixXd::Ones(X_raw.rows(), model.weights.rank);
  for (int d = 0; d < model.feature_config.dims; ++d) {
    products = products.cwiseProduct(feature_matrix(scaled.col(d), d, model.feature_config) *
                                     model.weights.factors[static_cast<std::size_t>(d)]);
  }
  return products.rowwise().sum();
}

const char* reg_mode_name(RegMode mode) {
  return mode == RegMode::full_hadamard ? "full_hadamard" : "diagonal_only";
}

RegMode reg_mode_from(const std::string& name) {
  if (name == "full_hadamard") return RegMode::full_hadamard;
  if (name == "diagonal_only") return RegMode::diagonal_only;
  throw SchemaError("load: unknown reg_mode '" + name + "'");
}

const char* memory_mode_name(MemoryMode mode) {
  return mode == MemoryMode::streaming ? "streaming" : "cached";
}

MemoryMode memory_mode_from(const std::string& name) {
  if (name == "cached") return MemoryMode::cached;
  if (name == "streaming") return MemoryMode::streaming;
  throw SchemaError("load: unknown memory_mode '" + name + "'");
}

}  // namespace

std::pair<TkrrModel, std::vector<double>> fit(const Dataset& dataset, const TrainConfig& cfg,
                                              const FitOverrides& overrides) {
  cfg.validate();
  if (dataset.n() < 1) throw InvalidParameterError("fit: empty dataset");
  if (!dataset.X.allFinite() || !dataset.y.allFinite())
    throw InvalidParameterError("fit: dataset contains non-finite values");

  TkrrModel model;
  model.task = overrides.task.value_or(all_labels(dataset.y) ? Task::classification
                                                             : Task::regression);
  if (model.task == Task::classification && !all_labels(dataset.y))
    throw InvalidParameterError("fit: classification targets must all be -1 or +1");

  model.scaler = fit_scaler(dataset, overrides.margin);
  const Eigen::MatrixXd scaled = apply_scaler(model.scaler, dataset.X);

  double lengthscale;
  if (overrides.lengthscale) {
    lengthscale = *overrides.lengthscale;
    if (!(lengthscale > 0.0)) throw InvalidParameterError("fit: lengthscale must be positive");
  } else {
    lengthscale = lengthscale_heuristic(scaled);
    if (!(lengthscale > 0.0))
      throw InvalidParameterError(
          "fit: cannot infer a lengthscale from constant inputs; pass one explicitly");
  }

  model.feature_config =
      FeatureConfig{cfg.m_hat, lengthscale,
                    std::vector<double>(static_cast<std::size_t>(dataset.dims()),
                                        model.scaler.half_width()),
                    static_cast<int>(dataset.dims())};

  Eigen::VectorXd targets;
  if (model.task == Task::regression) {
    auto [standardized, mean, std_dev] = standardize_targets(dataset.y);
    targets = std::move(standardized);
    model.scaler.target_mean = mean;
    model.scaler.target_std = std_dev;
  } else {
    targets = dataset.y;
    model.scaler.target_mean = 0.0;
    model.scaler.target_std = 1.0;
  }

  TrainResult result = train(scaled, targets, model.feature_config, cfg);
  model.weights = std::move(result.weights);
  model.train_config = cfg;
  return {std::move(model), std::move(result.loss_trace)};
}

Eigen::VectorXd predict(const TkrrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_raw) {
  return destandardize(raw_scores(model, X_raw), model.scaler.target_mean,
                       model.scaler.target_std);
}

Eigen::VectorXi classify(const TkrrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X_raw) {
  if (model.task != Task::classification)
    throw InvalidParameterError("classify: model was trained for regression");
  const Eigen::VectorXd scores = predict(model, X_raw);
  Eigen::VectorXi labels(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) labels(i) = scores(i) >= 0.0 ? 1 : -1;
  return labels;
}

void save(const TkrrModel& model, const std::string& path) {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["task"] = model.task == Task::classification ? "classification" : "regression";
  doc["scaler"] = {
      {"col_min", std::vector<double>(model.scaler.col_min.begin(), model.scaler.col_min.end())},
      {"col_max", std::vector<double>(model.scaler.col_max.begin(), model.scaler.col_max.end())},
      {"target_mean", model.scaler.target_mean},
      {"target_std", model.scaler.target_std},
      {"margin", model.scaler.margin}};
  doc["feature_config"] = {{"m_hat", model.feature_config.m_hat},
                           {"lengthscale", model.feature_config.lengthscale},
                           {"half_widths", model.feature_config.half_widths},
                           {"dims", model.feature_config.dims}};
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& factor : model.weights.factors) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < factor.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index r = 0; r < factor.cols(); ++r) row.push_back(factor(i, r));
      rows.push_back(std::move(row));
    }
    factors.push_back(std::move(rows));
  }
  doc["weights"] = {{"rank", model.weights.rank}, {"factors", std::move(factors)}};
  doc["train_config"] = {{"m_hat", model.train_config.m_hat},
                         {"rank", model.train_config.rank},
                         {"lambda", model.train_config.lambda},
                         {"sweeps", model.train_config.sweeps},
                         {"reg_mode", reg_mode_name(model.train_config.reg_mode)},
                         {"seed", model.train_config.seed},
                         {"jitter", model.train_config.jitter},
                         {"capture_trace", model.train_config.capture_trace},
                         {"memory_mode", memory_mode_name(model.train_config.memory_mode)},
                         {"equilibrate", model.train_config.equilibrate}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save: cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("save: write to '" + path + "' failed");
}

TkrrModel load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load: '" + path + "' is not valid JSON: " + e.what());
  }

  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kSchemaVersion)
      throw SchemaError("load: unsupported schema version " + std::to_string(version) +
                        " (expected " + std::to_string(kSchemaVersion) + ")");

    TkrrModel model;
    const std::string task = doc.at("task").get<std::string>();
    if (task == "classification") {
      model.task = Task::classification;
    } else if (task == "regression") {
      model.task = Task::regression;
    } else {
      throw SchemaError("load: unknown task '" + task + "'");
    }

    const auto& scaler = doc.at("scaler");
    const auto col_min = scaler.at("col_min").get<std::vector<double>>();
    const auto col_max = scaler.at("col_max").get<std::vector<double>>();
    model.scaler.col_min = Eigen::Map<const Eigen::VectorXd>(col_min.data(),
                                                             static_cast<Eigen::Index>(col_min.size()));
    model.scaler.col_max = Eigen::Map<const Eigen::VectorXd>(col_max.data(),
                                                             static_cast<Eigen::Index>(col_max.size()));
    model.scaler.target_mean = scaler.at("target_mean").get<double>();
    model.scaler.target_std = scaler.at("target_std").get<double>();
    model.scaler.margin = scaler.at("margin").get<double>();

    const auto& fc = doc.at("feature_config");
    model.feature_config.m_hat = fc.at("m_hat").get<int>();
    model.feature_config.lengthscale = fc.at("lengthscale").get<double>();
    model.feature_config.half_widths = fc.at("half_widths").get<std::vector<double>>();
    model.feature_config.dims = fc.at("dims").get<int>();

    const auto& weights = doc.at("weights");
    model.weights.rank = weights.at("rank").get<int>();
    for (const auto& rows : weights.at("factors")) {
      const Eigen::Index n_rows = static_cast<Eigen::Index>(rows.size());
      if (n_rows != model.feature_config.m_hat)
        throw SchemaError("load: factor row count disagrees with m_hat");
      Eigen::MatrixXd factor(n_rows, model.weights.rank);
      for (Eigen::Index i = 0; i < n_rows; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (static_cast<int>(row.size()) != model.weights.rank)
          throw SchemaError("load: factor column count disagrees with rank");
        for (Eigen::Index r = 0; r < model.weights.rank; ++r)
          factor(i, r) = row[static_cast<std::size_t>(r)].get<double>();
      }
      model.weights.factors.push_back(std::move(factor));
    }
    if (model.weights.dims() != model.feature_config.dims)
      throw SchemaError("load: factor count disagrees with feature dims");
    if (static_cast<int>(model.scaler.col_min.size()) != model.feature_config.dims ||
        static_cast<int>(model.scaler.col_max.size()) != model.feature_config.dims ||
        static_cast<int>(model.feature_config.half_widths.size()) != model.feature_config.dims)
      throw SchemaError("load: scaler/feature dimension mismatch");

    const auto& tc = doc.at("train_config");
    model.train_config.m_hat = tc.at("m_hat").get<int>();
    model.train_config.rank = tc.at("rank").get<int>();
    model.train_config.lambda = tc.at("lambda").get<double>();
    model.train_config.sweeps = tc.at("sweeps").get<int>();
    model.train_config.reg_mode = reg_mode_from(tc.at("reg_mode").get<std::string>());
    model.train_config.seed = tc.at("seed").get<std::uint64_t>();
    model.train_config.jitter = tc.at("jitter").get<double>();
    model.train_config.capture_trace = tc.at("capture_trace").get<bool>();
    model.train_config.memory_mode = memory_mode_from(tc.at("memory_mode").get<std::string>());
    model.train_config.equilibrate = tc.at("equilibrate").get<bool>();

    model.feature_config.validate();
    model.weights.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("load: '" + path + "' has an invalid model layout: " + e.what());
  } catch (const InvalidParameterError& e) {
    throw SchemaError("load: '" + path + "' fails validation: " + e.what());
  }
}

double mean_squared_error(const Eigen::Ref<const Eigen::VectorXd>& predictions,
                          const Eigen::Ref<const Eigen::VectorXd>& targets) {
  if (predictions.size() != targets.size() || predictions.size() == 0)
    throw InvalidParameterError("mean_squared_error: length mismatch or empty input");
  return (predictions - targets).squaredNorm() / static_cast<double>(targets.size());
}

double misclassification_rate(const Eigen::Ref<const Eigen::VectorXi>& labels,
                              const Eigen::Ref<const Eigen::VectorXd>& targets) {
  if (labels.size() != targets.size() || labels.size() == 0)
    throw InvalidParameterError("misclassification_rate: length mismatch or empty input");
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (static_cast<double>(labels(i)) != targets(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

}  // namespace tkrr
