#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace tkrr {

struct Dataset {
  Eigen::MatrixXd X;  // N x D
  Eigen::VectorXd y;  // N; real targets or +-1 labels
  std::vector<std::string> column_names;  // feature columns; empty when no header

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dims() const { return X.cols(); }
};

/// Affine input scaling fitted on training data only: each dimension maps
/// [col_min, col_max] onto [-0.5, 0.5] and the feature box half-width is
/// 0.5 * margin, so training points sit strictly inside [-U, U]. Also holds
/// the target standardization parameters.
struct Scaler {
  Eigen::VectorXd col_min;
  Eigen::VectorXd col_max;
  double target_mean = 0.0;
  double target_std = 1.0;  // population convention; 0 means centered pass-through
  double margin = 1.25;

  double half_width() const { return 0.5 * margin; }
};

/// Parses an RFC-4180-style CSV ('.' decimal separator, UTF-8, optional
/// quoted fields). target_column selects by header name, or by zero-based
/// index when no header row or no name matches. Non-numeric cells and
/// non-finite values raise DataError carrying the 1-based line number.
Dataset load_csv(const std::string& path, const std::string& target_column, bool has_header);

Scaler fit_scaler(const Dataset& train, double margin = 1.25);

/// Applies the affine map, clipping to [-U, U]; clipped_count (optional)
/// receives the number of clipped values.
Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::Ref<const Eigen::MatrixXd>& X,
                             std::size_t* clipped_count = nullptr);

/// Centers and scales by the population (1/N) standard deviation; with zero
/// spread the centered values pass through and std is recorded as 0.
std::tuple<Eigen::VectorXd, double, double> standardize_targets(
    const Eigen::Ref<const Eigen::VectorXd>& y);

Eigen::VectorXd destandardize(const Eigen::Ref<const Eigen::VectorXd>& predictions, double mean,
                              double std_dev);

/// Deterministic shuffled split: ceil(fraction * N) training rows, the rest
/// test. Both sides must be nonempty.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed);

}  // namespace tkrr
