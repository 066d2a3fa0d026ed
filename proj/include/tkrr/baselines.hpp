#pragma once

#include <Eigen/Dense>

#include "tkrr/features.hpp"

namespace tkrr {

struct KernelParams {
  double lengthscale = 1.0;  // > 0
};

/// Exact Gaussian kernel exp(-||x - x2||^2 / (2 l^2)).
double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& x2, const KernelParams& params);

/// Dense Gram matrix of a point set (rows of X).
Eigen::MatrixXd gaussian_gram(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const KernelParams& params);

/// Dual kernel ridge regression: alpha = (K + lambda I)^{-1} y. Capped at
/// max_rows because the Gram solve is the oracle/baseline path, not a
/// production one.
Eigen::VectorXd krr_dual_fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y,
                             const KernelParams& params, double lambda,
                             Eigen::Index max_rows = 10000);

/// Predictions sum_n alpha_n k(x, x_n) at the rows of X_test.
Eigen::VectorXd krr_dual_predict(const Eigen::Ref<const Eigen::MatrixXd>& X_train,
                                 const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                 const KernelParams& params,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X_test);

/// Primal ridge regression on an explicit feature matrix:
/// solves (Phi^T Phi + lambda I) w = Phi^T y.
Eigen::VectorXd primal_ridge_fit(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                 const Eigen::Ref<const Eigen::VectorXd>& y, double lambda);

/// Explicit tensor-product features: row n is the column-major vectorization
/// (first mode fastest) of z^(1)(x_n1) (x) ... (x) z^(D)(x_nD), m_hat^D wide.
/// The small-D primal baseline; guarded by max_columns.
Eigen::MatrixXd full_tensor_features(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const FeatureConfig& cfg, std::size_t max_columns = 1000000);

}  // namespace tkrr
