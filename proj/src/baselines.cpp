#include "tkrr/baselines.hpp"

#include <cmath>
#include <string>

#include "tkrr/errors.hpp"

namespace tkrr {

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& x2, const KernelParams& params) {
  if (x.size() != x2.size())
    throw InvalidParameterError("gaussian_kernel: point dimensions disagree");
  if (!(params.lengthscale > 0.0))
    throw InvalidParameterError("gaussian_kernel: lengthscale must be positive");
  const double sq = (x - x2).squaredNorm();
  return std::exp(-sq / (2.0 * params.lengthscale * params.lengthscale));
}

Eigen::MatrixXd gaussian_gram(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const KernelParams& params) {
  if (!(params.lengthscale > 0.0))
    throw InvalidParameterError("gaussian_gram: lengthscale must be positive");
  const Eigen::Index n = X.rows();
  const Eigen::VectorXd sq_norms = X.rowwise().squaredNorm();
  Eigen::MatrixXd gram = -2.0 * (X * X.transpose());
  gram.colwise() += sq_norms;
  gram.rowwise() += sq_norms.transpose();
  const double inv = -1.0 / (2.0 * params.lengthscale * params.lengthscale);
  gram = (gram.array().max(0.0) * inv).exp().matrix();
  for (Eigen::Index i = 0; i < n; ++i) gram(i, i) = 1.0;
  return gram;
}

Eigen::VectorXd krr_dual_fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y,
                             const KernelParams& params, double lambda, Eigen::Index max_rows) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw InvalidParameterError("krr_dual_fit: empty training set");
  if (n != y.size()) throw InvalidParameterError("krr_dual_fit: row count and target length disagree");
  if (n > max_rows)
    throw CapacityError("krr_dual_fit: N = " + std::to_string(n) + " exceeds the dual cap of " +
                        std::to_string(max_rows));
  Eigen::MatrixXd system = gaussian_gram(X, params);
  system.diagonal().array() += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("krr_dual_fit: Gram factorization failed");
  Eigen::VectorXd alpha = ldlt.solve(y);
  const double residual = (system * alpha - y).norm();
  if (!alpha.allFinite() || residual > 1e-6 * std::max(y.norm(), 1e-300))
    throw NumericalError("krr_dual_fit: Gram solve did not converge (singular system?)");
  return alpha;
}

Eigen::VectorXd krr_dual_predict(const Eigen::Ref<const Eigen::MatrixXd>& X_train,
                                 const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                 const KernelParams& params,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X_test) {
  if (X_train.rows() != alpha.size())
    throw InvalidParameterError("krr_dual_predict: alpha length != training rows");
  if (X_train.cols() != X_test.cols())
    throw InvalidParameterError("krr_dual_predict: train/test dimensions disagree");
  Eigen::VectorXd out(X_test.rows());
  for (Eigen::Index i = 0; i < X_test.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < X_train.rows(); ++n) {
      acc += alpha(n) * gaussian_kernel(X_test.row(i), X_train.row(n), params);
    }
    out(i) = acc;
  }
  return out;
}

Eigen::VectorXd primal_ridge_fit(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                 const Eigen::Ref<const Eigen::VectorXd>& y, double lambda) {
  if (phi.rows() != y.size())
    throw InvalidParameterError("primal_ridge_fit: row count and target length disagree");
  if (!phi.allFinite()) throw InvalidParameterError("primal_ridge_fit: non-finite feature entry");
  Eigen::MatrixXd system = phi.transpose() * phi;
  system.diagonal().array() += lambda;
  Eigen::VectorXd rhs = phi.transpose() * y;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("primal_ridge_fit: normal-equations factorization failed");
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (!(pivots.maxCoeff() > 0.0) || pivots.minCoeff() <= pivots.maxCoeff() * 1e-14)
    throw NumericalError("primal_ridge_fit: singular normal equations (lambda too small?)");
  Eigen::VectorXd w = ldlt.solve(rhs);
  const double rhs_norm = rhs.norm();
  const double residual = (system * w - rhs).norm();
  const bool acceptable =
      w.allFinite() && (rhs_norm == 0.0 ? residual <= 1e-12 : residual <= 1e-6 * rhs_norm);
  if (!acceptable)
    throw NumericalError("primal_ridge_fit: singular system (lambda too small?)");
  return w;
}

Eigen::MatrixXd full_tensor_features(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const FeatureConfig& cfg, std::size_t max_columns) {
  cfg.validate();
  if (X.cols() != cfg.dims)
    throw InvalidParameterError("full_tensor_features: column count != feature dims");
  std::size_t total = 1;
  for (int d = 0; d < cfg.dims; ++d) {
    if (total > max_columns / static_cast<std::size_t>(cfg.m_hat))
      throw CapacityError("full_tensor_features: m_hat^D exceeds the capacity limit of " +
                          std::to_string(max_columns) + " columns");
    total *= static_cast<std::size_t>(cfg.m_hat);
  }
  Eigen::MatrixXd phi(X.rows(), static_cast<Eigen::Index>(total));
  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    Eigen::VectorXd row = hilbert_feature(X(n, 0), cfg.half_widths[0], cfg);
    for (int d = 1; d < cfg.dims; ++d) {
      const Eigen::VectorXd z =
          hilbert_feature(X(n, d), cfg.half_widths[static_cast<std::size_t>(d)], cfg);
      Eigen::VectorXd next(row.size() * z.size());
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        next.segment(j * row.size(), row.size()) = row * z(j);
      }
      row = std::move(next);
    }
    phi.row(n) = row.transpose();
  }
  return phi;
}

}  // namespace tkrr
