#pragma once

// Dense loop oracles for the solver subproblem, independent of the library's
// blockwise assembly: design matrix rows, Kronecker regularizer, dense
// normal-equations solve and the dense-tensor objective.

#include <Eigen/Dense>
#include <vector>

#include "test_helpers.hpp"
#include "tkrr/solver.hpp"

namespace test_util {

struct Instance {
  std::vector<Eigen::MatrixXd> features;  // D matrices, N x m_hat
  Eigen::VectorXd y;
  tkrr::TrainConfig cfg;
};

inline Instance random_instance(Eigen::Index n, int dims, int m_hat, int rank, tkrr::Rng& rng,
                                double lambda = 1e-3) {
  Instance inst;
  for (int d = 0; d < dims; ++d) {
    inst.features.push_back(random_matrix(n, m_hat, rng));
  }
  inst.y = random_vector(n, rng);
  inst.cfg.m_hat = m_hat;
  inst.cfg.rank = rank;
  inst.cfg.lambda = lambda;
  inst.cfg.reg_mode = tkrr::RegMode::full_hadamard;
  inst.cfg.seed = rng.below(1u << 30);
  return inst;
}

inline Eigen::MatrixXd oracle_leave_one_out(const tkrr::AlsState& state,
                                            const std::vector<Eigen::MatrixXd>& features,
                                            int dim) {
  const Eigen::Index n = features[0].rows();
  const int rank = state.weights.rank;
  Eigen::MatrixXd q = Eigen::MatrixXd::Ones(n, rank);
  for (int k = 0; k < static_cast<int>(features.size()); ++k) {
    if (k == dim) continue;
    const Eigen::MatrixXd proj =
        features[static_cast<std::size_t>(k)] * state.weights.factors[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int r = 0; r < rank; ++r) q(i, r) *= proj(i, r);
    }
  }
  return q;
}

inline Eigen::MatrixXd oracle_design_matrix(const tkrr::AlsState& state,
                                            const std::vector<Eigen::MatrixXd>& features,
                                            int dim) {
  const Eigen::MatrixXd& z = features[static_cast<std::size_t>(dim)];
  const Eigen::MatrixXd q = oracle_leave_one_out(state, features, dim);
  const Eigen::Index n = z.rows();
  const Eigen::Index m = z.cols();
  const int rank = state.weights.rank;
  Eigen::MatrixXd g(n, m * rank);
  for (Eigen::Index row = 0; row < n; ++row) {
    for (int r = 0; r < rank; ++r) {
      for (Eigen::Index i = 0; i < m; ++i) g(row, i + r * m) = z(row, i) * q(row, r);
    }
  }
  return g;
}

inline Eigen::MatrixXd oracle_regularizer(const tkrr::AlsState& state, int dim,
                                          tkrr::RegMode mode) {
  const int rank = state.weights.rank;
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(rank, rank);
  for (int k = 0; k < state.weights.dims(); ++k) {
    if (k == dim) continue;
    const auto& factor = state.weights.factors[static_cast<std::size_t>(k)];
    for (int r = 0; r < rank; ++r) {
      for (int p = 0; p < rank; ++p) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < factor.rows(); ++i) acc += factor(i, r) * factor(i, p);
        h(r, p) *= acc;
      }
    }
  }
  if (mode == tkrr::RegMode::diagonal_only) {
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(rank, rank);
    diag.diagonal() = h.diagonal();
    return diag;
  }
  return h;
}

inline Eigen::MatrixXd oracle_kron_with_identity(const Eigen::MatrixXd& h, Eigen::Index m) {
  const Eigen::Index rank = h.rows();
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(rank * m, rank * m);
  for (Eigen::Index r = 0; r < rank; ++r) {
    for (Eigen::Index p = 0; p < rank; ++p) {
      for (Eigen::Index i = 0; i < m; ++i) kron(r * m + i, p * m + i) = h(r, p);
    }
  }
  return kron;
}

inline Eigen::MatrixXd oracle_solve_factor(const tkrr::AlsState& state,
                                           const std::vector<Eigen::MatrixXd>& features, int dim,
                                           const Eigen::VectorXd& y, double lambda,
                                           tkrr::RegMode mode, double jitter) {
  const Eigen::MatrixXd g = oracle_design_matrix(state, features, dim);
  const Eigen::MatrixXd h = oracle_regularizer(state, dim, mode);
  const Eigen::Index m = features[static_cast<std::size_t>(dim)].cols();
  Eigen::MatrixXd system = g.transpose() * g + lambda * oracle_kron_with_identity(h, m);
  system.diagonal().array() += jitter;
  const Eigen::VectorXd v = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(system).solve(
      Eigen::VectorXd(g.transpose() * y));
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, state.weights.rank);
}

inline double oracle_objective(const tkrr::AlsState& state,
                               const std::vector<Eigen::MatrixXd>& features,
                               const Eigen::VectorXd& y, double lambda) {
  const Eigen::VectorXd dense_w = dense_weight_tensor(state.weights);
  double sse = 0.0;
  for (Eigen::Index row = 0; row < y.size(); ++row) {
    std::vector<Eigen::VectorXd> z;
    for (const auto& feature : features) z.push_back(feature.row(row).transpose());
    const double f = dense_w.dot(dense_rank1_tensor(z));
    sse += (y(row) - f) * (y(row) - f);
  }
  return sse + lambda * dense_w.squaredNorm();
}

}  // namespace test_util
