#include "tkrr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tkrr/errors.hpp"

namespace tkrr {

namespace {

constexpr int kMaxSolveAttempts = 7;
constexpr double kMaxJitter = 1e-4;
constexpr Eigen::Index kStreamBlockRows = 4096;

// Entrywise product of projections[k] over k != dim (all-ones for D = 1).
Eigen::MatrixXd leave_one_out_products(const std::vector<Eigen::MatrixXd>& projections, int dim) {
  const Eigen::Index n = projections[0].rows();
  const Eigen::Index rank = projections[0].cols();
  Eigen::MatrixXd q = Eigen::MatrixXd::Ones(n, rank);
  for (int k = 0; k < static_cast<int>(projections.size()); ++k) {
    if (k == dim) continue;
    q = q.cwiseProduct(projections[static_cast<std::size_t>(k)]);
  }
  return q;
}

// Adds this batch's contribution to the upper blocks of A = sum g g^T and to
// b_mat (the m_hat x rank matricization of b = sum y g). Block (r, p) of A is
// Z^T diag(q_r .* q_p) Z, which avoids materializing the N x (m_hat R) rows.
void accumulate_normal_equations(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                 const Eigen::Ref<const Eigen::MatrixXd>& q,
                                 const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::MatrixXd& a,
                                 Eigen::MatrixXd& b_mat, Eigen::MatrixXd& scratch) {
  const Eigen::Index m = z.cols();
  const Eigen::Index rank = q.cols();
  for (Eigen::Index r = 0; r < rank; ++r) {
    for (Eigen::Index p = r; p < rank; ++p) {
      scratch = (z.array().colwise() * (q.col(r).array() * q.col(p).array())).matrix();
      a.block(r * m, p * m, m, m).noalias() += z.transpose() * scratch;
    }
  }
  b_mat.noalias() += z.transpose() * (q.array().colwise() * y.array()).matrix();
}

void mirror_lower_blocks(Eigen::MatrixXd& a, Eigen::Index m, Eigen::Index rank) {
  for (Eigen::Index r = 0; r < rank; ++r) {
    for (Eigen::Index p = r + 1; p < rank; ++p) {
      a.block(p * m, r * m, m, m) = a.block(r * m, p * m, m, m).transpose();
    }
  }
}

// Solves (A + lambda*(H (x) I) + jitter*I) v = b with geometric jitter
// escalation, returning v reshaped column-major into an m x rank factor.
Eigen::MatrixXd solve_regularized_system(Eigen::MatrixXd system,
                                         const Eigen::Ref<const Eigen::VectorXd>& rhs,
                                         const Eigen::MatrixXd& regularizer, double lambda,
                                         double jitter, Eigen::Index m, Eigen::Index rank) {
  for (Eigen::Index r = 0; r < rank; ++r) {
    for (Eigen::Index p = 0; p < rank; ++p) {
      if (lambda != 0.0 && regularizer(r, p) != 0.0)
        system.block(r * m, p * m, m, m).diagonal().array() += lambda * regularizer(r, p);
    }
  }
  const double rhs_norm = rhs.norm();
  double applied = 0.0;
  double attempt_jitter = jitter;
  for (int attempt = 0; attempt < kMaxSolveAttempts; ++attempt) {
    system.diagonal().array() += attempt_jitter - applied;
    applied = attempt_jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd v = llt.solve(rhs);
      const double residual = (system * v - rhs).norm();
      const bool acceptable =
          v.allFinite() && (rhs_norm == 0.0 ? residual <= 1e-12 : residual <= 1e-6 * rhs_norm);
      if (acceptable) {
        return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, rank);
      }
    }
    if (attempt_jitter >= kMaxJitter) break;
    attempt_jitter = std::min(attempt_jitter <= 0.0 ? 1e-10 : attempt_jitter * 10.0, kMaxJitter);
  }
  throw NumericalError("solve_factor: normal equations not solvable, attempted jitter up to " +
                           std::to_string(applied),
                       applied);
}

Eigen::MatrixXd hadamard_except(const std::vector<Eigen::MatrixXd>& grams, int dim, int rank) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(rank, rank);
  for (int k = 0; k < static_cast<int>(grams.size()); ++k) {
    if (k == dim) continue;
    h = h.cwiseProduct(grams[static_cast<std::size_t>(k)]);
  }
  return h;
}

std::vector<int> sweep_order(int dims) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(2 * dims - 1));
  for (int d = 0; d < dims; ++d) order.push_back(d);
  for (int d = dims - 2; d >= 0; --d) order.push_back(d);
  return order;
}

double regularization_value(const std::vector<Eigen::MatrixXd>& grams, int rank) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(rank, rank);
  for (const auto& gram : grams) h = h.cwiseProduct(gram);
  return h.sum();
}

TrainResult train_streaming(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const FeatureConfig& feature_cfg, const TrainConfig& cfg) {
  const Eigen::Index n = inputs.rows();
  const int dims = feature_cfg.dims;
  const Eigen::Index m = cfg.m_hat;
  const Eigen::Index rank = cfg.rank;

  CpdWeights weights = CpdWeights::random(cfg.m_hat, dims, cfg.rank, cfg.seed);
  std::vector<Eigen::MatrixXd> grams = factor_grams(weights);
  std::vector<double> trace;

  Eigen::MatrixXd a(m * rank, m * rank);
  Eigen::MatrixXd b_mat(m, rank);
  Eigen::MatrixXd scratch;

  auto streamed_objective = [&]() {
    double sse = 0.0;
    for (Eigen::Index start = 0; start < n; start += kStreamBlockRows) {
      const Eigen::Index rows = std::min(kStreamBlockRows, n - start);
      Eigen::MatrixXd outputs = Eigen::MatrixXd::Ones(rows, rank);
      for (int k = 0; k < dims; ++k) {
        outputs = outputs.cwiseProduct(
            feature_matrix(inputs.col(k).segment(start, rows), k, feature_cfg) *
            weights.factors[static_cast<std::size_t>(k)]);
      }
      sse += (y.segment(start, rows) - outputs.rowwise().sum()).squaredNorm();
    }
    return sse + cfg.lambda * regularization_value(grams, cfg.rank);
  };

  const std::vector<int> order = sweep_order(dims);
  for (int s = 0; s < cfg.sweeps; ++s) {
    for (int dim : order) {
      a.setZero();
      b_mat.setZero();
      for (Eigen::Index start = 0; start < n; start += kStreamBlockRows) {
        const Eigen::Index rows = std::min(kStreamBlockRows, n - start);
        Eigen::MatrixXd z_dim;
        Eigen::MatrixXd q = Eigen::MatrixXd::Ones(rows, rank);
        for (int k = 0; k < dims; ++k) {
          Eigen::MatrixXd z = feature_matrix(inputs.col(k).segment(start, rows), k, feature_cfg);
          if (k == dim) {
            z_dim = std::move(z);
          } else {
            q = q.cwiseProduct(z * weights.factors[static_cast<std::size_t>(k)]);
          }
        }
        accumulate_normal_equations(z_dim, q, y.segment(start, rows), a, b_mat, scratch);
      }
      mirror_lower_blocks(a, m, rank);
      Eigen::MatrixXd h = hadamard_except(grams, dim, cfg.rank);
      if (cfg.reg_mode == RegMode::diagonal_only) {
        h = h.diagonal().asDiagonal();
      }
      const Eigen::Map<const Eigen::VectorXd> rhs(b_mat.data(), m * rank);
      Eigen::MatrixXd factor =
          solve_regularized_system(a, rhs, h, cfg.lambda, cfg.jitter, m, rank);
      weights.factors[static_cast<std::size_t>(dim)] = factor;
      grams[static_cast<std::size_t>(dim)] = factor.transpose() * factor;
      if (cfg.capture_trace) trace.push_back(streamed_objective());
    }
    if (cfg.equilibrate) {
      equilibrate_columns(weights);
      grams = factor_grams(weights);
    }
  }
  return {std::move(weights), std::move(trace)};
}

}  // namespace

void TrainConfig::validate() const {
  if (m_hat < 1) throw InvalidParameterError("TrainConfig: m_hat must be >= 1");
  if (rank < 1) throw InvalidParameterError("TrainConfig: rank must be >= 1");
  if (!(lambda >= 0.0)) throw InvalidParameterError("TrainConfig: lambda must be >= 0");
  if (sweeps < 1) throw InvalidParameterError("TrainConfig: sweeps must be >= 1");
  if (!(jitter >= 0.0)) throw InvalidParameterError("TrainConfig: jitter must be >= 0");
}

AlsState als_init(const std::vector<Eigen::MatrixXd>& features, const TrainConfig& cfg) {
  cfg.validate();
  if (features.empty()) throw InvalidParameterError("als_init: no feature matrices");
  const int dims = static_cast<int>(features.size());
  AlsState state;
  state.weights = CpdWeights::random(cfg.m_hat, dims, cfg.rank, cfg.seed);
  state.projections.reserve(features.size());
  state.grams.reserve(features.size());
  for (int d = 0; d < dims; ++d) {
    if (features[static_cast<std::size_t>(d)].cols() != cfg.m_hat)
      throw InvalidParameterError("als_init: feature matrix column count != m_hat");
    state.projections.push_back(features[static_cast<std::size_t>(d)] *
                                state.weights.factors[static_cast<std::size_t>(d)]);
    state.grams.push_back(state.weights.factors[static_cast<std::size_t>(d)].transpose() *
                          state.weights.factors[static_cast<std::size_t>(d)]);
  }
  return state;
}

double objective(const AlsState& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                 double lambda) {
  const Eigen::Index n = state.projections[0].rows();
  const int rank = state.weights.rank;
  Eigen::MatrixXd outputs = Eigen::MatrixXd::Ones(n, rank);
  for (const auto& projection : state.projections) {
    outputs = outputs.cwiseProduct(projection);
  }
  const double sse = (y - outputs.rowwise().sum()).squaredNorm();
  return sse + lambda * regularization_value(state.grams, rank);
}

Eigen::VectorXd build_g_row(int dim, int row, const AlsState& state,
                            const Eigen::Ref<const Eigen::VectorXd>& z_row) {
  const int rank = state.weights.rank;
  const Eigen::Index m = z_row.size();
  Eigen::RowVectorXd q = Eigen::RowVectorXd::Ones(rank);
  for (int k = 0; k < state.weights.dims(); ++k) {
    if (k == dim) continue;
    q = q.cwiseProduct(state.projections[static_cast<std::size_t>(k)].row(row));
  }
  Eigen::VectorXd g(m * rank);
  for (int r = 0; r < rank; ++r) {
    g.segment(r * m, m) = z_row * q(r);
  }
  return g;
}

Eigen::MatrixXd build_regularizer(int dim, const AlsState& state, RegMode reg_mode) {
  Eigen::MatrixXd h = hadamard_except(state.grams, dim, state.weights.rank);
  if (reg_mode == RegMode::diagonal_only) {
    return Eigen::MatrixXd(h.diagonal().asDiagonal());
  }
  return h;
}

Eigen::MatrixXd solve_factor(int dim, const AlsState& state,
                             const Eigen::Ref<const Eigen::MatrixXd>& features_dim,
                             const Eigen::Ref<const Eigen::VectorXd>& y, double lambda,
                             RegMode reg_mode, double jitter) {
  const Eigen::Index m = features_dim.cols();
  const Eigen::Index rank = state.weights.rank;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m * rank, m * rank);
  Eigen::MatrixXd b_mat = Eigen::MatrixXd::Zero(m, rank);
  Eigen::MatrixXd scratch;
  const Eigen::MatrixXd q = leave_one_out_products(state.projections, dim);
  accumulate_normal_equations(features_dim, q, y, a, b_mat, scratch);
  mirror_lower_blocks(a, m, rank);
  const Eigen::MatrixXd h = build_regularizer(dim, state, reg_mode);
  const Eigen::Map<const Eigen::VectorXd> rhs(b_mat.data(), m * rank);
  return solve_regularized_system(std::move(a), rhs, h, lambda, jitter, m, rank);
}

void sweep(AlsState& state, const std::vector<Eigen::MatrixXd>& features,
           const Eigen::Ref<const Eigen::VectorXd>& y, const TrainConfig& cfg) {
  for (int dim : sweep_order(state.weights.dims())) {
    Eigen::MatrixXd factor = solve_factor(dim, state, features[static_cast<std::size_t>(dim)], y,
                                          cfg.lambda, cfg.reg_mode, cfg.jitter);
    state.weights.factors[static_cast<std::size_t>(dim)] = factor;
    state.projections[static_cast<std::size_t>(dim)].noalias() =
        features[static_cast<std::size_t>(dim)] * factor;
    state.grams[static_cast<std::size_t>(dim)].noalias() = factor.transpose() * factor;
    if (cfg.capture_trace) state.loss_trace.push_back(objective(state, y, cfg.lambda));
  }
  if (cfg.equilibrate) {
    // leaves the represented tensor (and the objective) unchanged
    equilibrate_columns(state.weights);
    for (int d = 0; d < state.weights.dims(); ++d) {
      state.projections[static_cast<std::size_t>(d)].noalias() =
          features[static_cast<std::size_t>(d)] * state.weights.factors[static_cast<std::size_t>(d)];
      state.grams[static_cast<std::size_t>(d)].noalias() =
          state.weights.factors[static_cast<std::size_t>(d)].transpose() *
          state.weights.factors[static_cast<std::size_t>(d)];
    }
  }
  ++state.sweep_count;
}

TrainResult train(const Eigen::Ref<const Eigen::MatrixXd>& scaled_inputs,
                  const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureConfig& feature_cfg,
                  const TrainConfig& cfg) {
  cfg.validate();
  feature_cfg.validate();
  if (scaled_inputs.rows() == 0) throw InvalidParameterError("train: empty dataset");
  if (scaled_inputs.rows() != y.size())
    throw InvalidParameterError("train: input row count and target length disagree");
  if (scaled_inputs.cols() != feature_cfg.dims)
    throw InvalidParameterError("train: input column count != feature dims");
  if (cfg.m_hat != feature_cfg.m_hat)
    throw InvalidParameterError("train: TrainConfig.m_hat != FeatureConfig.m_hat");

  if (cfg.memory_mode == MemoryMode::streaming) {
    return train_streaming(scaled_inputs, y, feature_cfg, cfg);
  }

  std::vector<Eigen::MatrixXd> features;
  features.reserve(static_cast<std::size_t>(feature_cfg.dims));
  for (int d = 0; d < feature_cfg.dims; ++d) {
    features.push_back(feature_matrix(scaled_inputs.col(d), d, feature_cfg));
  }
  AlsState state = als_init(features, cfg);
  for (int s = 0; s < cfg.sweeps; ++s) {
    sweep(state, features, y, cfg);
  }
  return {std::move(state.weights), std::move(state.loss_trace)};
}

}  // namespace tkrr
