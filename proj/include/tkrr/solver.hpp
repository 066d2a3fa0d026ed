#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tkrr/cpd.hpp"
#include "tkrr/features.hpp"

namespace tkrr {

/// Regularizer assembly mode for the per-factor subproblem. full_hadamard is
/// the exact entrywise product of the other modes' Grams and gives monotone
/// descent; diagonal_only keeps just its diagonal, trading strict monotonicity
/// for speed.
enum class RegMode { full_hadamard, diagonal_only };

/// cached keeps all per-dimension feature matrices in memory (O(N*D*m_hat));
/// streaming recomputes feature rows blockwise so storage stays independent
/// of the sample count.
enum class MemoryMode { cached, streaming };

struct TrainConfig {
  int m_hat = 10;
  int rank = 8;
  double lambda = 1e-5;
  int sweeps = 10;
  RegMode reg_mode = RegMode::diagonal_only;
  std::uint64_t seed = 0;
  double jitter = 1e-10;
  bool capture_trace = true;
  MemoryMode memory_mode = MemoryMode::cached;
  bool equilibrate = false;  // rebalance component norms across factors after each sweep

  void validate() const;
};

/// Solver state for the cached path. Invariants maintained after every
/// factor update:
///   projections[d] == features[d] * weights.factors[d]
///   grams[d]       == weights.factors[d]^T * weights.factors[d]
/// loss_trace holds one objective value per factor update.
struct AlsState {
  CpdWeights weights;
  std::vector<Eigen::MatrixXd> projections;  // D matrices, N x rank
  std::vector<Eigen::MatrixXd> grams;        // D matrices, rank x rank
  std::vector<double> loss_trace;
  int sweep_count = 0;
};

/// Fresh state: random factors from cfg.seed plus coherent caches.
AlsState als_init(const std::vector<Eigen::MatrixXd>& features, const TrainConfig& cfg);

/// Regularized squared loss sum_n (y_n - f(x_n))^2 + lambda * <W, W>_F,
/// evaluated from the caches alone (row-wise products of the projections; no
/// dense tensors).
double objective(const AlsState& state, const Eigen::Ref<const Eigen::VectorXd>& y, double lambda);

/// The linearization row g for sample `row` and unknown factor `dim`:
/// entry (i + r*m_hat) = z_row(i) * prod_{k != dim} projections[k](row, r),
/// so that <vec(W^(dim)), g> equals the model output f(x_row).
Eigen::VectorXd build_g_row(int dim, int row, const AlsState& state,
                            const Eigen::Ref<const Eigen::VectorXd>& z_row);

/// Regularizer H^(dim): entrywise product of grams[k] over k != dim
/// (full_hadamard), or its diagonal as a diagonal matrix (diagonal_only).
Eigen::MatrixXd build_regularizer(int dim, const AlsState& state, RegMode reg_mode);

/// Solves the factor subproblem
///   (A + lambda*(H (x) I) + jitter*I) vec(W) = b,
/// A = sum_n g_n g_n^T and b = sum_n y_n g_n, assembled blockwise in
/// O(N m_hat^2 R^2) without forming the N x (m_hat R) design matrix. On a
/// failed factorization the jitter escalates geometrically (x10, capped at
/// 1e-4, at most 7 attempts) before a NumericalError carrying the attempted
/// jitter. The result is the new m_hat x rank factor (column-major unpacking
/// of vec(W), matching build_g_row's index order).
Eigen::MatrixXd solve_factor(int dim, const AlsState& state,
                             const Eigen::Ref<const Eigen::MatrixXd>& features_dim,
                             const Eigen::Ref<const Eigen::VectorXd>& y, double lambda,
                             RegMode reg_mode, double jitter);

/// One sweep: factor updates in the order 1..D then D-1..1 (2D-1 updates;
/// the turn-around mode is not re-solved twice in a row). Caches are
/// refreshed after each update and one loss value is appended per update
/// when cfg.capture_trace.
void sweep(AlsState& state, const std::vector<Eigen::MatrixXd>& features,
           const Eigen::Ref<const Eigen::VectorXd>& y, const TrainConfig& cfg);

struct TrainResult {
  CpdWeights weights;
  std::vector<double> loss_trace;
};

/// Full training run: cfg.sweeps sweeps from the seeded random init.
/// scaled_inputs must already live in the feature domain and y must be
/// standardized (regression) or in {-1, +1} (classification). Deterministic
/// given (inputs, y, cfg).
TrainResult train(const Eigen::Ref<const Eigen::MatrixXd>& scaled_inputs,
                  const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureConfig& feature_cfg,
                  const TrainConfig& cfg);

}  // namespace tkrr
