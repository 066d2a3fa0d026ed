#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tkrr {

/// Weight tensor in rank-R canonical polyadic form: D factor matrices of
/// shape m_hat x rank whose columns are the rank-1 mode vectors. Any scaling
/// vector is absorbed into the factors. Treated as an immutable value after
/// construction; mutation happens by replacement.
struct CpdWeights {
  std::vector<Eigen::MatrixXd> factors;
  int rank = 0;

  int dims() const { return static_cast<int>(factors.size()); }
  int m_hat() const { return factors.empty() ? 0 : static_cast<int>(factors.front().rows()); }

  /// Factors filled with standard normal entries, each normalized to unit
  /// Frobenius norm; a pure function of the seed.
  static CpdWeights random(int m_hat, int dims, int rank, std::uint64_t seed);

  void validate() const;  // shared shapes, finite entries
};

/// Dense reconstruction as a column-major vectorized tensor (first mode index
/// fastest): entry (i_1,...,i_D) = sum_r prod_d factors[d](i_d, r).
/// Guarded by max_entries because the size m_hat^D grows exponentially.
Eigen::VectorXd reconstruct_full(const CpdWeights& w, std::size_t max_entries = 1000000);

/// Frobenius inner product of the weight tensor with the rank-1 tensor
/// z_1 (x) ... (x) z_D, computed in O(D * m_hat * rank):
/// sum_r prod_d <z_d, w_r^(d)>. This is the model evaluation f(x).
double inner_with_rank1(const CpdWeights& w, const std::vector<Eigen::VectorXd>& z_list);

/// Per-mode Gram matrices W^(d)^T W^(d), each rank x rank symmetric PSD.
std::vector<Eigen::MatrixXd> factor_grams(const CpdWeights& w);

/// Squared Frobenius norm of the represented tensor via the entrywise
/// (Hadamard) product of all D factor Grams, summed over entries.
double frob_norm_sq(const CpdWeights& w);

/// Numerical equilibration: rescales the columns of each rank-1 component so
/// every factor carries the same column norm (the geometric mean of the
/// current norms), leaving the represented tensor unchanged. Components with
/// a zero column are left alone.
void equilibrate_columns(CpdWeights& w);

}  // namespace tkrr
