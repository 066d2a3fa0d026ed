#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tkrr {

/// Configuration of the deterministic tensor-product Fourier basis.
///
/// Each input dimension d carries m_hat sinusoidal basis functions on the
/// interval [-half_widths[d], half_widths[d]]; inputs must be scaled into
/// that box before any feature evaluation.
struct FeatureConfig {
  int m_hat = 1;                    // basis functions per dimension
  double lengthscale = 1.0;         // Gaussian-kernel bandwidth, in scaled-input units
  std::vector<double> half_widths;  // one per dimension, all positive
  int dims = 1;

  void validate() const;  // throws InvalidParameterError on a broken invariant
};

/// Spectral density of the one-dimensional Gaussian kernel:
/// p(omega) = l * sqrt(2*pi) * exp(-l^2 * omega^2 / 2).
double spectral_density_gauss(double omega, double lengthscale);

/// One-dimensional basis evaluation on [-U, U] (Dirichlet sinusoids on the
/// harmonic scale omega_i = pi*i/(2U), weighted by sqrt of the spectral
/// density). Entry i (1-based):
///   sqrt(p(pi*i/(2U))) * sin(pi*i*(x+U)/(2U)) / sqrt(U).
/// The vector vanishes identically at x = -U and x = +U.
Eigen::VectorXd hilbert_feature(double x, double half_width, const FeatureConfig& cfg);

/// Batched hilbert_feature over one input column; row n is the feature vector
/// of column[n] for dimension dim.
Eigen::MatrixXd feature_matrix(const Eigen::Ref<const Eigen::VectorXd>& column, int dim,
                               const FeatureConfig& cfg);

/// Product-kernel approximation: the product over dimensions of the
/// one-dimensional feature inner products. Equals the Frobenius inner product
/// of the two full feature tensors without materializing them.
double product_kernel_approx(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& x2,
                             const FeatureConfig& cfg);

/// Random Fourier feature map parameters. Frequencies are Gaussian with
/// per-coordinate standard deviation 1/lengthscale, phases uniform on
/// [0, 2*pi); both are a pure function of the seed.
struct RFFConfig {
  int m_total = 1;
  double lengthscale = 1.0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd frequencies;  // m_total x dims
  Eigen::VectorXd phases;       // m_total

  static RFFConfig create(int m_total, int dims, double lengthscale, std::uint64_t seed);
};

/// Feature entry m: sqrt(2/M) * cos(<omega_m, x> + b_m).
Eigen::VectorXd rff_map(const Eigen::Ref<const Eigen::VectorXd>& x, const RFFConfig& cfg);

/// Row-batched rff_map.
Eigen::MatrixXd rff_matrix(const Eigen::Ref<const Eigen::MatrixXd>& X, const RFFConfig& cfg);

/// One row of the kernel-approximation benchmark.
struct KernelBenchRow {
  int m_hat = 0;
  double sup_error = 0.0;
  double mean_error = 0.0;
};

/// Sup and mean absolute deviation between the feature-induced kernel and the
/// exact Gaussian kernel over a uniform grid_size x grid_size grid of pairs
/// drawn from [-data_range, data_range], for each basis count in m_hats.
std::vector<KernelBenchRow> kernel_approx_bench(double lengthscale, double half_width,
                                                const std::vector<int>& m_hats, int grid_size,
                                                double data_range);

}  // namespace tkrr
