#include "tkrr/features.hpp"

#include <cmath>
#include <string>

#include "tkrr/errors.hpp"
#include "tkrr/rng.hpp"

namespace tkrr {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310002;
}

void FeatureConfig::validate() const {
  if (m_hat < 1) throw InvalidParameterError("FeatureConfig: m_hat must be >= 1");
  if (!(lengthscale > 0.0)) throw InvalidParameterError("FeatureConfig: lengthscale must be positive");
  if (dims < 1) throw InvalidParameterError("FeatureConfig: dims must be >= 1");
  if (static_cast<int>(half_widths.size()) != dims)
    throw InvalidParameterError("FeatureConfig: half_widths size must equal dims");
  for (double u : half_widths) {
    if (!(u > 0.0)) throw InvalidParameterError("FeatureConfig: half_widths must be positive");
  }
}

double spectral_density_gauss(double omega, double lengthscale) {
  if (!(lengthscale > 0.0))
    throw InvalidParameterError("spectral_density_gauss: lengthscale must be positive");
  return lengthscale * kSqrt2Pi * std::exp(-0.5 * lengthscale * lengthscale * omega * omega);
}

Eigen::VectorXd hilbert_feature(double x, double half_width, const FeatureConfig& cfg) {
  if (!(half_width > 0.0))
    throw InvalidParameterError("hilbert_feature: half_width must be positive");
  if (x < -half_width || x > half_width)
    throw DomainViolationError("hilbert_feature: x = " + std::to_string(x) +
                               " outside [-U, U] with U = " + std::to_string(half_width));
  // every sinusoid vanishes at the box boundary; make that exact
  if (x == -half_width || x == half_width) return Eigen::VectorXd::Zero(cfg.m_hat);
  Eigen::VectorXd z(cfg.m_hat);
  const double inv_sqrt_u = 1.0 / std::sqrt(half_width);
  for (int i = 1; i <= cfg.m_hat; ++i) {
    const double omega = M_PI * i / (2.0 * half_width);
    // sqrt(p) underflows for large i at small lengthscale; clamp rounding negatives
    const double density = std::max(spectral_density_gauss(omega, cfg.lengthscale), 0.0);
    z(i - 1) = inv_sqrt_u * std::sqrt(density) * std::sin(omega * (x + half_width));
  }
  return z;
}

Eigen::MatrixXd feature_matrix(const Eigen::Ref<const Eigen::VectorXd>& column, int dim,
                               const FeatureConfig& cfg) {
  if (dim < 0 || dim >= cfg.dims)
    throw InvalidParameterError("feature_matrix: dimension index out of range");
  const double half_width = cfg.half_widths[static_cast<std::size_t>(dim)];
  Eigen::MatrixXd out(column.size(), cfg.m_hat);
  for (Eigen::Index n = 0; n < column.size(); ++n) {
    out.row(n) = hilbert_feature(column(n), half_width, cfg).transpose();
  }
  return out;
}

double product_kernel_approx(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& x2,
                             const FeatureConfig& cfg) {
  if (x.size() != cfg.dims || x2.size() != cfg.dims)
    throw InvalidParameterError("product_kernel_approx: point dimension mismatch");
  double value = 1.0;
  for (int d = 0; d < cfg.dims; ++d) {
    const double u = cfg.half_widths[static_cast<std::size_t>(d)];
    value *= hilbert_feature(x(d), u, cfg).dot(hilbert_feature(x2(d), u, cfg));
  }
  return value;
}

RFFConfig RFFConfig::create(int m_total, int dims, double lengthscale, std::uint64_t seed) {
  if (m_total < 1) throw InvalidParameterError("RFFConfig: m_total must be >= 1");
  if (dims < 1) throw InvalidParameterError("RFFConfig: dims must be >= 1");
  if (!(lengthscale > 0.0)) throw InvalidParameterError("RFFConfig: lengthscale must be positive");
  RFFConfig cfg;
  cfg.m_total = m_total;
  cfg.lengthscale = lengthscale;
  cfg.seed = seed;
  cfg.frequencies.resize(m_total, dims);
  cfg.phases.resize(m_total);
  Rng rng(seed);
  for (int m = 0; m < m_total; ++m) {
    for (int d = 0; d < dims; ++d) {
      cfg.frequencies(m, d) = rng.normal() / lengthscale;
    }
  }
  for (int m = 0; m < m_total; ++m) {
    cfg.phases(m) = 2.0 * M_PI * rng.uniform();
  }
  return cfg;
}

Eigen::VectorXd rff_map(const Eigen::Ref<const Eigen::VectorXd>& x, const RFFConfig& cfg) {
  if (x.size() != cfg.frequencies.cols())
    throw InvalidParameterError("rff_map: point dimension mismatch");
  const double scale = std::sqrt(2.0 / cfg.m_total);
  return (scale * ((cfg.frequencies * x + cfg.phases).array().cos())).matrix();
}

Eigen::MatrixXd rff_matrix(const Eigen::Ref<const Eigen::MatrixXd>& X, const RFFConfig& cfg) {
  if (X.cols() != cfg.frequencies.cols())
    throw InvalidParameterError("rff_matrix: column count mismatch");
  const double scale = std::sqrt(2.0 / cfg.m_total);
  Eigen::MatrixXd phase = (X * cfg.frequencies.transpose()).rowwise() + cfg.phases.transpose();
  return (scale * phase.array().cos()).matrix();
}

std::vector<KernelBenchRow> kernel_approx_bench(double lengthscale, double half_width,
                                                const std::vector<int>& m_hats, int grid_size,
                                                double data_range) {
  if (!(lengthscale > 0.0))
    throw InvalidParameterError("kernel_approx_bench: lengthscale must be positive");
  if (!(half_width > 0.0))
    throw InvalidParameterError("kernel_approx_bench: half_width must be positive");
  if (grid_size < 2) throw InvalidParameterError("kernel_approx_bench: grid_size must be >= 2");
  if (!(data_range > 0.0) || data_range > half_width)
    throw InvalidParameterError("kernel_approx_bench: data_range must lie in (0, half_width]");
  if (m_hats.empty()) throw InvalidParameterError("kernel_approx_bench: m_hat list is empty");

  Eigen::VectorXd xs(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    xs(i) = -data_range + 2.0 * data_range * i / (grid_size - 1);
  }
  Eigen::MatrixXd exact(grid_size, grid_size);
  const double inv_2l2 = 1.0 / (2.0 * lengthscale * lengthscale);
  for (int i = 0; i < grid_size; ++i) {
    for (int j = 0; j < grid_size; ++j) {
      const double diff = xs(i) - xs(j);
      exact(i, j) = std::exp(-diff * diff * inv_2l2);
    }
  }

  std::vector<KernelBenchRow> rows;
  rows.reserve(m_hats.size());
  for (int m : m_hats) {
    if (m < 1) throw InvalidParameterError("kernel_approx_bench: m_hat entries must be >= 1");
    FeatureConfig cfg{m, lengthscale, {half_width}, 1};
    Eigen::MatrixXd z = feature_matrix(xs, 0, cfg);
    Eigen::MatrixXd err = (z * z.transpose() - exact).cwiseAbs();
    rows.push_back({m, err.maxCoeff(), err.mean()});
  }
  return rows;
}

}  // namespace tkrr
