#include "tkrr/cpd.hpp"

#include <cmath>
#include <string>

#include "tkrr/errors.hpp"
#include "tkrr/rng.hpp"

namespace tkrr {

CpdWeights CpdWeights::random(int m_hat, int dims, int rank, std::uint64_t seed) {
  if (m_hat < 1 || dims < 1 || rank < 1)
    throw InvalidParameterError("CpdWeights::random: m_hat, dims and rank must be >= 1");
  CpdWeights w;
  w.rank = rank;
  w.factors.reserve(static_cast<std::size_t>(dims));
  Rng rng(seed);
  for (int d = 0; d < dims; ++d) {
    Eigen::MatrixXd factor(m_hat, rank);
    // column-major fill so the draw order matches the storage order
    for (int r = 0; r < rank; ++r) {
      for (int i = 0; i < m_hat; ++i) {
        factor(i, r) = rng.normal();
      }
    }
    factor /= factor.norm();
    w.factors.push_back(std::move(factor));
  }
  return w;
}

void CpdWeights::validate() const {
  if (factors.empty()) throw InvalidParameterError("CpdWeights: no factors");
  if (rank < 1) throw InvalidParameterError("CpdWeights: rank must be >= 1");
  const Eigen::Index rows = factors.front().rows();
  for (const auto& factor : factors) {
    if (factor.rows() != rows || factor.cols() != rank)
      throw InvalidParameterError("CpdWeights: factor shapes disagree");
    if (!factor.allFinite()) throw InvalidParameterError("CpdWeights: non-finite factor entry");
  }
}

Eigen::VectorXd reconstruct_full(const CpdWeights& w, std::size_t max_entries) {
  w.validate();
  const int m_hat = w.m_hat();
  std::size_t total = 1;
  for (int d = 0; d < w.dims(); ++d) {
    if (total > max_entries / static_cast<std::size_t>(m_hat))
      throw CapacityError("reconstruct_full: m_hat^D exceeds the capacity limit of " +
                          std::to_string(max_entries) + " entries");
    total *= static_cast<std::size_t>(m_hat);
  }
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  for (int r = 0; r < w.rank; ++r) {
    // expand the rank-1 term mode by mode, keeping earlier modes fastest
    Eigen::VectorXd term = w.factors[0].col(r);
    for (int d = 1; d < w.dims(); ++d) {
      const Eigen::VectorXd& mode = w.factors[static_cast<std::size_t>(d)].col(r);
      Eigen::VectorXd next(term.size() * mode.size());
      for (Eigen::Index j = 0; j < mode.size(); ++j) {
        next.segment(j * term.size(), term.size()) = term * mode(j);
      }
      term = std::move(next);
    }
    dense += term;
  }
  return dense;
}

double inner_with_rank1(const CpdWeights& w, const std::vector<Eigen::VectorXd>& z_list) {
  if (static_cast<int>(z_list.size()) != w.dims())
    throw InvalidParameterError("inner_with_rank1: expected " + std::to_string(w.dims()) +
                                " mode vectors, got " + std::to_string(z_list.size()));
  Eigen::RowVectorXd products = Eigen::RowVectorXd::Ones(w.rank);
  for (int d = 0; d < w.dims(); ++d) {
    const auto& z = z_list[static_cast<std::size_t>(d)];
    if (z.size() != w.factors[static_cast<std::size_t>(d)].rows())
      throw InvalidParameterError("inner_with_rank1: mode vector length mismatch at dimension " +
                                  std::to_string(d));
    products = products.cwiseProduct(z.transpose() * w.factors[static_cast<std::size_t>(d)]);
  }
  return products.sum();
}

std::vector<Eigen::MatrixXd> factor_grams(const CpdWeights& w) {
  std::vector<Eigen::MatrixXd> grams;
  grams.reserve(w.factors.size());
  for (const auto& factor : w.factors) {
    grams.push_back(factor.transpose() * factor);
  }
  return grams;
}

double frob_norm_sq(const CpdWeights& w) {
  Eigen::MatrixXd hadamard = Eigen::MatrixXd::Ones(w.rank, w.rank);
  for (const auto& factor : w.factors) {
    hadamard = hadamard.cwiseProduct(factor.transpose() * factor);
  }
  return hadamard.sum();
}

void equilibrate_columns(CpdWeights& w) {
  const int dims = w.dims();
  for (int r = 0; r < w.rank; ++r) {
    double log_product = 0.0;
    bool degenerate = false;
    for (int d = 0; d < dims; ++d) {
      const double norm = w.factors[static_cast<std::size_t>(d)].col(r).norm();
      if (norm == 0.0) {
        degenerate = true;
        break;
      }
      log_product += std::log(norm);
    }
    if (degenerate) continue;
    const double target = std::exp(log_product / dims);
    for (int d = 0; d < dims; ++d) {
      auto column = w.factors[static_cast<std::size_t>(d)].col(r);
      column *= target / column.norm();
    }
  }
}

}  // namespace tkrr
