#include <cmath>

#include <doctest.h>

#include "test_helpers.hpp"
#include "tkrr/baselines.hpp"
#include "tkrr/errors.hpp"

using namespace tkrr;

TEST_CASE("gaussian kernel") {
  const KernelParams params{0.8};
  Rng rng(1);
  const Eigen::VectorXd x = test_util::random_vector(4, rng);
  CHECK(gaussian_kernel(x, x, params) == 1.0);

  Eigen::VectorXd shifted = x;
  shifted(1) += params.lengthscale * std::sqrt(2.0);
  CHECK(gaussian_kernel(x, shifted, params) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd a = test_util::random_vector(4, rng);
    const Eigen::VectorXd b = test_util::random_vector(4, rng);
    CHECK(gaussian_kernel(a, b, params) == gaussian_kernel(b, a, params));
    CHECK(gaussian_kernel(a, b, params) > 0.0);
    CHECK(gaussian_kernel(a, b, params) <= 1.0);
  }

  CHECK_THROWS_AS(gaussian_kernel(x, test_util::random_vector(3, rng), params),
                  InvalidParameterError);
}

TEST_CASE("gaussian_gram matches pairwise evaluations and is positive definite") {
  Rng rng(2);
  const KernelParams params{0.9};
  const Eigen::MatrixXd x = test_util::random_matrix(100, 3, rng);
  const Eigen::MatrixXd gram = gaussian_gram(x, params);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng.below(100));
    const Eigen::Index j = static_cast<Eigen::Index>(rng.below(100));
    CHECK(gram(i, j) ==
          doctest::Approx(gaussian_kernel(x.row(i), x.row(j), params)).epsilon(1e-12));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  CHECK(llt.info() == Eigen::Success);  // PD without jitter for distinct points
}

TEST_CASE("krr_dual_fit") {
  const KernelParams params{1.0};
  Rng rng(3);

  SUBCASE("single point") {
    Eigen::MatrixXd x(1, 2);
    x << 0.3, -0.4;
    Eigen::VectorXd y(1);
    y << 2.5;
    const Eigen::VectorXd alpha = krr_dual_fit(x, y, params, 0.25);
    CHECK(alpha(0) == doctest::Approx(2.5 / 1.25).epsilon(1e-12));
  }

  SUBCASE("interpolation at lambda = 0") {
    const Eigen::MatrixXd x = test_util::random_matrix(20, 2, rng);
    const Eigen::VectorXd y = test_util::random_vector(20, rng);
    const Eigen::VectorXd alpha = krr_dual_fit(x, y, params, 0.0);
    const Eigen::VectorXd fitted = gaussian_gram(x, params) * alpha;
    CHECK((fitted - y).cwiseAbs().maxCoeff() <= 1e-6);
  }

  SUBCASE("agrees with a generic solver") {
    const Eigen::MatrixXd x = test_util::random_matrix(50, 3, rng);
    const Eigen::VectorXd y = test_util::random_vector(50, rng);
    const double lambda = 1e-5;
    const Eigen::VectorXd alpha = krr_dual_fit(x, y, params, lambda);
    Eigen::MatrixXd system = gaussian_gram(x, params);
    system.diagonal().array() += lambda;
    const Eigen::VectorXd oracle = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(system).solve(y);
    CHECK((alpha - oracle).norm() <= 1e-8 * oracle.norm());
  }

  SUBCASE("capacity cap") {
    const Eigen::MatrixXd x = test_util::random_matrix(11, 2, rng);
    const Eigen::VectorXd y = test_util::random_vector(11, rng);
    CHECK_THROWS_AS(krr_dual_fit(x, y, params, 1e-3, /*max_rows=*/10), CapacityError);
  }
}

TEST_CASE("krr_dual_predict reproduces training targets for small lambda") {
  const KernelParams params{0.7};
  Rng rng(4);
  const Eigen::MatrixXd x = test_util::random_matrix(25, 2, rng);
  const Eigen::VectorXd y = test_util::random_vector(25, rng);
  const Eigen::VectorXd alpha = krr_dual_fit(x, y, params, 1e-10);
  const Eigen::VectorXd predictions = krr_dual_predict(x, alpha, params, x);
  CHECK((predictions - y).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("primal_ridge_fit") {
  Rng rng(5);

  SUBCASE("identity features reproduce the targets") {
    const Eigen::VectorXd y = test_util::random_vector(6, rng);
    const Eigen::VectorXd w = primal_ridge_fit(Eigen::MatrixXd::Identity(6, 6), y, 0.0);
    CHECK((w - y).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("huge lambda shrinks the weights away") {
    const Eigen::MatrixXd phi = test_util::random_matrix(30, 5, rng);
    const Eigen::VectorXd y = test_util::random_vector(30, rng);
    CHECK(primal_ridge_fit(phi, y, 1e12).norm() <= 1e-6);
  }

  SUBCASE("exactly collinear features at lambda = 0 raise a numerical error") {
    Eigen::MatrixXd phi(10, 2);
    phi.col(0) = test_util::random_vector(10, rng);
    phi.col(1) = phi.col(0);
    const Eigen::VectorXd y = test_util::random_vector(10, rng);
    CHECK_THROWS_AS(primal_ridge_fit(phi, y, 0.0), NumericalError);
  }
}

TEST_CASE("primal and dual solutions agree through the approximate Gram") {
  Rng rng(6);
  FeatureConfig cfg{3, 0.5, {0.7, 0.7}, 2};
  Eigen::MatrixXd x(25, 2);
  for (Eigen::Index i = 0; i < 25; ++i) {
    x(i, 0) = 0.7 * (2.0 * rng.uniform() - 1.0);
    x(i, 1) = 0.7 * (2.0 * rng.uniform() - 1.0);
  }
  const Eigen::VectorXd y = test_util::random_vector(25, rng);
  const double lambda = 1e-3;

  const Eigen::MatrixXd phi = full_tensor_features(x, cfg);
  const Eigen::VectorXd w = primal_ridge_fit(phi, y, lambda);

  Eigen::MatrixXd gram = phi * phi.transpose();
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd alpha = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(y);

  Eigen::MatrixXd probes(8, 2);
  for (Eigen::Index i = 0; i < 8; ++i) {
    probes(i, 0) = 0.7 * (2.0 * rng.uniform() - 1.0);
    probes(i, 1) = 0.7 * (2.0 * rng.uniform() - 1.0);
  }
  const Eigen::MatrixXd phi_probe = full_tensor_features(probes, cfg);
  const Eigen::VectorXd primal_pred = phi_probe * w;
  const Eigen::VectorXd dual_pred = phi_probe * (phi.transpose() * alpha);
  CHECK((primal_pred - dual_pred).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("full_tensor_features") {
  Rng rng(7);

  SUBCASE("one dimension equals feature_matrix") {
    FeatureConfig cfg{5, 0.4, {1.0}, 1};
    Eigen::MatrixXd x(10, 1);
    for (Eigen::Index i = 0; i < 10; ++i) x(i, 0) = 2.0 * rng.uniform() - 1.0;
    CHECK(full_tensor_features(x, cfg) == feature_matrix(x.col(0), 0, cfg));
  }

  SUBCASE("row inner products equal the product kernel") {
    FeatureConfig cfg{4, 0.5, {0.8, 0.8, 0.8}, 3};
    Eigen::MatrixXd x(6, 3);
    for (Eigen::Index i = 0; i < 6; ++i) {
      for (int d = 0; d < 3; ++d) x(i, d) = 0.8 * (2.0 * rng.uniform() - 1.0);
    }
    const Eigen::MatrixXd phi = full_tensor_features(x, cfg);
    for (Eigen::Index i = 0; i < 6; ++i) {
      for (Eigen::Index j = 0; j < 6; ++j) {
        CHECK(phi.row(i).dot(phi.row(j)) ==
              doctest::Approx(product_kernel_approx(x.row(i), x.row(j), cfg)).epsilon(1e-12));
      }
    }
  }

  SUBCASE("boundary rows vanish and capacity is enforced") {
    FeatureConfig cfg{4, 0.5, {0.8, 0.8}, 2};
    Eigen::MatrixXd corner(1, 2);
    corner << -0.8, 0.3;
    CHECK(full_tensor_features(corner, cfg).isZero(0.0));

    FeatureConfig big{6, 0.5, std::vector<double>(8, 0.8), 8};
    CHECK_THROWS_AS(full_tensor_features(Eigen::MatrixXd::Zero(1, 8), big), CapacityError);
  }
}
