#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "trustlab/kernel.hpp"
#include "trustlab/rng.hpp"

using namespace trustlab;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int r, int c, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("kernel values are bounded, symmetric, and one on the diagonal") {
  Rng rng(3);
  const ProjectionKernel kernel(random_matrix(rng, 6, 3),
                                (Eigen::VectorXd(3) << 0.5, 1.0, 2.0).finished());
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd x = random_matrix(rng, 6, 1);
    const Eigen::VectorXd y = random_matrix(rng, 6, 1);
    const double kxy = kernel.evaluate(x, y);
    CHECK(kxy > 0.0);
    CHECK(kxy <= 1.0);
    CHECK(kxy == doctest::Approx(kernel.evaluate(y, x)).epsilon(1e-15));
    CHECK(kernel.evaluate(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("evaluate agrees with the explicit quadratic form") {
  Rng rng(5);
  const Eigen::MatrixXd lambda = random_matrix(rng, 5, 2);
  const Eigen::VectorXd ls = (Eigen::VectorXd(2) << 0.7, 1.3).finished();
  const ProjectionKernel kernel(lambda, ls);
  const Eigen::MatrixXd m =
      lambda * ls.asDiagonal() * lambda.transpose();  // M = Lambda L Lambda^T
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = random_matrix(rng, 5, 1);
    const Eigen::VectorXd y = random_matrix(rng, 5, 1);
    const Eigen::VectorXd d = x - y;
    CHECK(kernel.evaluate(x, y) ==
          doctest::Approx(std::exp(-d.dot(m * d))).epsilon(1e-12));
  }
}

TEST_CASE("projection and latent evaluation are consistent") {
  Rng rng(9);
  const ProjectionKernel kernel(random_matrix(rng, 8, 3));
  const Eigen::VectorXd x = random_matrix(rng, 8, 1);
  const Eigen::VectorXd y = random_matrix(rng, 8, 1);
  CHECK(kernel.project(x).size() == 3);
  CHECK(kernel.evaluate(x, y) ==
        doctest::Approx(kernel.evaluate_latent(kernel.project(x),
                                               kernel.project(y)))
            .epsilon(1e-14));
}

TEST_CASE("points equal after projection have kernel value one") {
  // Lambda has a null direction; moving along it does not change z
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(3, 2);
  lambda(0, 0) = 1.0;
  lambda(1, 1) = 1.0;
  const ProjectionKernel kernel(lambda);
  const Eigen::VectorXd x = (Eigen::VectorXd(3) << 1.0, 2.0, 3.0).finished();
  Eigen::VectorXd y = x;
  y(2) = -10.0;
  CHECK(kernel.evaluate(x, y) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gram matrices are symmetric and positive semi-definite") {
  Rng rng(17);
  const ProjectionKernel kernel(random_matrix(rng, 6, 3),
                                (Eigen::VectorXd(3) << 1.0, 0.4, 2.5).finished());
  std::vector<FeatureVector> points;
  for (int i = 0; i < 12; ++i) points.push_back(random_matrix(rng, 6, 1));
  const Eigen::MatrixXd gram = kernel.gram(points);
  REQUIRE(gram.rows() == 12);
  CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((gram.diagonal().array() - 1.0).abs().maxCoeff() < 1e-14);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  CHECK(eig.eigenvalues().minCoeff() > -1e-9);
}

TEST_CASE("longer distances and larger lengthscale weights reduce similarity") {
  const Eigen::MatrixXd lambda = Eigen::MatrixXd::Identity(2, 2);
  const ProjectionKernel narrow(lambda, (Eigen::VectorXd(2) << 4.0, 4.0).finished());
  const ProjectionKernel wide(lambda, (Eigen::VectorXd(2) << 0.25, 0.25).finished());
  const Eigen::VectorXd o = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd near = (Eigen::VectorXd(2) << 0.3, 0.0).finished();
  const Eigen::VectorXd far = (Eigen::VectorXd(2) << 1.5, 0.0).finished();
  CHECK(narrow.evaluate(o, near) > narrow.evaluate(o, far));
  CHECK(wide.evaluate(o, far) > narrow.evaluate(o, far));
}

TEST_CASE("invalid constructions are rejected") {
  Eigen::MatrixXd wide(2, 3);  // latent dimension above feature dimension
  wide.setZero();
  CHECK_THROWS_AS(ProjectionKernel{wide}, Error);
  Eigen::MatrixXd ok = Eigen::MatrixXd::Identity(3, 2);
  CHECK_THROWS_AS(
      ProjectionKernel(ok, (Eigen::VectorXd(2) << 1.0, -0.5).finished()), Error);
  CHECK_THROWS_AS(
      ProjectionKernel(ok, (Eigen::VectorXd(3) << 1.0, 1.0, 1.0).finished()),
      Error);
}
