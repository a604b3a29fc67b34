#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "trustlab/autodiff.hpp"
#include "trustlab/rng.hpp"

using trustlab::Rng;
using trustlab::ad::Tape;
using trustlab::ad::Var;

namespace {

// central-difference gradient of a scalar graph w.r.t. one leaf matrix
void check_gradient(
    const std::function<Var(Tape&, const Eigen::MatrixXd&)>& build,
    const Eigen::MatrixXd& x, double step = 1e-6, double tol = 1e-6) {
  Tape tape;
  Var loss = build(tape, x);
  REQUIRE(tape.value(loss).size() == 1);
  tape.backward(loss);
  // the leaf is always the first node pushed by build()
  const Eigen::MatrixXd analytic = tape.adjoint(Var{0});
  for (int i = 0; i < x.size(); ++i) {
    Eigen::MatrixXd xp = x, xm = x;
    xp.data()[i] += step;
    xm.data()[i] -= step;
    Tape tp, tm;
    const double fp = tp.scalar_value(build(tp, xp));
    const double fm = tm.scalar_value(build(tm, xm));
    const double fd = (fp - fm) / (2.0 * step);
    const double an = analytic.data()[i];
    const double rel =
        std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
    CAPTURE(i);
    CHECK(rel < tol);
  }
}

Eigen::MatrixXd random_matrix(Rng& rng, int r, int c, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("scalar helpers match reference values") {
  CHECK(trustlab::ad::norm_cdf_value(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(trustlab::ad::norm_cdf_value(1.96) ==
        doctest::Approx(0.9750021048517795).epsilon(1e-12));
  CHECK(trustlab::ad::norm_pdf_value(0.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
  // phi(0)/Phi(0) = 2 phi(0)
  CHECK(trustlab::ad::probit_ratio_value(0.0) ==
        doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-14));
  CHECK(trustlab::ad::log_norm_cdf_value(0.0) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("probit ratio is stable and accurate far in the tail") {
  // phi(z)/Phi(z) ~ -z for z -> -inf; compare with extended-precision values
  CHECK(trustlab::ad::probit_ratio_value(-10.0) ==
        doctest::Approx(10.098093233962512).epsilon(1e-10));
  CHECK(trustlab::ad::probit_ratio_value(-40.0) ==
        doctest::Approx(40.024968847207264).epsilon(1e-9));
  CHECK(std::isfinite(trustlab::ad::probit_ratio_value(-300.0)));
  CHECK(trustlab::ad::probit_ratio_value(-300.0) ==
        doctest::Approx(300.0).epsilon(1e-4));
  // large positive arguments decay toward zero
  CHECK(trustlab::ad::probit_ratio_value(40.0) < 1e-100);
}

TEST_CASE("log_norm_cdf is stable in the far tail") {
  // log Phi(z) ~ -z^2/2 - log(-z sqrt(2 pi)) for z -> -inf
  const double z = -50.0;
  const double expect =
      -0.5 * z * z - std::log(-z * std::sqrt(2.0 * M_PI)) +
      std::log1p(-1.0 / (z * z));
  CHECK(trustlab::ad::log_norm_cdf_value(z) ==
        doctest::Approx(expect).epsilon(1e-6));
  CHECK(std::isfinite(trustlab::ad::log_norm_cdf_value(-1e4)));
}

TEST_CASE("elementwise op gradients match finite differences") {
  Rng rng(7);
  const Eigen::MatrixXd x = random_matrix(rng, 3, 2);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.tanh(t.constant(m)));
  }, x);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.sigmoid(t.constant(m)));
  }, x);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.exp(t.constant(m)));
  }, x);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.softplus(t.constant(m)));
  }, x);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.square(t.constant(m)));
  }, x);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.norm_cdf(t.constant(m)));
  }, x);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.log_norm_cdf(t.constant(m)));
  }, x);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.probit_ratio(t.constant(m)));
  }, x, 1e-6, 5e-6);

  const Eigen::MatrixXd pos =
      (random_matrix(rng, 3, 2).array().abs() + 0.5).matrix();
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.log(t.constant(m)));
  }, pos);
  check_gradient([](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.sqrt(t.constant(m)));
  }, pos);
}

TEST_CASE("linear-algebra op gradients match finite differences") {
  Rng rng(11);
  const Eigen::MatrixXd a = random_matrix(rng, 3, 4);
  const Eigen::MatrixXd b = random_matrix(rng, 4, 2);
  const Eigen::MatrixXd v = random_matrix(rng, 4, 1);

  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    return t.sum(t.matmul(leaf, t.constant(b)));
  }, a);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    return t.sum(t.matmul(t.constant(a), leaf));
  }, b);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    return t.sum(t.square(t.transpose(t.constant(m))));
  }, a);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    return t.dot(leaf, t.tanh(leaf));
  }, v);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    return t.sum(t.hadamard(leaf, t.sigmoid(leaf)));
  }, v);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    Var s = t.scalar(0.7);
    return t.sum(t.smul(s, t.sdiv(leaf, t.add_const(s, 1.0))));
  }, v);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    return t.sum(t.square(t.vcat({leaf, t.scale(leaf, 2.0)})));
  }, v);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    return t.sum(t.square(t.pad_rows(leaf, 7)));
  }, v);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    return t.sum(t.square(t.pad_to(leaf, 5, 6)));
  }, a);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var leaf = t.constant(m);
    return t.sum(t.square(t.rows(leaf, 1, 2)));
  }, v);
}

TEST_CASE("scalar of the smul argument receives the matrix-sum adjoint") {
  Tape t;
  Var s = t.scalar(2.0);
  Eigen::MatrixXd m(2, 1);
  m << 3.0, 4.0;
  Var loss = t.sum(t.smul(s, t.constant(m)));
  t.backward(loss);
  CHECK(t.adjoint(s)(0, 0) == doctest::Approx(7.0).epsilon(1e-14));
}

TEST_CASE("clamp ops zero the gradient outside the active range") {
  Tape t;
  Eigen::MatrixXd m(3, 1);
  m << -2.0, 0.5, 2.0;
  Var leaf = t.constant(m);
  Var loss = t.sum(t.clamp(leaf, 0.0, 1.0));
  t.backward(loss);
  CHECK(t.adjoint(leaf)(0, 0) == 0.0);
  CHECK(t.adjoint(leaf)(1, 0) == 1.0);
  CHECK(t.adjoint(leaf)(2, 0) == 0.0);
  CHECK(t.value(loss)(0, 0) == doctest::Approx(1.5));

  Tape t2;
  Var leaf2 = t2.constant(m);
  Var loss2 = t2.sum(t2.clamp_min(leaf2, 0.0));
  t2.backward(loss2);
  CHECK(t2.adjoint(leaf2)(0, 0) == 0.0);
  CHECK(t2.adjoint(leaf2)(2, 0) == 1.0);
}

TEST_CASE("backward resets adjoints between calls") {
  Tape t;
  Var leaf = t.constant(Eigen::MatrixXd::Constant(1, 1, 2.0));
  Var loss = t.square(leaf);
  t.backward(loss);
  const double first = t.adjoint(leaf)(0, 0);
  t.backward(loss);
  CHECK(t.adjoint(leaf)(0, 0) == doctest::Approx(first).epsilon(1e-15));
  CHECK(first == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("fan-out accumulates adjoints from every consumer") {
  Tape t;
  Var leaf = t.constant(Eigen::MatrixXd::Constant(1, 1, 1.5));
  Var loss = t.add(t.square(leaf), t.scale(leaf, 3.0));
  t.backward(loss);
  CHECK(t.adjoint(leaf)(0, 0) == doctest::Approx(2.0 * 1.5 + 3.0));
}

TEST_CASE("a deep composite graph differentiates correctly") {
  Rng rng(23);
  const Eigen::MatrixXd w = random_matrix(rng, 4, 4, 0.5);
  const Eigen::MatrixXd x0 = random_matrix(rng, 4, 1);
  check_gradient([&](Tape& t, const Eigen::MatrixXd& m) {
    Var w_leaf = t.constant(m);
    Var h = t.constant(x0);
    for (int i = 0; i < 6; ++i) h = t.tanh(t.matmul(w_leaf, h));
    return t.log(t.add_const(t.sum(t.norm_cdf(h)), 1.0));
  }, w, 1e-6, 5e-6);
}
