#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "trustlab/baselines.hpp"
#include "trustlab/models.hpp"
#include "trustlab/rng.hpp"

using namespace trustlab;

TEST_CASE("the linear-Gaussian update is the clamped linear combination") {
  LgParams p;
  p.w << 0.8, 0.1, 0.05;
  CHECK(lg_update(p, 0.5, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lg_update(p, 0.5, -1.0, -1.0) == doctest::Approx(0.3).epsilon(1e-15));
  // the difference feature fires only when the outcome flips
  CHECK(lg_update(p, 0.5, 1.0, -1.0) == doctest::Approx(0.6).epsilon(1e-15));

  p.w << 5.0, 0.0, 0.0;
  CHECK(lg_update(p, 1.0, 1.0, 1.0) == kTrustClampHi);
  p.w << -5.0, 0.0, 0.0;
  CHECK(lg_update(p, 1.0, 1.0, 1.0) == kTrustClampLo);
}

TEST_CASE("the Gaussian diagnostic likelihood matches the closed form") {
  LgParams p;
  p.noise_var = 0.25;
  CHECK(lg_nll(p, 0.6, 0.6) ==
        doctest::Approx(0.5 * std::log(2.0 * M_PI * 0.25)).epsilon(1e-14));
  CHECK(lg_nll(p, 0.8, 0.6) ==
        doctest::Approx(0.5 * 0.04 / 0.25 + 0.5 * std::log(2.0 * M_PI * 0.25))
            .epsilon(1e-14));
  p.noise_var = 0.0;
  CHECK_THROWS(lg_nll(p, 0.5, 0.5));
}

TEST_CASE("the constant model predicts one value everywhere") {
  CtParams p;
  CHECK(ct_predict(p) == 0.5);
  p.tau0 = 0.73;
  CHECK(ct_predict(p) == 0.73);
}

TEST_CASE("the task-blind model graphs ignore task features") {
  ModelConfig cfg;
  cfg.feature_dim = 4;
  Rng rng(3);
  auto rv = [&](double s = 1.0) {
    Eigen::VectorXd v(4);
    for (int i = 0; i < 4; ++i) v(i) = s * rng.normal();
    return v;
  };
  for (const ModelKind kind : {ModelKind::kLg, ModelKind::kCt}) {
    TrustModel model(kind, cfg);
    model.init_params(9);
    const std::vector<Observation> hist = {Observation{rv(), 1.0, 0},
                                           Observation{rv(), 1.0, 1}};
    const double a = model.predict_trust(hist, rv());
    const double b = model.predict_trust(hist, rv());
    CHECK(a == doctest::Approx(b).epsilon(1e-15));
  }
}

TEST_CASE("the linear-Gaussian graph reproduces the scalar recursion") {
  ModelConfig cfg;
  cfg.feature_dim = 4;
  TrustModel model(ModelKind::kLg, cfg);
  const Eigen::VectorXd w = model.params().at("lg_w").col(0);
  LgParams ref;
  ref.w = w;

  const Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  // before any observation the graph predicts one half
  CHECK(model.predict_trust({}, x) == doctest::Approx(0.5).epsilon(1e-15));

  double tau = 0.5, prev = 0.0;
  std::vector<Observation> hist;
  const double outcomes[4] = {1.0, 1.0, -1.0, 1.0};
  for (int t = 0; t < 4; ++t) {
    const double c = outcomes[t];
    tau = lg_update(ref, tau, c, t == 0 ? c : prev);
    prev = c;
    hist.push_back(Observation{x, c, t});
    CHECK(model.predict_trust(hist, x) == doctest::Approx(tau).epsilon(1e-13));
  }
}

TEST_CASE("the constant graph exposes tau through a trainable logit") {
  ModelConfig cfg;
  cfg.feature_dim = 4;
  TrustModel model(ModelKind::kCt, cfg);
  ParamSet p = model.params();
  p.at("ct_logit")(0, 0) = 1.2;
  model.set_params(p);
  const double expect = 1.0 / (1.0 + std::exp(-1.2));
  CHECK(model.predict_trust({}, Eigen::VectorXd::Zero(4)) ==
        doctest::Approx(expect).epsilon(1e-14));
}
