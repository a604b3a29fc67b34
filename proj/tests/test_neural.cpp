#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "trustlab/models.hpp"
#include "trustlab/rng.hpp"

using namespace trustlab;

namespace {

Eigen::VectorXd random_vector(Rng& rng, int n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

ModelConfig rnn_config() {
  ModelConfig cfg;
  cfg.feature_dim = 6;
  cfg.task_hidden = 5;
  cfg.task_embed_dim = 7;
  cfg.perf_embed_dim = 3;
  cfg.gru_layers = 2;
  return cfg;
}

ModelConfig hybrid_config() {
  ModelConfig cfg;
  cfg.feature_dim = 5;
  cfg.gp_latent_dim = 2;
  cfg.max_basis = 8;
  cfg.residual_hidden = 6;
  return cfg;
}

}  // namespace

TEST_CASE("the recurrent forward pass matches a plain Eigen replica") {
  const ModelConfig cfg = rnn_config();
  TrustModel model(ModelKind::kRnn, cfg);
  model.init_params(5);
  const ParamSet& p = model.params();
  Rng rng(55);

  std::vector<Observation> history;
  std::vector<Eigen::VectorXd> h = {p.at("h0_1").col(0), p.at("h0_2").col(0)};
  for (int step = 0; step < 3; ++step) {
    const Eigen::VectorXd x = random_vector(rng, cfg.feature_dim);
    const double c = step % 2 == 0 ? 1.0 : -1.0;
    history.push_back(Observation{x, c, step});

    const Eigen::VectorXd task =
        p.at("task_w2") *
            (p.at("task_w1") * x + p.at("task_b1").col(0)).array().tanh().matrix() +
        p.at("task_b2").col(0);
    const Eigen::VectorXd perf =
        (p.at("perf_w").col(0) * c + p.at("perf_b").col(0)).array().tanh();
    Eigen::VectorXd input(task.size() + perf.size());
    input << task, perf;
    for (int l = 0; l < 2; ++l) {
      const std::string pre = "gru" + std::to_string(l + 1) + "_";
      input = gru_reference(p.at(pre + "wv"), p.at(pre + "uv"),
                            p.at(pre + "bv").col(0), p.at(pre + "wr"),
                            p.at(pre + "ur"), p.at(pre + "br").col(0),
                            p.at(pre + "wc"), p.at(pre + "uc"),
                            p.at(pre + "bc").col(0), h[l], input);
      h[l] = input;
    }

    const Eigen::VectorXd probe = random_vector(rng, cfg.feature_dim);
    const Eigen::VectorXd probe_embed =
        p.at("task_w2") *
            (p.at("task_w1") * probe + p.at("task_b1").col(0)).array().tanh().matrix() +
        p.at("task_b2").col(0);
    const double expect = 1.0 / (1.0 + std::exp(-h[1].dot(probe_embed)));
    CHECK(model.predict_trust(history, probe) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("all-zero recurrent parameters leave trust at one half") {
  const ModelConfig cfg = rnn_config();
  TrustModel model(ModelKind::kRnn, cfg);
  model.set_params(model.params().zeros_like());
  Rng rng(3);
  std::vector<Observation> history;
  for (int step = 0; step < 3; ++step) {
    const Eigen::VectorXd probe = random_vector(rng, cfg.feature_dim);
    CHECK(model.predict_trust(history, probe) ==
          doctest::Approx(0.5).epsilon(1e-15));
    history.push_back(
        Observation{random_vector(rng, cfg.feature_dim), 1.0, step});
  }
}

TEST_CASE("the recurrent state reacts to task features and outcomes") {
  const ModelConfig cfg = rnn_config();
  TrustModel model(ModelKind::kRnn, cfg);
  model.init_params(17);
  Rng rng(19);
  const Eigen::VectorXd x = random_vector(rng, cfg.feature_dim);
  const Eigen::VectorXd probe = random_vector(rng, cfg.feature_dim);
  const double up = model.predict_trust({Observation{x, 1.0, 0}}, probe);
  const double down = model.predict_trust({Observation{x, -1.0, 0}}, probe);
  CHECK(up != doctest::Approx(down).epsilon(1e-12));
}

TEST_CASE("a zero residual readout makes the hybrid identical to the GP") {
  const ModelConfig cfg = hybrid_config();
  TrustModel gpnn(ModelKind::kGpnn, cfg);
  gpnn.init_params(23);  // res_w3 and res_b3 start at zero
  TrustModel pogp(ModelKind::kPogp, cfg);
  ParamSet shared = pogp.params();
  for (const char* name : {"lambda", "pseudo_plus", "pseudo_minus", "log_noise_sd"})
    shared.at(name) = gpnn.params().at(name);
  pogp.set_params(shared);

  Rng rng(29);
  for (int rollout = 0; rollout < 50; ++rollout) {
    std::vector<Observation> history;
    for (int step = 0; step < 1 + rollout % 3; ++step)
      history.push_back(Observation{random_vector(rng, cfg.feature_dim),
                                    rng.uniform(0.0, 1.0) < 0.5 ? 1.0 : -1.0,
                                    step});
    const Eigen::VectorXd probe = random_vector(rng, cfg.feature_dim);
    CHECK(gpnn.predict_trust(history, probe) ==
          doctest::Approx(pogp.predict_trust(history, probe)).epsilon(1e-12));
  }
}

TEST_CASE("a nonzero residual readout changes the mean update") {
  const ModelConfig cfg = hybrid_config();
  TrustModel gpnn(ModelKind::kGpnn, cfg);
  gpnn.init_params(31);
  TrustModel bent(ModelKind::kGpnn, cfg);
  ParamSet p = gpnn.params();
  p.at("res_b3") = Eigen::MatrixXd::Constant(cfg.max_basis, 1, 0.3);
  bent.set_params(p);

  Rng rng(37);
  const Eigen::VectorXd x = random_vector(rng, cfg.feature_dim);
  const Eigen::VectorXd probe = random_vector(rng, cfg.feature_dim);
  const std::vector<Observation> hist = {Observation{x, 1.0, 0}};
  CHECK(gpnn.predict_trust(hist, probe) !=
        doctest::Approx(bent.predict_trust(hist, probe)).epsilon(1e-12));
  // residual never touches the prediction before any observation
  CHECK(gpnn.predict_trust({}, probe) ==
        doctest::Approx(bent.predict_trust({}, probe)).epsilon(1e-15));
}

TEST_CASE("component norms separate the Bayes and neural contributions") {
  const ModelConfig cfg = hybrid_config();
  TrustModel gpnn(ModelKind::kGpnn, cfg);
  gpnn.init_params(41);
  Rng rng(43);
  const Eigen::VectorXd x = random_vector(rng, cfg.feature_dim);

  {
    ad::Tape tape;
    const ModelGraph graph(tape, gpnn);
    const auto norms = graph.component_norms(graph.init_state(), x, 1.0);
    CHECK_FALSE(norms.absolute);  // pseudo observations seed a nonzero alpha
    CHECK(norms.eta_gp > 0.0);
    CHECK(norms.eta_nn == 0.0);  // zero readout
  }

  ParamSet p = gpnn.params();
  p.at("res_b3") = Eigen::MatrixXd::Constant(cfg.max_basis, 1, 0.2);
  gpnn.set_params(p);
  {
    ad::Tape tape;
    const ModelGraph graph(tape, gpnn);
    const auto norms = graph.component_norms(graph.init_state(), x, 1.0);
    CHECK(norms.eta_nn > 0.0);
  }

  // scaling alpha down scales both relative norms up
  {
    ad::Tape tape;
    const ModelGraph graph(tape, gpnn);
    ModelGraph::State s = graph.init_state();
    const auto base = graph.component_norms(s, x, 1.0);
    ModelGraph::State shrunk = s;
    shrunk.alpha = tape.scale(s.alpha, 0.5);
    const auto scaled = graph.component_norms(shrunk, x, 1.0);
    CHECK(scaled.eta_nn > base.eta_nn);
  }

  // non-hybrid GP-family models report a zero neural component
  TrustModel gp(ModelKind::kGp, cfg);
  ad::Tape tape;
  const ModelGraph graph(tape, gp);
  const auto norms = graph.component_norms(graph.init_state(), x, 1.0);
  CHECK(norms.absolute);  // empty basis before the first observation
  CHECK(norms.eta_nn == 0.0);
  TrustModel rnn(ModelKind::kRnn, rnn_config());
  ad::Tape tape2;
  const ModelGraph graph2(tape2, rnn);
  CHECK_THROWS_AS(
      graph2.component_norms(graph2.init_state(),
                             Eigen::VectorXd::Zero(rnn_config().feature_dim), 1.0),
      Error);
}

TEST_CASE("the basis growth guard trips before the residual padding overflows") {
  ModelConfig cfg = hybrid_config();
  cfg.max_basis = 4;  // two pseudo inputs plus two observations
  TrustModel gpnn(ModelKind::kGpnn, cfg);
  Rng rng(47);
  ad::Tape tape;
  const ModelGraph graph(tape, gpnn);
  ModelGraph::State s = graph.init_state();
  s = graph.step(s, random_vector(rng, cfg.feature_dim), 1.0);
  s = graph.step(s, random_vector(rng, cfg.feature_dim), -1.0);
  CHECK_THROWS_AS(graph.step(s, random_vector(rng, cfg.feature_dim), 1.0), Error);
}
