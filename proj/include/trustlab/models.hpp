#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trustlab/autodiff.hpp"
#include "trustlab/dataset.hpp"
#include "trustlab/params.hpp"

namespace trustlab {

enum class ModelKind { kGp, kPmgp, kPogp, kRnn, kGpnn, kLg, kCt };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);
const std::vector<ModelKind>& all_model_kinds();

struct ModelConfig {
  int feature_dim = 50;
  // GP family
  int gp_latent_dim = 3;
  int max_basis = 4;  // pseudo points plus study observations
  Eigen::VectorXd lengthscales;  // empty = identity
  // neural model
  int task_embed_dim = 30;
  int task_hidden = 15;
  int perf_embed_dim = 5;
  int gru_layers = 2;
  // hybrid residual network
  int residual_hidden = 20;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& json);
};

// Parameter container plus the tape builders for one trust model. All seven
// configurations share the same forward surface: an initial state, a
// per-observation step, and a trust prediction for a task feature vector.
class TrustModel {
 public:
  TrustModel(ModelKind kind, ModelConfig cfg);

  ModelKind kind() const { return kind_; }
  const ModelConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  void init_params(std::uint64_t seed);
  void set_params(ParamSet params);  // shape-checked against the config

  // convenience, non-differentiating path (runs a fresh tape forward)
  double predict_trust(const std::vector<Observation>& history,
                       const FeatureVector& x) const;

 private:
  ModelKind kind_;
  ModelConfig cfg_;
  ParamSet params_;
};

// Per-tape binding of a model's parameters; rebuilt once per gradient step.
class ModelGraph {
 public:
  ModelGraph(ad::Tape& tape, const TrustModel& model);

  struct State {
    // GP family: latent basis points with natural parameters
    std::vector<ad::Var> basis;
    ad::Var alpha{}, cmat{};
    // neural: one hidden vector per GRU layer
    std::vector<ad::Var> hidden;
    // scalar baselines
    ad::Var tau{};
    double prev_outcome = 0.0;
    int steps = 0;
  };

  struct Prediction {
    ad::Var prob;     // trust in (0,1)
    ad::Var log_p;    // log prob, stable form
    ad::Var log_1mp;  // log(1 - prob), stable form
  };

  State init_state() const;
  State step(const State& s, const FeatureVector& x, double outcome) const;
  Prediction predict(const State& s, const FeatureVector& x) const;

  // relative norms of the Bayes and neural terms of the hybrid mean update
  struct ComponentNorms {
    double eta_gp = 0.0;
    double eta_nn = 0.0;
    bool absolute = false;  // set when ||alpha_prev|| = 0
  };
  ComponentNorms component_norms(const State& s, const FeatureVector& x,
                                 double outcome) const;

  const std::map<std::string, ad::Var>& param_vars() const { return pv_; }

 private:
  ad::Var projection_var() const;
  ad::Var project(const FeatureVector& x) const;
  ad::Var mean_at(ad::Var mean_input) const;  // prior mean from a feature const
  struct GpPosterior {
    ad::Var mu, var, kvec, ck;  // kvec/ck invalid when the basis is empty
  };
  GpPosterior gp_posterior(const State& s, ad::Var z, ad::Var mean_value) const;
  State gp_step(const State& s, ad::Var z, ad::Var mean_value, double outcome,
                bool with_residual) const;
  ad::Var residual_output(const State& s, ad::Var ck, ad::Var z,
                          double outcome) const;
  ad::Var mlp_task(const FeatureVector& x) const;
  ad::Var gru_step(int layer, ad::Var h_prev, ad::Var input) const;

  ad::Tape& tape_;
  const TrustModel& model_;
  std::map<std::string, ad::Var> pv_;
};

// Standalone GRU gate equations used by the neural trust model; exposed for
// direct verification against hand-computed values.
Eigen::VectorXd gru_reference(const Eigen::MatrixXd& wv, const Eigen::MatrixXd& uv,
                              const Eigen::VectorXd& bv, const Eigen::MatrixXd& wr,
                              const Eigen::MatrixXd& ur, const Eigen::VectorXd& br,
                              const Eigen::MatrixXd& wc, const Eigen::MatrixXd& uc,
                              const Eigen::VectorXd& bc, const Eigen::VectorXd& h_prev,
                              const Eigen::VectorXd& input);

}  // namespace trustlab
