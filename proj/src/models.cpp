#include "trustlab/models.hpp"

#include <cmath>

#include <json.hpp>

#include "trustlab/baselines.hpp"
#include "trustlab/rng.hpp"

namespace trustlab {

namespace {

Eigen::MatrixXd glorot(Rng& rng, int rows, int cols) {
  const double lim = std::sqrt(6.0 / (rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-lim, lim);
  return m;
}

Eigen::MatrixXd gaussian(Rng& rng, int rows, int cols, double sd) {
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.normal(0.0, sd);
  return m;
}

bool is_gp_family(ModelKind k) {
  return k == ModelKind::kGp || k == ModelKind::kPmgp || k == ModelKind::kPogp ||
         k == ModelKind::kGpnn;
}

bool has_pseudo(ModelKind k) {
  return k == ModelKind::kPogp || k == ModelKind::kGpnn;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "gp") return ModelKind::kGp;
  if (name == "pmgp") return ModelKind::kPmgp;
  if (name == "pogp") return ModelKind::kPogp;
  if (name == "rnn") return ModelKind::kRnn;
  if (name == "gpnn") return ModelKind::kGpnn;
  if (name == "lg") return ModelKind::kLg;
  if (name == "ct") return ModelKind::kCt;
  throw Error("unknown model '" + name + "' (expected gp|pmgp|pogp|rnn|gpnn|lg|ct)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGp: return "gp";
    case ModelKind::kPmgp: return "pmgp";
    case ModelKind::kPogp: return "pogp";
    case ModelKind::kRnn: return "rnn";
    case ModelKind::kGpnn: return "gpnn";
    case ModelKind::kLg: return "lg";
    default: return "ct";
  }
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {
      ModelKind::kGp,  ModelKind::kPmgp, ModelKind::kPogp, ModelKind::kRnn,
      ModelKind::kGpnn, ModelKind::kLg,  ModelKind::kCt};
  return kinds;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["feature_dim"] = feature_dim;
  j["gp_latent_dim"] = gp_latent_dim;
  j["max_basis"] = max_basis;
  j["task_embed_dim"] = task_embed_dim;
  j["task_hidden"] = task_hidden;
  j["perf_embed_dim"] = perf_embed_dim;
  j["gru_layers"] = gru_layers;
  j["residual_hidden"] = residual_hidden;
  if (lengthscales.size() > 0) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < lengthscales.size(); ++i)
      a.push_back(lengthscales(i));
    j["lengthscales"] = std::move(a);
  }
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json) {
  ModelConfig cfg;
  nlohmann::json j = nlohmann::json::parse(json);
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key);
  };
  get("feature_dim", cfg.feature_dim);
  get("gp_latent_dim", cfg.gp_latent_dim);
  get("max_basis", cfg.max_basis);
  get("task_embed_dim", cfg.task_embed_dim);
  get("task_hidden", cfg.task_hidden);
  get("perf_embed_dim", cfg.perf_embed_dim);
  get("gru_layers", cfg.gru_layers);
  get("residual_hidden", cfg.residual_hidden);
  if (j.contains("lengthscales")) {
    const auto& a = j.at("lengthscales");
    cfg.lengthscales.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) cfg.lengthscales(i) = a[i];
  }
  return cfg;
}

TrustModel::TrustModel(ModelKind kind, ModelConfig cfg)
    : kind_(kind), cfg_(std::move(cfg)) {
  if (cfg_.lengthscales.size() == 0)
    cfg_.lengthscales = Eigen::VectorXd::Ones(cfg_.gp_latent_dim);
  if (cfg_.lengthscales.size() != cfg_.gp_latent_dim)
    throw Error("lengthscale count must equal gp_latent_dim");
  if ((cfg_.lengthscales.array() <= 0.0).any())
    throw Error("lengthscales must be strictly positive");
  if (cfg_.gp_latent_dim > cfg_.feature_dim)
    throw Error("gp_latent_dim exceeds feature_dim");
  init_params(0);
}

void TrustModel::init_params(std::uint64_t seed) {
  Rng rng(seed ^ 0x6d6f64656c736464ULL);
  ParamSet p;
  const int d = cfg_.feature_dim;
  const int k = cfg_.gp_latent_dim;
  const int h = cfg_.task_embed_dim;

  if (is_gp_family(kind_)) {
    p.add("lambda", gaussian(rng, d, k, 1.0 / std::sqrt(d)));
    if (kind_ == ModelKind::kGp) p.add("c0", Eigen::MatrixXd::Zero(1, 1));
    if (kind_ == ModelKind::kPmgp) p.add("beta", Eigen::MatrixXd::Zero(d, 1));
    if (has_pseudo(kind_)) {
      p.add("pseudo_plus", gaussian(rng, k, 1, 0.5));
      p.add("pseudo_minus", gaussian(rng, k, 1, 0.5));
    }
    p.add("log_noise_sd", Eigen::MatrixXd::Zero(1, 1));
    if (kind_ == ModelKind::kGpnn) {
      const int b = cfg_.max_basis;
      const int rin = 2 * b + k + 1;
      const int rh = cfg_.residual_hidden;
      p.add("res_w1", glorot(rng, rh, rin));
      p.add("res_b1", Eigen::MatrixXd::Zero(rh, 1));
      p.add("res_w2", glorot(rng, rh, rh));
      p.add("res_b2", Eigen::MatrixXd::Zero(rh, 1));
      // zero readout: the hybrid starts exactly at the Bayes update
      p.add("res_w3", Eigen::MatrixXd::Zero(b, rh));
      p.add("res_b3", Eigen::MatrixXd::Zero(b, 1));
    }
  } else if (kind_ == ModelKind::kRnn) {
    p.add("task_w1", glorot(rng, cfg_.task_hidden, d));
    p.add("task_b1", Eigen::MatrixXd::Zero(cfg_.task_hidden, 1));
    p.add("task_w2", glorot(rng, h, cfg_.task_hidden));
    p.add("task_b2", Eigen::MatrixXd::Zero(h, 1));
    p.add("perf_w", glorot(rng, cfg_.perf_embed_dim, 1));
    p.add("perf_b", Eigen::MatrixXd::Zero(cfg_.perf_embed_dim, 1));
    int in_dim = h + cfg_.perf_embed_dim;
    for (int l = 1; l <= cfg_.gru_layers; ++l) {
      const std::string pre = "gru" + std::to_string(l) + "_";
      for (const char* gate : {"wv", "wr", "wc"}) p.add(pre + gate, glorot(rng, h, in_dim));
      for (const char* gate : {"uv", "ur", "uc"}) p.add(pre + gate, glorot(rng, h, h));
      for (const char* gate : {"bv", "br", "bc"})
        p.add(pre + gate, Eigen::MatrixXd::Zero(h, 1));
      p.add("h0_" + std::to_string(l), Eigen::MatrixXd::Zero(h, 1));
      in_dim = h;
    }
  } else if (kind_ == ModelKind::kLg) {
    Eigen::MatrixXd w(3, 1);
    w << 0.8 + 0.05 * rng.normal(), 0.1 + 0.05 * rng.normal(), 0.05 * rng.normal();
    p.add("lg_w", w);
    p.add("lg_log_var", Eigen::MatrixXd::Zero(1, 1));
    p.add("lg_tau0", Eigen::MatrixXd::Zero(1, 1));  // logit of initial trust
  } else {  // CT
    p.add("ct_logit", Eigen::MatrixXd::Zero(1, 1));
  }
  params_ = std::move(p);
}

void TrustModel::set_params(ParamSet params) {
  if (!params_.same_shapes(params))
    throw Error("parameter set does not match the " + to_string(kind_) +
                " configuration");
  params_ = std::move(params);
}

double TrustModel::predict_trust(const std::vector<Observation>& history,
                                 const FeatureVector& x) const {
  ad::Tape tape;
  ModelGraph graph(tape, *this);
  ModelGraph::State s = graph.init_state();
  for (const auto& obs : history) s = graph.step(s, obs.features, obs.outcome);
  return tape.scalar_value(graph.predict(s, x).prob);
}

ModelGraph::ModelGraph(ad::Tape& tape, const TrustModel& model)
    : tape_(tape), model_(model) {
  for (const auto& [name, value] : model.params())
    pv_.emplace(name, tape_.constant(value));
}

ad::Var ModelGraph::projection_var() const { return pv_.at("lambda"); }

ad::Var ModelGraph::project(const FeatureVector& x) const {
  if (x.size() != model_.config().feature_dim)
    throw Error("feature dimension mismatch");
  return tape_.matmul(tape_.transpose(projection_var()), tape_.constant(x));
}

ad::Var ModelGraph::mean_at(ad::Var mean_input) const {
  switch (model_.kind()) {
    case ModelKind::kGp: return pv_.at("c0");
    case ModelKind::kPmgp:
      return tape_.dot(pv_.at("beta"), mean_input);
    default: return tape_.scalar(0.0);
  }
}

ModelGraph::GpPosterior ModelGraph::gp_posterior(const State& s, ad::Var z,
                                                 ad::Var mean_value) const {
  GpPosterior post;
  if (s.basis.empty()) {
    post.mu = mean_value;
    post.var = tape_.scalar(1.0);
    return post;
  }
  const ad::Var lvec = tape_.constant(model_.config().lengthscales);
  std::vector<ad::Var> kvals;
  kvals.reserve(s.basis.size());
  for (ad::Var zi : s.basis) {
    const ad::Var diff = tape_.sub(zi, z);
    const ad::Var q = tape_.dot(tape_.hadamard(diff, lvec), diff);
    kvals.push_back(tape_.exp(tape_.neg(q)));
  }
  post.kvec = tape_.vcat(kvals);
  post.ck = tape_.matmul(s.cmat, post.kvec);
  post.mu = tape_.add(mean_value, tape_.dot(s.alpha, post.kvec));
  post.var =
      tape_.clamp_min(tape_.add_const(tape_.dot(post.kvec, post.ck), 1.0), 1e-12);
  return post;
}

ad::Var ModelGraph::residual_output(const State& s, ad::Var ck, ad::Var z,
                                    double outcome) const {
  const int b = model_.config().max_basis;
  const int n = static_cast<int>(s.basis.size());
  const ad::Var zero_block = tape_.constant(Eigen::MatrixXd::Zero(b, 1));
  const ad::Var alpha_pad = n > 0 ? tape_.pad_rows(s.alpha, b) : zero_block;
  const ad::Var ck_pad = n > 0 ? tape_.pad_rows(ck, b) : zero_block;
  const ad::Var input =
      tape_.vcat({alpha_pad, ck_pad, z, tape_.scalar(outcome)});
  ad::Var hmid = tape_.tanh(
      tape_.add(tape_.matmul(pv_.at("res_w1"), input), pv_.at("res_b1")));
  hmid = tape_.tanh(
      tape_.add(tape_.matmul(pv_.at("res_w2"), hmid), pv_.at("res_b2")));
  const ad::Var out =
      tape_.add(tape_.matmul(pv_.at("res_w3"), hmid), pv_.at("res_b3"));
  return tape_.rows(out, 0, n + 1);
}

ModelGraph::State ModelGraph::gp_step(const State& s, ad::Var z,
                                      ad::Var mean_value, double outcome,
                                      bool with_residual) const {
  const int n = static_cast<int>(s.basis.size());
  if (with_residual && n + 1 > model_.config().max_basis)
    throw Error("basis exceeds the residual padding length");
  const GpPosterior post = gp_posterior(s, z, mean_value);
  const ad::Var sn = tape_.exp(pv_.at("log_noise_sd"));
  const ad::Var sx = tape_.sqrt(tape_.add(post.var, tape_.square(sn)));
  const ad::Var zs = tape_.scale(tape_.sdiv(post.mu, sx), outcome);
  const ad::Var r = tape_.probit_ratio(zs);
  const ad::Var gamma1 = tape_.scale(tape_.sdiv(r, sx), outcome);
  const ad::Var gamma2 =
      tape_.scale(tape_.smul(tape_.sdiv(r, tape_.square(sx)), tape_.add(zs, r)),
                  -outcome * outcome);
  const ad::Var one = tape_.scalar(1.0);
  const ad::Var svec = n > 0 ? tape_.vcat({post.ck, one}) : one;

  State ns;
  ns.basis = s.basis;
  ns.basis.push_back(z);
  ns.steps = s.steps + 1;
  ns.prev_outcome = outcome;

  ad::Var alpha_new = tape_.smul(gamma1, svec);
  if (n > 0) alpha_new = tape_.add(tape_.pad_rows(s.alpha, n + 1), alpha_new);
  if (with_residual)
    alpha_new = tape_.add(alpha_new, residual_output(s, post.ck, z, outcome));
  ns.alpha = alpha_new;

  ad::Var outer = tape_.smul(gamma2, tape_.matmul(svec, tape_.transpose(svec)));
  ns.cmat = n > 0 ? tape_.add(tape_.pad_to(s.cmat, n + 1, n + 1), outer) : outer;
  return ns;
}

ad::Var ModelGraph::mlp_task(const FeatureVector& x) const {
  if (x.size() != model_.config().feature_dim)
    throw Error("feature dimension mismatch");
  const ad::Var xin = tape_.constant(x);
  const ad::Var hid = tape_.tanh(
      tape_.add(tape_.matmul(pv_.at("task_w1"), xin), pv_.at("task_b1")));
  return tape_.add(tape_.matmul(pv_.at("task_w2"), hid), pv_.at("task_b2"));
}

ad::Var ModelGraph::gru_step(int layer, ad::Var h_prev, ad::Var input) const {
  const std::string pre = "gru" + std::to_string(layer) + "_";
  auto gate = [&](const char* w, const char* u, const char* bias) {
    return tape_.add(tape_.add(tape_.matmul(pv_.at(pre + w), input),
                               tape_.matmul(pv_.at(pre + u), h_prev)),
                     pv_.at(pre + bias));
  };
  const ad::Var v = tape_.sigmoid(gate("wv", "uv", "bv"));
  const ad::Var r = tape_.sigmoid(gate("wr", "ur", "br"));
  const ad::Var cand = tape_.tanh(
      tape_.add(tape_.add(tape_.matmul(pv_.at(pre + "wc"), input),
                          tape_.matmul(pv_.at(pre + "uc"),
                                       tape_.hadamard(r, h_prev))),
                pv_.at(pre + "bc")));
  // h = (1 - v) h_prev + v cand
  return tape_.add(h_prev, tape_.hadamard(v, tape_.sub(cand, h_prev)));
}

ModelGraph::State ModelGraph::init_state() const {
  State s;
  switch (model_.kind()) {
    case ModelKind::kPogp:
    case ModelKind::kGpnn:
      s = gp_step(s, pv_.at("pseudo_plus"), tape_.scalar(0.0), 1.0, false);
      s = gp_step(s, pv_.at("pseudo_minus"), tape_.scalar(0.0), -1.0, false);
      s.steps = 0;
      break;
    case ModelKind::kRnn:
      for (int l = 1; l <= model_.config().gru_layers; ++l)
        s.hidden.push_back(pv_.at("h0_" + std::to_string(l)));
      break;
    case ModelKind::kLg:
      s.tau = tape_.sigmoid(pv_.at("lg_tau0"));
      break;
    default:
      break;
  }
  return s;
}

ModelGraph::State ModelGraph::step(const State& s, const FeatureVector& x,
                                   double outcome) const {
  if (outcome < -1.0 || outcome > 1.0) throw Error("outcome outside [-1,+1]");
  switch (model_.kind()) {
    case ModelKind::kGp:
    case ModelKind::kPmgp:
    case ModelKind::kPogp:
    case ModelKind::kGpnn:
      return gp_step(s, project(x), mean_at(tape_.constant(x)), outcome,
                     model_.kind() == ModelKind::kGpnn);
    case ModelKind::kRnn: {
      const ad::Var ztask = mlp_task(x);
      const ad::Var cperf = tape_.tanh(
          tape_.add(tape_.matmul(pv_.at("perf_w"), tape_.scalar(outcome)),
                    pv_.at("perf_b")));
      State ns;
      ad::Var input = tape_.vcat({ztask, cperf});
      for (std::size_t l = 0; l < s.hidden.size(); ++l) {
        input = gru_step(static_cast<int>(l) + 1, s.hidden[l], input);
        ns.hidden.push_back(input);
      }
      ns.steps = s.steps + 1;
      ns.prev_outcome = outcome;
      return ns;
    }
    case ModelKind::kLg: {
      const double c_prev2 = s.steps == 0 ? outcome : s.prev_outcome;
      const ad::Var feats =
          tape_.vcat({s.tau, tape_.scalar(outcome), tape_.scalar(outcome - c_prev2)});
      State ns;
      ns.tau = tape_.clamp(tape_.dot(pv_.at("lg_w"), feats), kTrustClampLo,
                           kTrustClampHi);
      ns.steps = s.steps + 1;
      ns.prev_outcome = outcome;
      return ns;
    }
    case ModelKind::kCt: {
      State ns = s;
      ns.steps = s.steps + 1;
      ns.prev_outcome = outcome;
      return ns;
    }
  }
  throw Error("unreachable model kind");
}

ModelGraph::Prediction ModelGraph::predict(const State& s,
                                           const FeatureVector& x) const {
  Prediction pred;
  switch (model_.kind()) {
    case ModelKind::kGp:
    case ModelKind::kPmgp:
    case ModelKind::kPogp:
    case ModelKind::kGpnn: {
      const GpPosterior post = gp_posterior(s, project(x), mean_at(tape_.constant(x)));
      const ad::Var sn = tape_.exp(pv_.at("log_noise_sd"));
      const ad::Var sx = tape_.sqrt(tape_.add(post.var, tape_.square(sn)));
      const ad::Var score = tape_.sdiv(post.mu, sx);
      pred.prob = tape_.norm_cdf(score);
      pred.log_p = tape_.log_norm_cdf(score);
      pred.log_1mp = tape_.log_norm_cdf(tape_.neg(score));
      return pred;
    }
    case ModelKind::kRnn: {
      const ad::Var score = tape_.dot(s.hidden.back(), mlp_task(x));
      pred.prob = tape_.sigmoid(score);
      pred.log_p = tape_.neg(tape_.softplus(tape_.neg(score)));
      pred.log_1mp = tape_.neg(tape_.softplus(score));
      return pred;
    }
    case ModelKind::kLg: {
      const ad::Var tau = s.tau;
      pred.prob = tau;
      pred.log_p = tape_.log(tau);
      pred.log_1mp = tape_.log(tape_.sub(tape_.scalar(1.0), tau));
      return pred;
    }
    case ModelKind::kCt: {
      const ad::Var logit = pv_.at("ct_logit");
      pred.prob = tape_.sigmoid(logit);
      pred.log_p = tape_.neg(tape_.softplus(tape_.neg(logit)));
      pred.log_1mp = tape_.neg(tape_.softplus(logit));
      return pred;
    }
  }
  throw Error("unreachable model kind");
}

ModelGraph::ComponentNorms ModelGraph::component_norms(const State& s,
                                                       const FeatureVector& x,
                                                       double outcome) const {
  if (!is_gp_family(model_.kind()))
    throw Error("component_norms requires a GP-family model");
  const ad::Var z = project(x);
  const GpPosterior post = gp_posterior(s, z, mean_at(tape_.constant(x)));
  const ad::Var sn = tape_.exp(pv_.at("log_noise_sd"));
  const ad::Var sx = tape_.sqrt(tape_.add(post.var, tape_.square(sn)));
  const double sxv = tape_.scalar_value(sx);
  const double mu = tape_.scalar_value(post.mu);
  const double zs = outcome * mu / sxv;
  const double r = ad::probit_ratio_value(zs);
  const double gamma1 = outcome * r / sxv;

  const int n = static_cast<int>(s.basis.size());
  Eigen::VectorXd svec(n + 1);
  if (n > 0) svec.head(n) = tape_.value(post.ck).col(0);
  svec(n) = 1.0;

  ComponentNorms out;
  const double alpha_norm = n > 0 ? tape_.value(s.alpha).norm() : 0.0;
  const double gp_norm = (gamma1 * svec).norm();
  double nn_norm = 0.0;
  if (model_.kind() == ModelKind::kGpnn)
    nn_norm = tape_.value(residual_output(s, post.ck, z, outcome)).norm();
  if (alpha_norm == 0.0) {
    out.absolute = true;
    out.eta_gp = gp_norm;
    out.eta_nn = nn_norm;
  } else {
    out.eta_gp = gp_norm / alpha_norm;
    out.eta_nn = nn_norm / alpha_norm;
  }
  return out;
}

Eigen::VectorXd gru_reference(const Eigen::MatrixXd& wv, const Eigen::MatrixXd& uv,
                              const Eigen::VectorXd& bv, const Eigen::MatrixXd& wr,
                              const Eigen::MatrixXd& ur, const Eigen::VectorXd& br,
                              const Eigen::MatrixXd& wc, const Eigen::MatrixXd& uc,
                              const Eigen::VectorXd& bc, const Eigen::VectorXd& h_prev,
                              const Eigen::VectorXd& input) {
  auto sigm = [](const Eigen::VectorXd& v) {
    return (1.0 / (1.0 + (-v.array()).exp())).matrix().eval();
  };
  const Eigen::VectorXd v = sigm(wv * input + uv * h_prev + bv);
  const Eigen::VectorXd r = sigm(wr * input + ur * h_prev + br);
  const Eigen::VectorXd cand =
      (wc * input + uc * (r.cwiseProduct(h_prev)) + bc).array().tanh();
  return (1.0 - v.array()) * h_prev.array() + v.array() * cand.array();
}

}  // namespace trustlab
