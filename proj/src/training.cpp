#include "trustlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "trustlab/rng.hpp"

namespace trustlab {

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["learning_rate"] = learning_rate;
  j["max_epochs"] = max_epochs;
  j["validation_fraction"] = validation_fraction;
  j["patience"] = patience;
  j["seed"] = seed;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& json) {
  TrainConfig cfg;
  nlohmann::json j = nlohmann::json::parse(json);
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key);
  };
  get("learning_rate", cfg.learning_rate);
  get("max_epochs", cfg.max_epochs);
  get("validation_fraction", cfg.validation_fraction);
  get("patience", cfg.patience);
  get("seed", cfg.seed);
  if (cfg.validation_fraction <= 0.0 || cfg.validation_fraction >= 1.0)
    throw Error("validation_fraction must lie in (0, 1)");
  if (cfg.max_epochs < 1) throw Error("max_epochs must be at least 1");
  return cfg;
}

double bernoulli_loss(std::span<const double> predictions,
                      std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw Error("bernoulli_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = predictions[i];
    const double t = targets[i];
    total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return total;
}

std::vector<TargetRef> record_targets(const ParticipantRecord& record) {
  std::vector<TargetRef> out;
  for (int i = 0; i < 3; ++i)
    out.push_back({TargetRef::Phase::kPre, i, record.tested[i].task_id,
                   normalize_likert(record.tested[i].pre_score)});
  for (int i = 0; i < 2; ++i)
    out.push_back({TargetRef::Phase::kObserved, i, record.observed[i].task_id,
                   normalize_likert(record.observed[i].score)});
  for (int i = 0; i < 3; ++i)
    out.push_back({TargetRef::Phase::kPost, i, record.tested[i].task_id,
                   normalize_likert(record.tested[i].post_score)});
  return out;
}

std::vector<ModelGraph::Prediction> record_predictions(
    const ModelGraph& graph, const ParticipantRecord& record,
    const FeatureMap& features) {
  auto feat = [&](const std::string& id) -> const FeatureVector& {
    auto it = features.find(id);
    if (it == features.end()) throw Error("no features for task " + id);
    return it->second;
  };
  const ModelGraph::State s0 = graph.init_state();
  const ModelGraph::State s1 =
      graph.step(s0, feat(record.observed[0].task_id), record.observed[0].outcome);
  const ModelGraph::State s2 =
      graph.step(s1, feat(record.observed[1].task_id), record.observed[1].outcome);

  std::vector<ModelGraph::Prediction> preds;
  for (int i = 0; i < 3; ++i)
    preds.push_back(graph.predict(s0, feat(record.tested[i].task_id)));
  preds.push_back(graph.predict(s1, feat(record.observed[0].task_id)));
  preds.push_back(graph.predict(s2, feat(record.observed[1].task_id)));
  for (int i = 0; i < 3; ++i)
    preds.push_back(graph.predict(s2, feat(record.tested[i].task_id)));
  return preds;
}

double model_loss_and_grad(const TrustModel& model, const Dataset& dataset,
                           const std::vector<int>& record_indices,
                           const TargetFilter& filter, ParamSet* grads) {
  ad::Tape tape;
  ModelGraph graph(tape, model);
  ad::Var total = tape.scalar(0.0);
  std::size_t n_terms = 0;
  for (int idx : record_indices) {
    const ParticipantRecord& rec = dataset.records.at(idx);
    const auto targets = record_targets(rec);
    const auto preds = record_predictions(graph, rec, dataset.features);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (filter && !filter(rec, targets[i])) continue;
      const double t = targets[i].value;
      ad::Var term = tape.add(tape.scale(preds[i].log_p, t),
                              tape.scale(preds[i].log_1mp, 1.0 - t));
      total = tape.sub(total, term);
      ++n_terms;
    }
  }
  if (n_terms == 0) throw Error("no training targets selected");
  const double loss = tape.scalar_value(total);
  if (!std::isfinite(loss)) throw Error("non-finite training loss");
  if (grads) {
    tape.backward(total);
    for (const auto& [name, var] : graph.param_vars()) {
      const Eigen::MatrixXd& g = tape.adjoint(var);
      if (!g.allFinite())
        throw Error("non-finite gradient for parameter " + name);
      grads->at(name) += g;
    }
  }
  return loss;
}

TrainResult train(TrustModel& model, const Dataset& dataset,
                  const TrainConfig& cfg, const TargetFilter& filter,
                  const std::vector<int>& record_indices) {
  if (dataset.records.empty()) throw Error("train: empty dataset");
  std::vector<int> order = record_indices;
  if (order.empty()) {
    order.resize(dataset.records.size());
    std::iota(order.begin(), order.end(), 0);
  }
  for (int idx : order) {
    if (idx < 0 || idx >= static_cast<int>(dataset.records.size()))
      throw Error("train: record index out of range");
  }
  const int n = static_cast<int>(order.size());
  Rng rng(cfg.seed ^ 0x747261696e736574ULL);
  rng.shuffle(order);
  if (n < 2) throw Error("train: need at least 2 participants for a validation split");
  int n_val = static_cast<int>(std::lround(cfg.validation_fraction * n));
  n_val = std::clamp(n_val, 1, n - 1);
  const std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  const std::vector<int> train_idx(order.begin() + n_val, order.end());

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  AdamState adam = make_adam_state(model.params());

  TrainResult result;
  ParamSet best = model.params();
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    ParamSet grads = model.params().zeros_like();
    const double train_loss =
        model_loss_and_grad(model, dataset, train_idx, filter, &grads);
    const double val_loss =
        model_loss_and_grad(model, dataset, val_idx, filter, nullptr);
    result.train_loss.push_back(train_loss);
    result.val_loss.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model.params();
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    adam_step(model.params(), grads, adam, adam_cfg);
  }
  model.set_params(std::move(best));
  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  return result;
}

Dataset gradcheck_dataset(std::uint64_t seed, int feature_dim) {
  SyntheticConfig scfg;
  scfg.n_participants = 6;
  scfg.n_tasks = 8;
  scfg.n_groups = 2;
  scfg.seed = seed;
  scfg.noise = 0.3;
  scfg.feature_dim = feature_dim;
  return generate_synthetic(scfg).dataset;
}

GradCheckReport gradcheck_model(TrustModel& model, const Dataset& dataset,
                                std::uint64_t seed, int coords_per_block,
                                double step, double corrupt) {
  // move every block into general position first
  Rng rng(seed ^ 0x6772616463686b21ULL);
  for (auto& [name, value] : model.params())
    for (Eigen::Index i = 0; i < value.size(); ++i)
      value(i / value.cols(), i % value.cols()) += 0.05 * rng.normal();

  std::vector<int> batch;
  for (int i = 0; i < std::min<int>(3, static_cast<int>(dataset.records.size())); ++i)
    batch.push_back(i);

  ParamSet grads = model.params().zeros_like();
  model_loss_and_grad(model, dataset, batch, nullptr, &grads);

  GradCheckReport report;
  for (auto& [name, value] : model.params()) {
    GradCheckBlock block{name, 0.0};
    const Eigen::Index size = value.size();
    std::vector<Eigen::Index> coords;
    if (size <= coords_per_block) {
      for (Eigen::Index i = 0; i < size; ++i) coords.push_back(i);
    } else {
      for (int i = 0; i < coords_per_block; ++i)
        coords.push_back(rng.uniform_int(static_cast<int>(size)));
    }
    for (Eigen::Index flat : coords) {
      const Eigen::Index r = flat % value.rows();
      const Eigen::Index c = flat / value.rows();
      const double saved = value(r, c);
      value(r, c) = saved + step;
      const double up = model_loss_and_grad(model, dataset, batch, nullptr, nullptr);
      value(r, c) = saved - step;
      const double dn = model_loss_and_grad(model, dataset, batch, nullptr, nullptr);
      value(r, c) = saved;
      const double fd = (up - dn) / (2.0 * step);
      const double an = grads.at(name)(r, c) + corrupt;
      const double rel =
          std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
      block.max_rel_err = std::max(block.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, block.max_rel_err);
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace trustlab
