#include "trustlab.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "trustlab/dataset.hpp"
#include "trustlab/evaluation.hpp"
#include "trustlab/models.hpp"
#include "trustlab/params.hpp"
#include "trustlab/task_features.hpp"
#include "trustlab/training.hpp"

namespace {

thread_local std::string g_last_error = "no error";

tl_status fail(tl_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
tl_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const trustlab::Error& e) {
    return fail(TL_ERR_RUNTIME, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(TL_ERR_INVALID_ARGUMENT, std::string("bad JSON: ") + e.what());
  } catch (const std::exception& e) {
    return fail(TL_ERR_RUNTIME, e.what());
  }
}

tl_status require(bool ok, const char* what) {
  return ok ? TL_OK : fail(TL_ERR_INVALID_ARGUMENT, what);
}

}  // namespace

struct tl_embeddings {
  trustlab::EmbeddingTable table;
};

struct tl_dataset {
  trustlab::Dataset data;
};

struct tl_model {
  trustlab::TrustModel model;
};

extern "C" {

const char* tl_last_error(void) { return g_last_error.c_str(); }

tl_status tl_embeddings_load(const char* path, tl_embeddings** out) {
  if (tl_status s = require(path && out, "path and out must be non-NULL"))
    return s;
  return guarded([&] {
    auto table = trustlab::load_embeddings(path);
    *out = new tl_embeddings{std::move(table)};
    return TL_OK;
  });
}

void tl_embeddings_free(tl_embeddings* e) { delete e; }

int tl_embeddings_dim(const tl_embeddings* e) {
  return e ? e->table.dim() : 0;
}

tl_status tl_embed_catalog(const tl_embeddings* e, const char* catalog_path,
                           const char* features_path) {
  if (tl_status s = require(e && catalog_path && features_path,
                            "embeddings, catalog_path, features_path required"))
    return s;
  return guarded([&] {
    const auto tasks = trustlab::load_task_catalog(catalog_path);
    trustlab::FeatureMap features;
    for (const auto& task : tasks)
      features[task.id] = trustlab::embed_task(task, e->table);
    trustlab::save_features(features, features_path);
    return TL_OK;
  });
}

tl_status tl_embeddings_embed(const tl_embeddings* e, const char* description,
                              double* out) {
  if (tl_status s = require(e && description && out,
                            "embeddings, description, and out required"))
    return s;
  return guarded([&] {
    const trustlab::FeatureVector v =
        trustlab::embed_description(description, e->table);
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v(i);
    return TL_OK;
  });
}

tl_status tl_dataset_load(const char* dataset_path, const char* features_path,
                          tl_dataset** out) {
  if (tl_status s = require(dataset_path && out, "dataset_path and out required"))
    return s;
  return guarded([&] {
    trustlab::Dataset ds = trustlab::load_dataset(dataset_path);
    if (features_path)
      trustlab::attach_features(ds, trustlab::load_features(features_path));
    *out = new tl_dataset{std::move(ds)};
    return TL_OK;
  });
}

tl_status tl_dataset_generate(const char* config_json, tl_dataset** out) {
  if (tl_status s = require(out != nullptr, "out must be non-NULL")) return s;
  return guarded([&] {
    trustlab::SyntheticConfig cfg;
    if (config_json && *config_json) {
      const auto j = nlohmann::json::parse(config_json);
      auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key);
      };
      get("n_participants", cfg.n_participants);
      get("n_tasks", cfg.n_tasks);
      get("n_groups", cfg.n_groups);
      get("seed", cfg.seed);
      get("noise", cfg.noise);
      get("feature_dim", cfg.feature_dim);
      get("success_shift", cfg.success_shift);
      get("failure_shift", cfg.failure_shift);
    }
    *out = new tl_dataset{trustlab::generate_synthetic(cfg).dataset};
    return TL_OK;
  });
}

tl_status tl_dataset_save(const tl_dataset* d, const char* dataset_path,
                          const char* features_path) {
  if (tl_status s = require(d && dataset_path, "dataset and dataset_path required"))
    return s;
  return guarded([&] {
    trustlab::save_dataset(d->data, dataset_path);
    if (features_path) trustlab::save_features(d->data.features, features_path);
    return TL_OK;
  });
}

int tl_dataset_num_records(const tl_dataset* d) {
  return d ? static_cast<int>(d->data.records.size()) : 0;
}

int tl_dataset_num_tasks(const tl_dataset* d) {
  return d ? static_cast<int>(d->data.catalog.size()) : 0;
}

int tl_dataset_feature_dim(const tl_dataset* d) {
  if (!d || d->data.features.empty()) return 0;
  return static_cast<int>(d->data.features.begin()->second.size());
}

void tl_dataset_free(tl_dataset* d) { delete d; }

tl_status tl_model_create(const char* kind, const char* config_json,
                          uint64_t seed, tl_model** out) {
  if (tl_status s = require(kind && out, "kind and out required")) return s;
  return guarded([&] {
    const trustlab::ModelKind mk = trustlab::parse_model_kind(kind);
    trustlab::ModelConfig cfg;
    if (config_json && *config_json)
      cfg = trustlab::ModelConfig::from_json(config_json);
    auto* handle = new tl_model{trustlab::TrustModel(mk, cfg)};
    handle->model.init_params(seed);
    *out = handle;
    return TL_OK;
  });
}

tl_status tl_model_load(const char* checkpoint_path, tl_model** out) {
  if (tl_status s = require(checkpoint_path && out, "checkpoint_path and out required"))
    return s;
  return guarded([&] {
    trustlab::Checkpoint ck = trustlab::load_checkpoint(checkpoint_path);
    const trustlab::ModelKind mk = trustlab::parse_model_kind(ck.model);
    trustlab::ModelConfig cfg = trustlab::ModelConfig::from_json(ck.config_json);
    auto* handle = new tl_model{trustlab::TrustModel(mk, cfg)};
    handle->model.set_params(std::move(ck.params));
    *out = handle;
    return TL_OK;
  });
}

tl_status tl_model_save(const tl_model* m, const char* checkpoint_path) {
  if (tl_status s = require(m && checkpoint_path, "model and checkpoint_path required"))
    return s;
  return guarded([&] {
    trustlab::save_checkpoint(checkpoint_path, to_string(m->model.kind()),
                              m->model.config().to_json(), m->model.params());
    return TL_OK;
  });
}

const char* tl_model_kind(const tl_model* m) {
  static thread_local std::string kind;
  if (!m) return "";
  kind = to_string(m->model.kind());
  return kind.c_str();
}

void tl_model_free(tl_model* m) { delete m; }

tl_status tl_model_train(tl_model* m, const tl_dataset* d,
                         const char* train_config_json, const char* log_path) {
  if (tl_status s = require(m && d, "model and dataset required")) return s;
  return guarded([&] {
    trustlab::TrainConfig cfg;
    if (train_config_json && *train_config_json)
      cfg = trustlab::TrainConfig::from_json(train_config_json);
    if (d->data.features.empty())
      return fail(TL_ERR_INVALID_ARGUMENT, "dataset has no task features");
    const trustlab::TrainResult result = trustlab::train(m->model, d->data, cfg);
    if (log_path) {
      std::ofstream log(log_path);
      if (!log) return fail(TL_ERR_IO, std::string("cannot write ") + log_path);
      log.precision(17);
      log << "epoch\ttrain_loss\tval_loss\tbest\n";
      for (std::size_t i = 0; i < result.train_loss.size(); ++i)
        log << i << '\t' << result.train_loss[i] << '\t' << result.val_loss[i]
            << '\t' << (static_cast<int>(i) == result.best_epoch ? 1 : 0)
            << '\n';
      if (!log) return fail(TL_ERR_IO, std::string("failed writing ") + log_path);
    }
    return TL_OK;
  });
}

tl_status tl_model_predict_features(const tl_model* m,
                                    const double* history_features,
                                    const double* outcomes, int n_history,
                                    const double* task_features,
                                    int feature_dim, double* trust_out) {
  if (tl_status s = require(m && task_features && trust_out && feature_dim > 0,
                            "model, task_features, and trust_out required"))
    return s;
  if (n_history > 0 && (!history_features || !outcomes))
    return fail(TL_ERR_INVALID_ARGUMENT,
                "history_features and outcomes required for n_history > 0");
  return guarded([&] {
    std::vector<trustlab::Observation> history;
    for (int i = 0; i < n_history; ++i) {
      trustlab::Observation obs;
      obs.features =
          Eigen::Map<const Eigen::VectorXd>(history_features + i * feature_dim,
                                            feature_dim);
      obs.outcome = outcomes[i];
      obs.time = i;
      history.push_back(std::move(obs));
    }
    const Eigen::VectorXd x =
        Eigen::Map<const Eigen::VectorXd>(task_features, feature_dim);
    *trust_out = m->model.predict_trust(history, x);
    return TL_OK;
  });
}

tl_status tl_model_predict(const tl_model* m, const tl_dataset* d,
                           const char* participant_id, const char* task_id,
                           int n_observations, double* trust_out) {
  if (tl_status s = require(m && d && participant_id && task_id && trust_out,
                            "model, dataset, ids, and trust_out required"))
    return s;
  if (n_observations < 0 || n_observations > 2)
    return fail(TL_ERR_INVALID_ARGUMENT, "n_observations must be 0, 1, or 2");
  return guarded([&] {
    const trustlab::ParticipantRecord* record = nullptr;
    for (const auto& r : d->data.records)
      if (r.participant_id == participant_id) record = &r;
    if (!record)
      return fail(TL_ERR_INVALID_ARGUMENT,
                  std::string("unknown participant: ") + participant_id);
    auto history = trustlab::to_observations(*record, d->data.features);
    history.resize(n_observations);
    *trust_out = m->model.predict_trust(history, d->data.features_of(task_id));
    return TL_OK;
  });
}

tl_status tl_model_gradcheck(const char* kind, uint64_t seed,
                             const char* report_path, double* max_rel_err_out) {
  if (tl_status s = require(kind && max_rel_err_out, "kind and out required"))
    return s;
  return guarded([&] {
    const trustlab::ModelKind mk = trustlab::parse_model_kind(kind);
    trustlab::ModelConfig cfg;
    cfg.feature_dim = 10;
    cfg.gp_latent_dim = 2;
    cfg.task_hidden = 4;
    cfg.task_embed_dim = 5;
    cfg.perf_embed_dim = 2;
    cfg.residual_hidden = 4;
    trustlab::TrustModel model(mk, cfg);
    const trustlab::Dataset ds =
        trustlab::gradcheck_dataset(seed, cfg.feature_dim);
    const trustlab::GradCheckReport report =
        trustlab::gradcheck_model(model, ds, seed);
    *max_rel_err_out = report.max_rel_err;
    if (report_path) {
      std::ofstream out(report_path);
      if (!out) return fail(TL_ERR_IO, std::string("cannot write ") + report_path);
      out.precision(17);
      out << "block\tmax_rel_err\tstatus\n";
      for (const auto& block : report.blocks)
        out << block.name << '\t' << block.max_rel_err << '\t'
            << (block.max_rel_err < 1e-4 ? "pass" : "fail") << '\n';
      if (!out)
        return fail(TL_ERR_IO, std::string("failed writing ") + report_path);
    }
    return TL_OK;
  });
}

tl_status tl_report_from_detail(const char* detail_path,
                                const char* report_path) {
  if (tl_status s = require(detail_path && report_path,
                            "detail_path and report_path required"))
    return s;
  return guarded([&] {
    std::ifstream in(detail_path);
    if (!in) return fail(TL_ERR_IO, std::string("cannot open ") + detail_path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "protocol\tmodel\tfold\tnll\tmae\tn_targets")
      return fail(TL_ERR_INVALID_ARGUMENT,
                  std::string(detail_path) + ": not a per-fold detail file");

    trustlab::MetricsReport report;
    // model name -> per-fold scores, preserving first-seen model order
    std::vector<std::pair<std::string, std::vector<trustlab::ModelFoldScore>>>
        by_model;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string protocol, model, fold, nll_s, mae_s, n_s;
      if (!(std::getline(row, protocol, '\t') && std::getline(row, model, '\t') &&
            std::getline(row, fold, '\t') && std::getline(row, nll_s, '\t') &&
            std::getline(row, mae_s, '\t') && std::getline(row, n_s)))
        return fail(TL_ERR_INVALID_ARGUMENT,
                    std::string(detail_path) + ":" + std::to_string(lineno) +
                        ": malformed detail row");
      report.protocol = protocol;
      trustlab::ModelFoldScore score;
      score.fold = fold;
      score.nll = std::stod(nll_s);
      score.mae = std::stod(mae_s);
      score.n_targets = std::stoi(n_s);
      auto it = std::find_if(by_model.begin(), by_model.end(),
                             [&](const auto& kv) { return kv.first == model; });
      if (it == by_model.end()) {
        by_model.push_back({model, {}});
        it = by_model.end() - 1;
      }
      it->second.push_back(std::move(score));
    }
    if (by_model.empty())
      return fail(TL_ERR_INVALID_ARGUMENT,
                  std::string(detail_path) + ": no detail rows");

    const std::size_t n_folds = by_model.front().second.size();
    std::vector<std::map<std::string, double>> nll_by_fold(n_folds),
        mae_by_fold(n_folds);
    for (const auto& [name, folds] : by_model) {
      if (folds.size() != n_folds)
        return fail(TL_ERR_INVALID_ARGUMENT,
                    std::string(detail_path) + ": fold count differs for " + name);
      for (std::size_t i = 0; i < n_folds; ++i) {
        nll_by_fold[i][name] = folds[i].nll;
        mae_by_fold[i][name] = folds[i].mae;
      }
    }
    const auto nll_rel = trustlab::dfb(nll_by_fold);
    const auto mae_rel = trustlab::dfb(mae_by_fold);

    for (const auto& [name, folds] : by_model) {
      trustlab::ModelSummary summary;
      summary.kind = trustlab::parse_model_kind(name);
      summary.folds = folds;
      auto mean_se = [&](auto member, double* mean, double* se) {
        double sum = 0.0;
        for (const auto& f : folds) sum += f.*member;
        *mean = sum / static_cast<double>(n_folds);
        double ss = 0.0;
        for (const auto& f : folds) ss += (f.*member - *mean) * (f.*member - *mean);
        *se = n_folds > 1 ? std::sqrt(ss / static_cast<double>(n_folds - 1)) /
                                std::sqrt(static_cast<double>(n_folds))
                          : 0.0;
      };
      mean_se(&trustlab::ModelFoldScore::nll, &summary.nll_mean, &summary.nll_se);
      mean_se(&trustlab::ModelFoldScore::mae, &summary.mae_mean, &summary.mae_se);
      double nd = 0.0, md = 0.0;
      for (std::size_t i = 0; i < n_folds; ++i) {
        nd += nll_rel[i].at(name);
        md += mae_rel[i].at(name);
      }
      summary.nll_dfb = nd / static_cast<double>(n_folds);
      summary.mae_dfb = md / static_cast<double>(n_folds);
      report.models.push_back(std::move(summary));
    }

    std::ofstream out(report_path);
    if (!out) return fail(TL_ERR_IO, std::string("cannot write ") + report_path);
    out << trustlab::format_report(report);
    if (!out)
      return fail(TL_ERR_IO, std::string("failed writing ") + report_path);
    return TL_OK;
  });
}

tl_status tl_evaluate(const tl_dataset* d, const char* protocol,
                      const char* config_json, const char* report_path,
                      const char* detail_path) {
  if (tl_status s = require(d && protocol && report_path,
                            "dataset, protocol, and report_path required"))
    return s;
  const std::string proto = protocol;
  if (proto != "e1" && proto != "e2")
    return fail(TL_ERR_INVALID_ARGUMENT, "protocol must be 'e1' or 'e2'");
  return guarded([&] {
    trustlab::ExperimentConfig cfg;
    if (config_json && *config_json) {
      const auto j = nlohmann::json::parse(config_json);
      if (j.contains("models")) {
        cfg.models.clear();
        for (const auto& name : j.at("models"))
          cfg.models.push_back(
              trustlab::parse_model_kind(name.get<std::string>()));
      }
      if (j.contains("seed")) cfg.seed = j.at("seed");
      if (j.contains("jobs")) cfg.jobs = j.at("jobs");
      if (j.contains("n_folds")) cfg.n_folds_e1 = j.at("n_folds");
      if (j.contains("model"))
        cfg.model = trustlab::ModelConfig::from_json(j.at("model").dump());
      if (j.contains("train"))
        cfg.train = trustlab::TrainConfig::from_json(j.at("train").dump());
    }
    const auto report = trustlab::run_experiment(
        d->data, proto == "e1" ? trustlab::Protocol::kE1 : trustlab::Protocol::kE2,
        cfg);
    std::ofstream out(report_path);
    if (!out) return fail(TL_ERR_IO, std::string("cannot write ") + report_path);
    out << trustlab::format_report(report);
    if (!out) return fail(TL_ERR_IO, std::string("failed writing ") + report_path);
    if (detail_path) {
      std::ofstream det(detail_path);
      if (!det) return fail(TL_ERR_IO, std::string("cannot write ") + detail_path);
      det << trustlab::format_fold_detail(report);
      if (!det)
        return fail(TL_ERR_IO, std::string("failed writing ") + detail_path);
    }
    return TL_OK;
  });
}

}  // extern "C"
