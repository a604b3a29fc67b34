// Command-line front end for the trust-model library. Talks to the library
// exclusively through the C API in trustlab.h.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trustlab.h"

namespace {

constexpr const char* kGloveEnv = "TRUSTLAB_GLOVE";

// outputs declared by the running subcommand; removed when it fails so that
// exit 0 is equivalent to "artifact fully written"
std::vector<std::string> g_outputs;

void declare_output(const std::string& path) { g_outputs.push_back(path); }

int fail(const std::string& message) {
  std::fprintf(stderr, "error: %s\n", message.c_str());
  for (const auto& path : g_outputs) std::remove(path.c_str());
  return 1;
}

int fail_api(const std::string& what) { return fail(what + ": " + tl_last_error()); }

// defaults < config file < flags: values the user set on the command line
// win; otherwise a key from the JSON config file wins; otherwise the
// built-in default survives.
nlohmann::json overlay_config(const CLI::App* cmd, const std::string& config_path,
                              const nlohmann::json& flag_values) {
  nlohmann::json merged = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
    in >> merged;
  }
  for (const auto& [key, value] : flag_values.items()) {
    const std::string flag = "--" + std::string(key);
    if (cmd->count(flag) > 0 || !merged.contains(key)) merged[key] = value;
  }
  return merged;
}

struct EmbeddingsDeleter {
  void operator()(tl_embeddings* e) const { tl_embeddings_free(e); }
};
struct DatasetDeleter {
  void operator()(tl_dataset* d) const { tl_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(tl_model* m) const { tl_model_free(m); }
};
using EmbeddingsPtr = std::unique_ptr<tl_embeddings, EmbeddingsDeleter>;
using DatasetPtr = std::unique_ptr<tl_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<tl_model, ModelDeleter>;

std::string default_glove(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const char* env = std::getenv(kGloveEnv);
  return env ? env : "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-dependent models of human trust in robot capabilities"};
  app.require_subcommand(1);

  // ---- embed ----
  auto* embed = app.add_subcommand(
      "embed", "Embed catalog task descriptions into feature vectors");
  std::string embed_catalog, embed_glove, embed_out;
  embed->add_option("--catalog", embed_catalog, "task catalog TSV")->required();
  embed->add_option("--glove", embed_glove,
                    std::string("word embedding text file (default: $") +
                        kGloveEnv + ")");
  embed->add_option("--out", embed_out, "feature file to write")->required();

  // ---- simulate ----
  auto* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic study-shaped dataset");
  std::string sim_config, sim_out, sim_features_out;
  int sim_participants = 32, sim_tasks = 12, sim_groups = 2, sim_dim = 50;
  double sim_noise = 0.25;
  std::uint64_t sim_seed = 0;
  simulate->add_option("--config", sim_config, "JSON config overlay file");
  simulate->add_option("--participants", sim_participants, "number of participants");
  simulate->add_option("--tasks", sim_tasks, "number of tasks");
  simulate->add_option("--groups", sim_groups, "number of task groups");
  simulate->add_option("--feature-dim", sim_dim, "feature dimension");
  simulate->add_option("--noise", sim_noise, "score observation noise");
  simulate->add_option("--seed", sim_seed, "random seed");
  simulate->add_option("--out", sim_out, "dataset file to write")->required();
  simulate->add_option("--features-out", sim_features_out,
                       "feature file to write")->required();

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Fit a trust model");
  std::string train_model, train_data, train_features, train_config, train_out,
      train_log;
  std::uint64_t train_seed = 0;
  double train_lr = 1e-3;
  int train_epochs = 500, train_patience = 20;
  train_cmd->add_option("--model", train_model, "gp|pmgp|pogp|rnn|gpnn|lg|ct")
      ->required();
  train_cmd->add_option("--data", train_data, "dataset file")->required();
  train_cmd->add_option("--features", train_features, "feature file")->required();
  train_cmd->add_option("--config", train_config, "JSON config overlay file");
  train_cmd->add_option("--seed", train_seed, "random seed");
  train_cmd->add_option("--learning-rate", train_lr, "Adam learning rate");
  train_cmd->add_option("--max-epochs", train_epochs, "epoch budget");
  train_cmd->add_option("--patience", train_patience, "early-stopping patience");
  train_cmd->add_option("--out", train_out, "checkpoint to write")->required();
  train_cmd->add_option("--log", train_log,
                        "training log to write (default: <out>.log)");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "Run a cross-validation experiment");
  std::string eval_protocol, eval_data, eval_features, eval_config, eval_out,
      eval_detail;
  std::vector<std::string> eval_models;
  std::uint64_t eval_seed = 0;
  int eval_jobs = 1, eval_epochs = 500;
  eval_cmd->add_option("--experiment", eval_protocol, "e1|e2")->required();
  eval_cmd->add_option("--models", eval_models,
                       "model kinds (default: all seven)");
  eval_cmd->add_option("--data", eval_data, "dataset file")->required();
  eval_cmd->add_option("--features", eval_features, "feature file")->required();
  eval_cmd->add_option("--config", eval_config, "JSON config overlay file");
  eval_cmd->add_option("--seed", eval_seed, "random seed");
  eval_cmd->add_option("--jobs", eval_jobs, "concurrent fold workers");
  eval_cmd->add_option("--max-epochs", eval_epochs, "per-fold epoch budget");
  eval_cmd->add_option("--out", eval_out, "summary report to write")->required();
  eval_cmd->add_option("--detail", eval_detail, "per-fold detail file to write");

  // ---- predict ----
  auto* predict = app.add_subcommand(
      "predict", "Predict trust in a task from a checkpointed model");
  std::string pred_ckpt, pred_glove, pred_task;
  std::vector<std::string> pred_history;
  predict->add_option("--checkpoint", pred_ckpt, "model checkpoint")->required();
  predict->add_option("--glove", pred_glove,
                      std::string("word embedding text file (default: $") +
                          kGloveEnv + ")");
  predict
      ->add_option("--history", pred_history,
                   "observations as outcome:description, e.g. "
                   "\"success:Pick and place a cup\" (repeatable)")
      ->take_all();
  predict->add_option("--task-description", pred_task, "task to score")
      ->required();

  // ---- gradcheck ----
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of the analytic gradients");
  std::string gc_model;
  std::uint64_t gc_seed = 0;
  std::string gc_out;
  gradcheck->add_option("--model", gc_model, "gp|pmgp|pogp|rnn|gpnn|lg|ct")
      ->required();
  gradcheck->add_option("--seed", gc_seed, "random seed");
  gradcheck->add_option("--out", gc_out, "per-block report file to write");

  // ---- report ----
  auto* report = app.add_subcommand(
      "report", "Rebuild a summary table from a per-fold detail file");
  std::string rep_detail, rep_out;
  report->add_option("--detail", rep_detail, "per-fold detail file")->required();
  report->add_option("--out", rep_out, "summary report to write")->required();

  CLI11_PARSE(app, argc, argv);

  if (*embed) {
    const std::string glove = default_glove(embed_glove);
    if (glove.empty())
      return fail(std::string("no embedding file: pass --glove or set $") +
                  kGloveEnv);
    tl_embeddings* emb = nullptr;
    if (tl_embeddings_load(glove.c_str(), &emb)) return fail_api("loading " + glove);
    EmbeddingsPtr owner(emb);
    declare_output(embed_out);
    if (tl_embed_catalog(emb, embed_catalog.c_str(), embed_out.c_str()))
      return fail_api("embedding " + embed_catalog);
    std::printf("wrote %s (dimension %d)\n", embed_out.c_str(),
                tl_embeddings_dim(emb));
    return 0;
  }

  if (*simulate) {
    nlohmann::json cfg;
    try {
      nlohmann::json flag_map;
      flag_map["participants"] = sim_participants;
      flag_map["tasks"] = sim_tasks;
      flag_map["groups"] = sim_groups;
      flag_map["feature-dim"] = sim_dim;
      flag_map["noise"] = sim_noise;
      flag_map["seed"] = sim_seed;
      const nlohmann::json merged = overlay_config(simulate, sim_config, flag_map);
      cfg["n_participants"] = merged["participants"];
      cfg["n_tasks"] = merged["tasks"];
      cfg["n_groups"] = merged["groups"];
      cfg["feature_dim"] = merged["feature-dim"];
      cfg["noise"] = merged["noise"];
      cfg["seed"] = merged["seed"];
    } catch (const std::exception& e) {
      return fail(e.what());
    }
    tl_dataset* ds = nullptr;
    if (tl_dataset_generate(cfg.dump().c_str(), &ds))
      return fail_api("generating dataset");
    DatasetPtr owner(ds);
    declare_output(sim_out);
    declare_output(sim_features_out);
    if (tl_dataset_save(ds, sim_out.c_str(), sim_features_out.c_str()))
      return fail_api("writing " + sim_out);
    std::printf("wrote %s (%d records) and %s (%d tasks)\n", sim_out.c_str(),
                tl_dataset_num_records(ds), sim_features_out.c_str(),
                tl_dataset_num_tasks(ds));
    return 0;
  }

  if (*train_cmd) {
    nlohmann::json flag_map;
    flag_map["seed"] = train_seed;
    flag_map["learning-rate"] = train_lr;
    flag_map["max-epochs"] = train_epochs;
    flag_map["patience"] = train_patience;
    nlohmann::json merged;
    try {
      merged = overlay_config(train_cmd, train_config, flag_map);
    } catch (const std::exception& e) {
      return fail(e.what());
    }
    nlohmann::json tcfg;
    tcfg["seed"] = merged["seed"];
    tcfg["learning_rate"] = merged["learning-rate"];
    tcfg["max_epochs"] = merged["max-epochs"];
    tcfg["patience"] = merged["patience"];
    // model-structure keys may ride along in the same config file
    nlohmann::json mcfg = nlohmann::json::object();
    for (const char* key : {"feature_dim", "gp_latent_dim", "max_basis",
                            "task_embed_dim", "task_hidden", "perf_embed_dim",
                            "gru_layers", "residual_hidden", "lengthscales"})
      if (merged.contains(key)) mcfg[key] = merged[key];

    tl_dataset* ds = nullptr;
    if (tl_dataset_load(train_data.c_str(), train_features.c_str(), &ds))
      return fail_api("loading " + train_data);
    DatasetPtr ds_owner(ds);
    if (!mcfg.contains("feature_dim"))
      mcfg["feature_dim"] = tl_dataset_feature_dim(ds);

    tl_model* model = nullptr;
    if (tl_model_create(train_model.c_str(), mcfg.dump().c_str(),
                        merged["seed"].get<std::uint64_t>(), &model))
      return fail_api("creating model " + train_model);
    ModelPtr model_owner(model);

    const std::string log_path =
        train_log.empty() ? train_out + ".log" : train_log;
    declare_output(train_out);
    declare_output(log_path);
    if (tl_model_train(model, ds, tcfg.dump().c_str(), log_path.c_str()))
      return fail_api("training " + train_model);
    if (tl_model_save(model, train_out.c_str()))
      return fail_api("writing " + train_out);
    std::printf("wrote %s and %s\n", train_out.c_str(), log_path.c_str());
    return 0;
  }

  if (*eval_cmd) {
    nlohmann::json flag_map;
    flag_map["seed"] = eval_seed;
    flag_map["jobs"] = eval_jobs;
    flag_map["max-epochs"] = eval_epochs;
    nlohmann::json merged;
    try {
      merged = overlay_config(eval_cmd, eval_config, flag_map);
    } catch (const std::exception& e) {
      return fail(e.what());
    }
    nlohmann::json cfg;
    cfg["seed"] = merged["seed"];
    cfg["jobs"] = merged["jobs"];
    cfg["train"] = merged.contains("train") ? merged["train"]
                                            : nlohmann::json::object();
    if (eval_cmd->count("--max-epochs") > 0 || !cfg["train"].contains("max_epochs"))
      cfg["train"]["max_epochs"] = merged["max-epochs"];
    if (merged.contains("model")) cfg["model"] = merged["model"];
    if (merged.contains("n_folds")) cfg["n_folds"] = merged["n_folds"];
    if (!eval_models.empty())
      cfg["models"] = eval_models;
    else if (merged.contains("models"))
      cfg["models"] = merged["models"];

    tl_dataset* ds = nullptr;
    if (tl_dataset_load(eval_data.c_str(), eval_features.c_str(), &ds))
      return fail_api("loading " + eval_data);
    DatasetPtr owner(ds);
    declare_output(eval_out);
    if (!eval_detail.empty()) declare_output(eval_detail);
    if (tl_evaluate(ds, eval_protocol.c_str(), cfg.dump().c_str(),
                    eval_out.c_str(),
                    eval_detail.empty() ? nullptr : eval_detail.c_str()))
      return fail_api("running experiment " + eval_protocol);
    std::printf("wrote %s\n", eval_out.c_str());
    if (!eval_detail.empty()) std::printf("wrote %s\n", eval_detail.c_str());
    return 0;
  }

  if (*predict) {
    const std::string glove = default_glove(pred_glove);
    if (glove.empty())
      return fail(std::string("no embedding file: pass --glove or set $") +
                  kGloveEnv);
    tl_embeddings* emb = nullptr;
    if (tl_embeddings_load(glove.c_str(), &emb)) return fail_api("loading " + glove);
    EmbeddingsPtr emb_owner(emb);
    const int dim = tl_embeddings_dim(emb);

    tl_model* model = nullptr;
    if (tl_model_load(pred_ckpt.c_str(), &model))
      return fail_api("loading " + pred_ckpt);
    ModelPtr model_owner(model);

    std::vector<double> history_features;
    std::vector<double> outcomes;
    for (const std::string& entry : pred_history) {
      const auto colon = entry.find(':');
      if (colon == std::string::npos)
        return fail("history entry '" + entry + "' is not outcome:description");
      const std::string outcome_text = entry.substr(0, colon);
      double outcome = 0.0;
      if (outcome_text == "success" || outcome_text == "+1") {
        outcome = 1.0;
      } else if (outcome_text == "failure" || outcome_text == "-1") {
        outcome = -1.0;
      } else {
        try {
          outcome = std::stod(outcome_text);
        } catch (const std::exception&) {
          return fail("bad outcome '" + outcome_text +
                      "' (success|failure|number in [-1,1])");
        }
        if (outcome < -1.0 || outcome > 1.0)
          return fail("outcome " + outcome_text + " outside [-1, 1]");
      }
      std::vector<double> features(dim);
      if (tl_embeddings_embed(emb, entry.substr(colon + 1).c_str(),
                              features.data()))
        return fail_api("embedding history entry '" + entry + "'");
      history_features.insert(history_features.end(), features.begin(),
                              features.end());
      outcomes.push_back(outcome);
    }

    std::vector<double> task(dim);
    if (tl_embeddings_embed(emb, pred_task.c_str(), task.data()))
      return fail_api("embedding task description");
    double trust = 0.0;
    if (tl_model_predict_features(
            model, history_features.empty() ? nullptr : history_features.data(),
            outcomes.empty() ? nullptr : outcomes.data(),
            static_cast<int>(outcomes.size()), task.data(), dim, &trust))
      return fail_api("predicting");
    std::printf("%.6g\n", trust);
    return 0;
  }

  if (*gradcheck) {
    double max_err = 0.0;
    if (!gc_out.empty()) declare_output(gc_out);
    if (tl_model_gradcheck(gc_model.c_str(), gc_seed,
                           gc_out.empty() ? nullptr : gc_out.c_str(), &max_err))
      return fail_api("gradient check for " + gc_model);
    std::printf("%s max_rel_err %.6g %s\n", gc_model.c_str(), max_err,
                max_err < 1e-4 ? "pass" : "fail");
    return max_err < 1e-4 ? 0 : 1;
  }

  if (*report) {
    declare_output(rep_out);
    if (tl_report_from_detail(rep_detail.c_str(), rep_out.c_str()))
      return fail_api("rebuilding report from " + rep_detail);
    std::printf("wrote %s\n", rep_out.c_str());
    return 0;
  }

  return fail("no subcommand selected");
}
