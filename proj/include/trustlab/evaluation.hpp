#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trustlab/dataset.hpp"
#include "trustlab/models.hpp"
#include "trustlab/training.hpp"

namespace trustlab {

// One cross-validation fold. E1 folds hold out participants; E2 folds hold
// out every trust target attached to one task.
struct FoldSpec {
  std::string name;
  std::vector<int> test_records;          // E1: held-out participant indices
  std::optional<std::string> held_out_task;  // E2: the excluded task
  bool degenerate = false;  // no test targets (task never tested)
};

// 10 participant folds, shuffled by seed and partitioned as evenly as
// possible. Requires at least 10 participants.
std::vector<FoldSpec> make_folds_e1(const Dataset& dataset, std::uint64_t seed,
                                    int n_folds = 10);

// One fold per catalog task; folds whose task is never a tested task are
// flagged degenerate.
std::vector<FoldSpec> make_folds_e2(const Dataset& dataset);

// mean Bernoulli negative log-likelihood; errors on empty input
double nll(std::span<const double> predictions, std::span<const double> targets);

// mean absolute error; errors on empty input
double mae(std::span<const double> predictions, std::span<const double> targets);

// Per fold, subtract that fold's minimum score across models.
// scores[fold][model] -> dfb[fold][model]; every fold must score every model.
std::vector<std::map<std::string, double>> dfb(
    const std::vector<std::map<std::string, double>>& scores);

// |score_a - score_b| on the raw 1-7 scale at one time point
enum class TrustTime { kPre, kPost };
double trust_distance(const ParticipantRecord& record,
                      const std::string& task_a, const std::string& task_b,
                      TrustTime time);

// |score at t2 - score at t1| for one tested task
double trust_change(const ParticipantRecord& record, const std::string& task);

struct ExperimentConfig {
  std::vector<ModelKind> models = all_model_kinds();
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 0;
  int n_folds_e1 = 10;
  int jobs = 1;  // folds evaluated concurrently when > 1
};

struct ModelFoldScore {
  std::string fold;
  double nll = 0.0;
  double mae = 0.0;
  int n_targets = 0;
};

struct ModelSummary {
  ModelKind kind = ModelKind::kCt;
  std::vector<ModelFoldScore> folds;
  double nll_mean = 0.0, nll_se = 0.0;
  double mae_mean = 0.0, mae_se = 0.0;
  double nll_dfb = 0.0, mae_dfb = 0.0;  // mean over folds
};

struct MetricsReport {
  std::string protocol;  // "E1" or "E2"
  std::vector<FoldSpec> folds;
  std::vector<ModelSummary> models;
};

enum class Protocol { kE1, kE2 };

// Trains every model on every fold's training targets and scores the fold's
// held-out pre- and post-update trust targets on tested tasks. Fold means
// are weighted equally; standard errors are across folds. A failed fold
// aborts with diagnostics.
MetricsReport run_experiment(const Dataset& dataset, Protocol protocol,
                             const ExperimentConfig& cfg);

// model x {NLL, MAE, NLL_DfB, MAE_DfB} table with standard errors
std::string format_report(const MetricsReport& report);
// one line per (model, fold) with nll/mae/n_targets
std::string format_fold_detail(const MetricsReport& report);

}  // namespace trustlab
