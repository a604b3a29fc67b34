#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trustlab/dataset.hpp"
#include "trustlab/models.hpp"
#include "trustlab/params.hpp"

namespace trustlab {

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 500;
  double validation_fraction = 0.15;
  int patience = 20;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& json);
};

// -sum[ t log p + (1 - t) log(1 - p) ]
double bernoulli_loss(std::span<const double> predictions,
                      std::span<const double> targets);

// One normalized trust score a model is fit to / evaluated on.
struct TargetRef {
  enum class Phase { kPre, kObserved, kPost };
  Phase phase = Phase::kPre;
  int index = 0;  // entry index within the phase
  std::string task_id;
  double value = 0.5;  // normalized Likert target
};

// all eight targets of a record: 3 pre, 2 observed, 3 post
std::vector<TargetRef> record_targets(const ParticipantRecord& record);

// keep-filter over targets; null means keep everything
using TargetFilter =
    std::function<bool(const ParticipantRecord&, const TargetRef&)>;

// Rolls one record and returns the predictions aligned with
// record_targets(). States: pre targets from the initial state, observed
// target i after i+1 observations, post targets after both.
std::vector<ModelGraph::Prediction> record_predictions(
    const ModelGraph& graph, const ParticipantRecord& record,
    const FeatureMap& features);

// Scalar training loss over the given records with exact reverse-mode
// gradients for every parameter. Gradients are accumulated into *grads
// when non-null.
double model_loss_and_grad(const TrustModel& model, const Dataset& dataset,
                           const std::vector<int>& record_indices,
                           const TargetFilter& filter, ParamSet* grads);

struct TrainResult {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

// Full-batch Adam with participant-granular validation split and early
// stopping; the model is left holding the best-validation parameters.
// An empty record_indices list means "train on every record".
TrainResult train(TrustModel& model, const Dataset& dataset,
                  const TrainConfig& cfg, const TargetFilter& filter = nullptr,
                  const std::vector<int>& record_indices = {});

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_rel_err = 0.0;
  bool passed(double tol = 1e-4) const { return max_rel_err < tol; }
};

// Central finite differences against the analytic gradients on a small
// batch; coordinates are subsampled per parameter block. `corrupt` adds a
// constant to the analytic gradients (negative-control hook).
GradCheckReport gradcheck_model(TrustModel& model, const Dataset& dataset,
                                std::uint64_t seed, int coords_per_block = 8,
                                double step = 1e-5, double corrupt = 0.0);

// small study-shaped dataset used by gradcheck and smoke tests
Dataset gradcheck_dataset(std::uint64_t seed, int feature_dim);

}  // namespace trustlab
