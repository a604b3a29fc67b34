#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

#include "trustlab/task_features.hpp"

namespace trustlab {

// Ordered, named collection of trainable arrays. Constrained parameters are
// stored in unconstrained space (log for scales, logit for probabilities).
class ParamSet {
 public:
  void add(const std::string& name, Eigen::MatrixXd value);
  bool has(const std::string& name) const;
  Eigen::MatrixXd& at(const std::string& name);
  const Eigen::MatrixXd& at(const std::string& name) const;
  std::size_t count() const { return entries_.size(); }
  std::size_t total_size() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // zero-filled set with identical names and shapes
  ParamSet zeros_like() const;
  bool same_shapes(const ParamSet& other) const;

 private:
  std::vector<std::pair<std::string, Eigen::MatrixXd>> entries_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ParamSet m, v;
  int t = 0;
};

AdamState make_adam_state(const ParamSet& params);
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
               const AdamConfig& cfg);

// Versioned JSON checkpoint. Array payloads are hex-encoded IEEE-754 doubles
// so that load(save(p)) is bit-exact.
void save_checkpoint(const std::string& path, const std::string& model,
                     const std::string& config_json, const ParamSet& params);
struct Checkpoint {
  std::string model;
  std::string config_json;
  ParamSet params;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace trustlab
