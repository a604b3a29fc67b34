#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trustlab/task_features.hpp"

namespace trustlab {

// one robot performance observation fed to the trust models
struct Observation {
  FeatureVector features;
  double outcome = 1.0;  // c in [-1, +1]; study data uses exactly +/-1
  int time = 0;
};

struct ObservedEntry {
  std::string task_id;
  double outcome = 1.0;
  int score = 4;  // trust on the observed task, reported after the observation
};

struct TestedEntry {
  std::string task_id;
  int pre_score = 4;
  int post_score = 4;
};

// the participant's own category/difficulty assignment of a task
struct CellAssignment {
  std::string group;
  Difficulty difficulty = Difficulty::kEasy;
  bool operator==(const CellAssignment&) const = default;
};

struct ParticipantRecord {
  std::string participant_id;
  Domain domain = Domain::kHousehold;
  std::array<ObservedEntry, 2> observed;
  std::array<TestedEntry, 3> tested;
  std::map<std::string, CellAssignment> grouping;
};

struct Dataset {
  std::vector<TaskDescriptor> catalog;
  std::vector<ParticipantRecord> records;
  FeatureMap features;  // empty until attached

  const TaskDescriptor& task(const std::string& id) const;
  const FeatureVector& features_of(const std::string& id) const;
};

// (score - 1)/6 clipped to [0.01, 0.99]; scores outside 1..7 are rejected
double normalize_likert(int score);

// the two observations of a record, in presentation order
std::vector<Observation> to_observations(const ParticipantRecord& record,
                                         const FeatureMap& features);

// Versioned tab-separated container with [tasks] and [records] sections;
// all record invariants are enforced on load. Features travel separately.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& dataset, const std::string& path);
void attach_features(Dataset& dataset, FeatureMap features);
void validate_record(const ParticipantRecord& record, std::size_t index);

struct SyntheticConfig {
  int n_participants = 32;
  int n_tasks = 12;
  int n_groups = 2;
  std::uint64_t seed = 0;
  double noise = 0.25;       // score observation noise (pre-quantization)
  int feature_dim = 50;
  double success_shift = 1.2;
  double failure_shift = 1.2;
};

struct PlantedTask {
  std::string id;
  int group = 0;
  Difficulty difficulty = Difficulty::kEasy;
  Eigen::Vector2d position;
};

struct PlantedParticipant {
  int observed_group = 0;
  Difficulty observed_difficulty = Difficulty::kEasy;
  double outcome = 1.0;
  // latent trust sigma(f) per task, before observations and after both
  std::vector<double> tau_initial;
  std::vector<double> tau_final;
};

struct SyntheticDataset {
  Dataset dataset;  // features attached
  std::vector<PlantedTask> tasks;
  std::vector<PlantedParticipant> participants;
};

// Seeded generator of study-shaped data. Tasks get planted positions in a
// 2-d latent space (group centers 5 apart, difficulty along the second
// axis); features are a fixed random linear lift of the positions. Each
// participant carries a latent competence field that observations shift by
// a distance-decaying kernel, with larger shifts toward easier tasks after
// a success and toward harder tasks after a failure. Scores are the Likert
// quantization of the sigmoid of the field plus observation noise.
SyntheticDataset generate_synthetic(const SyntheticConfig& cfg);

}  // namespace trustlab
