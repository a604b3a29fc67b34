#pragma once

#include <Eigen/Core>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace trustlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Domain { kHousehold, kDriving };
enum class Category { kA, kB, kC, kD };
enum class Difficulty { kEasy, kDifficult };

Domain parse_domain(const std::string& s);
Category parse_category(const std::string& s);
Difficulty parse_difficulty(const std::string& s);
std::string to_string(Domain d);
std::string to_string(Category c);
std::string to_string(Difficulty d);

struct TaskDescriptor {
  std::string id;
  Domain domain = Domain::kHousehold;
  Category category = Category::kA;
  Difficulty difficulty = Difficulty::kEasy;
  std::string description;
};

using FeatureVector = Eigen::VectorXd;

// token -> embedding vector; all vectors share one dimension
class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  bool contains(const std::string& token) const { return table_.count(token) > 0; }
  const FeatureVector& at(const std::string& token) const;
  void insert(const std::string& token, FeatureVector v);

 private:
  int dim_;
  std::map<std::string, FeatureVector> table_;
};

// Plain text, one token followed by whitespace-separated decimals per line
// (the published GloVe format). Dimension is fixed by the first line.
EmbeddingTable load_embeddings(const std::string& path);

// Lowercase, whitespace split, leading/trailing punctuation stripped;
// internal hyphens are preserved.
std::vector<std::string> tokenize(const std::string& description);

// Element-wise mean over the in-vocabulary tokens of the description.
// Throws if every token is out of vocabulary.
FeatureVector embed_task(const TaskDescriptor& task, const EmbeddingTable& table);
FeatureVector embed_description(const std::string& description,
                                const EmbeddingTable& table);

// Tab-separated catalog with header: id, domain, category, difficulty,
// description. Household tasks carry categories A/B, driving C/D.
std::vector<TaskDescriptor> load_task_catalog(const std::string& path);

// task id -> feature vector, persisted as "id v1 ... vD" lines
using FeatureMap = std::map<std::string, FeatureVector>;
FeatureMap load_features(const std::string& path);
void save_features(const FeatureMap& features, const std::string& path);

}  // namespace trustlab
