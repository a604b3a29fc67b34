#include "trustlab/task_features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace trustlab {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_strip_punct(char c) {
  static const std::string punct = ".,;:!?\"'()";
  return punct.find(c) != std::string::npos;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream iss(line);
  while (std::getline(iss, field, sep)) out.push_back(field);
  return out;
}

}  // namespace

Domain parse_domain(const std::string& s) {
  if (s == "household") return Domain::kHousehold;
  if (s == "driving") return Domain::kDriving;
  throw Error("unknown domain '" + s + "'");
}

Category parse_category(const std::string& s) {
  if (s == "A") return Category::kA;
  if (s == "B") return Category::kB;
  if (s == "C") return Category::kC;
  if (s == "D") return Category::kD;
  throw Error("unknown category '" + s + "'");
}

Difficulty parse_difficulty(const std::string& s) {
  if (s == "easy") return Difficulty::kEasy;
  if (s == "difficult") return Difficulty::kDifficult;
  throw Error("unknown difficulty '" + s + "'");
}

std::string to_string(Domain d) {
  return d == Domain::kHousehold ? "household" : "driving";
}
std::string to_string(Category c) {
  switch (c) {
    case Category::kA: return "A";
    case Category::kB: return "B";
    case Category::kC: return "C";
    default: return "D";
  }
}
std::string to_string(Difficulty d) {
  return d == Difficulty::kEasy ? "easy" : "difficult";
}

const FeatureVector& EmbeddingTable::at(const std::string& token) const {
  auto it = table_.find(token);
  if (it == table_.end()) throw Error("token not in embedding table: " + token);
  return it->second;
}

void EmbeddingTable::insert(const std::string& token, FeatureVector v) {
  if (dim_ == 0) dim_ = static_cast<int>(v.size());
  if (v.size() != dim_)
    throw Error("embedding dimension mismatch for token '" + token + "'");
  table_[token] = std::move(v);
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file: " + path);
  EmbeddingTable table;
  std::string line;
  int lineno = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_ws(line);
    if (fields.size() < 2)
      throw Error(path + ":" + std::to_string(lineno) + ": malformed embedding line");
    if (dim < 0) dim = static_cast<int>(fields.size()) - 1;
    if (static_cast<int>(fields.size()) - 1 != dim)
      throw Error(path + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(dim) + " values, got " +
                  std::to_string(fields.size() - 1));
    FeatureVector v(dim);
    for (int i = 0; i < dim; ++i) {
      try {
        std::size_t pos = 0;
        v(i) = std::stod(fields[i + 1], &pos);
        if (pos != fields[i + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error(path + ":" + std::to_string(lineno) + ": non-numeric value '" +
                    fields[i + 1] + "'");
      }
      if (!std::isfinite(v(i)))
        throw Error(path + ":" + std::to_string(lineno) + ": non-finite value");
    }
    table.insert(lower(fields[0]), std::move(v));
  }
  if (table.size() == 0) throw Error("empty embedding file: " + path);
  return table;
}

std::vector<std::string> tokenize(const std::string& description) {
  std::vector<std::string> out;
  for (auto& raw : split_ws(lower(description))) {
    std::size_t b = 0, e = raw.size();
    while (b < e && is_strip_punct(raw[b])) ++b;
    while (e > b && is_strip_punct(raw[e - 1])) --e;
    if (e > b) out.push_back(raw.substr(b, e - b));
  }
  return out;
}

FeatureVector embed_description(const std::string& description,
                                const EmbeddingTable& table) {
  FeatureVector acc = FeatureVector::Zero(table.dim());
  int n = 0;
  for (const auto& tok : tokenize(description)) {
    if (!table.contains(tok)) continue;
    acc += table.at(tok);
    ++n;
  }
  if (n == 0)
    throw Error("no in-vocabulary tokens in description: '" + description + "'");
  return acc / n;
}

FeatureVector embed_task(const TaskDescriptor& task, const EmbeddingTable& table) {
  return embed_description(task.description, table);
}

std::vector<TaskDescriptor> load_task_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open catalog file: " + path);
  std::vector<TaskDescriptor> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_on(line, '\t');
    if (!header_done) {
      if (fields.size() != 5 || fields[0] != "id")
        throw Error(path + ": expected header 'id\\tdomain\\tcategory\\tdifficulty\\tdescription'");
      header_done = true;
      continue;
    }
    if (fields.size() != 5)
      throw Error(path + ":" + std::to_string(lineno) + ": expected 5 fields");
    TaskDescriptor t;
    t.id = fields[0];
    t.domain = parse_domain(fields[1]);
    t.category = parse_category(fields[2]);
    t.difficulty = parse_difficulty(fields[3]);
    t.description = fields[4];
    if (t.description.empty())
      throw Error(path + ":" + std::to_string(lineno) + ": empty description");
    const bool household_cat =
        t.category == Category::kA || t.category == Category::kB;
    if (household_cat != (t.domain == Domain::kHousehold))
      throw Error(path + ":" + std::to_string(lineno) + ": category " +
                  to_string(t.category) + " invalid for domain " +
                  to_string(t.domain));
    if (!seen.insert(t.id).second)
      throw Error(path + ":" + std::to_string(lineno) + ": duplicate task id '" +
                  t.id + "'");
    out.push_back(std::move(t));
  }
  return out;
}

FeatureMap load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature file: " + path);
  FeatureMap out;
  std::string line;
  int lineno = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_ws(line);
    if (fields.size() < 2)
      throw Error(path + ":" + std::to_string(lineno) + ": malformed feature line");
    if (dim < 0) dim = static_cast<int>(fields.size()) - 1;
    if (static_cast<int>(fields.size()) - 1 != dim)
      throw Error(path + ":" + std::to_string(lineno) + ": inconsistent dimension");
    FeatureVector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = std::stod(fields[i + 1]);
    out[fields[0]] = std::move(v);
  }
  return out;
}

void save_features(const FeatureMap& features, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write feature file: " + path);
  out.precision(17);
  for (const auto& [id, v] : features) {
    out << id;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v(i);
    out << '\n';
  }
  if (!out) throw Error("failed writing feature file: " + path);
}

}  // namespace trustlab
