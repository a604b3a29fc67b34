#include "trustlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "trustlab/rng.hpp"

namespace trustlab {

namespace {

constexpr const char* kMagic = "#trustlab-data v1";

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int quantize_likert(double v) {
  const int s = static_cast<int>(std::lround(1.0 + 6.0 * v));
  return std::clamp(s, 1, 7);
}

std::vector<std::string> split_tab(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream iss(line);
  while (std::getline(iss, field, '\t')) out.push_back(field);
  return out;
}

int parse_score(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error("invalid " + what + " score: '" + s + "'");
  }
}

std::string format_outcome(double c) {
  if (c == 1.0) return "+1";
  if (c == -1.0) return "-1";
  std::ostringstream os;
  os.precision(17);
  os << c;
  return os.str();
}

std::string format_grouping(const ParticipantRecord& r) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [task, cell] : r.grouping) {
    if (!first) os << ';';
    first = false;
    os << task << '=' << cell.group << ':' << to_string(cell.difficulty);
  }
  return os.str();
}

std::map<std::string, CellAssignment> parse_grouping(const std::string& s) {
  std::map<std::string, CellAssignment> out;
  std::istringstream iss(s);
  std::string item;
  while (std::getline(iss, item, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    const auto colon = item.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos)
      throw Error("malformed grouping entry: '" + item + "'");
    CellAssignment cell;
    cell.group = item.substr(eq + 1, colon - eq - 1);
    cell.difficulty = parse_difficulty(item.substr(colon + 1));
    out[item.substr(0, eq)] = cell;
  }
  return out;
}

}  // namespace

const TaskDescriptor& Dataset::task(const std::string& id) const {
  for (const auto& t : catalog)
    if (t.id == id) return t;
  throw Error("task id not in catalog: " + id);
}

const FeatureVector& Dataset::features_of(const std::string& id) const {
  auto it = features.find(id);
  if (it == features.end()) throw Error("no features for task: " + id);
  return it->second;
}

double normalize_likert(int score) {
  if (score < 1 || score > 7)
    throw Error("Likert score out of range: " + std::to_string(score));
  return std::clamp((score - 1) / 6.0, 0.01, 0.99);
}

std::vector<Observation> to_observations(const ParticipantRecord& record,
                                         const FeatureMap& features) {
  std::vector<Observation> out;
  int t = 0;
  for (const auto& obs : record.observed) {
    auto it = features.find(obs.task_id);
    if (it == features.end()) throw Error("no features for task: " + obs.task_id);
    out.push_back(Observation{it->second, obs.outcome, t++});
  }
  return out;
}

void validate_record(const ParticipantRecord& r, std::size_t index) {
  const std::string at = "record " + std::to_string(index) + " (" +
                         r.participant_id + "): ";
  if (r.participant_id.empty()) throw Error(at + "empty participant id");
  if (r.observed[0].outcome != r.observed[1].outcome)
    throw Error(at + "observed outcomes differ");
  for (const auto& o : r.observed) {
    if (o.outcome < -1.0 || o.outcome > 1.0)
      throw Error(at + "outcome outside [-1,+1]");
    if (o.score < 1 || o.score > 7) throw Error(at + "observed score out of range");
  }
  if (r.observed[0].task_id == r.observed[1].task_id)
    throw Error(at + "duplicate observed task");
  for (const auto& t : r.tested) {
    if (t.pre_score < 1 || t.pre_score > 7 || t.post_score < 1 || t.post_score > 7)
      throw Error(at + "tested score out of range");
  }
  auto cell_of = [&](const std::string& task) {
    auto it = r.grouping.find(task);
    if (it == r.grouping.end()) throw Error(at + "no grouping for task " + task);
    return it->second;
  };
  const CellAssignment own = cell_of(r.observed[0].task_id);
  if (!(cell_of(r.observed[1].task_id) == own))
    throw Error(at + "observed tasks in different cells");
  std::set<std::pair<std::string, std::string>> tested_cells;
  for (const auto& t : r.tested) {
    const CellAssignment c = cell_of(t.task_id);
    if (c == own) throw Error(at + "tested task shares the observed cell");
    tested_cells.insert({c.group, to_string(c.difficulty)});
  }
  if (tested_cells.size() != 3)
    throw Error(at + "tested tasks must cover three distinct comparison cells");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw Error(path + ": missing '" + kMagic + "' header");

  Dataset ds;
  enum class Section { kNone, kTasks, kRecords } section = Section::kNone;
  bool header_skipped = false;
  std::set<std::string> task_ids, participant_ids;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line == "[tasks]") {
      section = Section::kTasks;
      header_skipped = false;
      continue;
    }
    if (line == "[records]") {
      section = Section::kRecords;
      header_skipped = false;
      continue;
    }
    if (!header_skipped) {
      header_skipped = true;  // column header line
      continue;
    }
    auto f = split_tab(line);
    const std::string at = path + ":" + std::to_string(lineno) + ": ";
    if (section == Section::kTasks) {
      if (f.size() != 5) throw Error(at + "expected 5 task fields");
      TaskDescriptor t;
      t.id = f[0];
      t.domain = parse_domain(f[1]);
      t.category = parse_category(f[2]);
      t.difficulty = parse_difficulty(f[3]);
      t.description = f[4];
      if (!task_ids.insert(t.id).second)
        throw Error(at + "duplicate task id " + t.id);
      ds.catalog.push_back(std::move(t));
    } else if (section == Section::kRecords) {
      if (f.size() != 18) throw Error(at + "expected 18 record fields");
      ParticipantRecord r;
      r.participant_id = f[0];
      r.domain = parse_domain(f[1]);
      for (int i = 0; i < 2; ++i) {
        r.observed[i].task_id = f[2 + 3 * i];
        r.observed[i].outcome = std::stod(f[3 + 3 * i]);
        r.observed[i].score = parse_score(f[4 + 3 * i], "observed");
      }
      for (int i = 0; i < 3; ++i) {
        r.tested[i].task_id = f[8 + 3 * i];
        r.tested[i].pre_score = parse_score(f[9 + 3 * i], "pre");
        r.tested[i].post_score = parse_score(f[10 + 3 * i], "post");
      }
      r.grouping = parse_grouping(f[17]);
      if (!participant_ids.insert(r.participant_id).second)
        throw Error(at + "duplicate participant id " + r.participant_id);
      for (const auto& o : r.observed)
        if (!task_ids.count(o.task_id)) throw Error(at + "unknown task " + o.task_id);
      for (const auto& t : r.tested)
        if (!task_ids.count(t.task_id)) throw Error(at + "unknown task " + t.task_id);
      validate_record(r, ds.records.size());
      ds.records.push_back(std::move(r));
    } else {
      throw Error(at + "content outside a section");
    }
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file: " + path);
  out << kMagic << '\n';
  out << "[tasks]\n";
  out << "id\tdomain\tcategory\tdifficulty\tdescription\n";
  for (const auto& t : ds.catalog)
    out << t.id << '\t' << to_string(t.domain) << '\t' << to_string(t.category)
        << '\t' << to_string(t.difficulty) << '\t' << t.description << '\n';
  out << "[records]\n";
  out << "participant\tdomain\tobs1_task\tobs1_outcome\tobs1_score"
         "\tobs2_task\tobs2_outcome\tobs2_score"
         "\ttest1_task\ttest1_pre\ttest1_post"
         "\ttest2_task\ttest2_pre\ttest2_post"
         "\ttest3_task\ttest3_pre\ttest3_post\tgrouping\n";
  for (const auto& r : ds.records) {
    out << r.participant_id << '\t' << to_string(r.domain);
    for (const auto& o : r.observed)
      out << '\t' << o.task_id << '\t' << format_outcome(o.outcome) << '\t'
          << o.score;
    for (const auto& t : r.tested)
      out << '\t' << t.task_id << '\t' << t.pre_score << '\t' << t.post_score;
    out << '\t' << format_grouping(r) << '\n';
  }
  if (!out) throw Error("failed writing dataset file: " + path);
}

void attach_features(Dataset& ds, FeatureMap features) {
  for (const auto& t : ds.catalog)
    if (!features.count(t.id)) throw Error("features missing for task " + t.id);
  ds.features = std::move(features);
}

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  const int n_cells = cfg.n_groups * 2;
  if (cfg.n_groups < 2) throw Error("generator needs at least 2 groups");
  if (cfg.n_tasks % n_cells != 0)
    throw Error("n_tasks must divide evenly into group/difficulty cells");
  const int per_cell = cfg.n_tasks / n_cells;
  if (per_cell < 2) throw Error("need at least 2 tasks per cell");
  if (cfg.n_participants < 1) throw Error("need at least one participant");
  if (cfg.noise < 0.0) throw Error("noise must be nonnegative");

  Rng rng(cfg.seed ^ 0x74727573746c6162ULL);
  SyntheticDataset out;
  Dataset& ds = out.dataset;

  // planted task layout
  for (int g = 0; g < cfg.n_groups; ++g) {
    for (int d = 0; d < 2; ++d) {
      for (int j = 0; j < per_cell; ++j) {
        PlantedTask t;
        const int idx = static_cast<int>(out.tasks.size()) + 1;
        t.id = (idx < 10 ? "T0" : "T") + std::to_string(idx);
        t.group = g;
        t.difficulty = d == 0 ? Difficulty::kEasy : Difficulty::kDifficult;
        t.position = Eigen::Vector2d(5.0 * g + rng.normal(0.0, 0.3),
                                     (d == 0 ? -1.5 : 1.5) + rng.normal(0.0, 0.3));
        out.tasks.push_back(std::move(t));
      }
    }
  }
  for (const auto& t : out.tasks) {
    TaskDescriptor td;
    td.id = t.id;
    td.domain = Domain::kHousehold;
    td.category = t.group % 2 == 0 ? Category::kA : Category::kB;
    td.difficulty = t.difficulty;
    td.description = "synthetic task " + t.id + " group " +
                     std::to_string(t.group + 1) + " " + to_string(t.difficulty);
    ds.catalog.push_back(std::move(td));
  }

  // fixed random lift of planted positions to feature space
  Eigen::MatrixXd lift(cfg.feature_dim, 2);
  for (int i = 0; i < lift.size(); ++i)
    lift(i / 2, i % 2) = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.feature_dim)));
  FeatureMap features;
  for (const auto& t : out.tasks) {
    FeatureVector x = lift * t.position;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += rng.normal(0.0, 0.02);
    features[t.id] = std::move(x);
  }

  const double diff_slope = 0.5;
  const double group_ls = 2.5, shift_ls = 3.0, asym = 0.25;
  std::vector<Eigen::Vector2d> centers(cfg.n_groups);
  for (int g = 0; g < cfg.n_groups; ++g) centers[g] = Eigen::Vector2d(5.0 * g, 0.0);

  auto cell_group = [&](const std::string& group) {
    return std::stoi(group.substr(1)) - 1;
  };
  (void)cell_group;

  for (int i = 0; i < cfg.n_participants; ++i) {
    PlantedParticipant pp;
    const int cell = i % n_cells;
    pp.observed_group = cell / 2;
    pp.observed_difficulty = cell % 2 == 0 ? Difficulty::kEasy : Difficulty::kDifficult;
    pp.outcome = ((i / n_cells) % 2 == 0) ? 1.0 : -1.0;

    const double base = rng.normal(0.4, 0.5);
    Eigen::VectorXd group_offset(cfg.n_groups);
    for (int g = 0; g < cfg.n_groups; ++g) group_offset(g) = rng.normal(0.0, 0.7);
    auto field = [&](const Eigen::Vector2d& p) {
      double f = base - diff_slope * p.y();
      for (int g = 0; g < cfg.n_groups; ++g)
        f += group_offset(g) *
             std::exp(-(p - centers[g]).squaredNorm() / (2.0 * group_ls * group_ls));
      return f;
    };
    std::vector<double> f_tasks(out.tasks.size());
    for (std::size_t j = 0; j < out.tasks.size(); ++j)
      f_tasks[j] = field(out.tasks[j].position);

    // pick observed tasks from the participant's own cell
    std::vector<int> own, comparison_cells;
    for (std::size_t j = 0; j < out.tasks.size(); ++j) {
      const auto& t = out.tasks[j];
      if (t.group == pp.observed_group && t.difficulty == pp.observed_difficulty)
        own.push_back(static_cast<int>(j));
    }
    rng.shuffle(own);
    const int obs_a = own[0], obs_b = own[1];

    for (int c = 0; c < n_cells; ++c)
      if (c != cell) comparison_cells.push_back(c);
    rng.shuffle(comparison_cells);
    comparison_cells.resize(3);
    std::sort(comparison_cells.begin(), comparison_cells.end());
    std::vector<int> tested;
    for (int c : comparison_cells) {
      std::vector<int> in_cell;
      for (std::size_t j = 0; j < out.tasks.size(); ++j) {
        const auto& t = out.tasks[j];
        const int tc = t.group * 2 + (t.difficulty == Difficulty::kEasy ? 0 : 1);
        if (tc == c) in_cell.push_back(static_cast<int>(j));
      }
      tested.push_back(in_cell[rng.uniform_int(static_cast<int>(in_cell.size()))]);
    }

    ParticipantRecord rec;
    rec.participant_id = "P" + std::to_string(i + 1);
    rec.domain = Domain::kHousehold;
    for (const auto& t : out.tasks) {
      CellAssignment cellref;
      cellref.group = "G" + std::to_string(t.group + 1);
      cellref.difficulty = t.difficulty;
      rec.grouping[t.id] = cellref;
    }

    auto score_of = [&](int task_idx) {
      const double eps = rng.normal();  // drawn unconditionally, keeps streams aligned
      return quantize_likert(sigmoid(f_tasks[task_idx] + cfg.noise * eps));
    };

    pp.tau_initial.resize(out.tasks.size());
    for (std::size_t j = 0; j < out.tasks.size(); ++j)
      pp.tau_initial[j] = sigmoid(f_tasks[j]);

    for (int k = 0; k < 3; ++k) {
      rec.tested[k].task_id = out.tasks[tested[k]].id;
      rec.tested[k].pre_score = score_of(tested[k]);
    }

    const double shift0 = pp.outcome > 0 ? cfg.success_shift : cfg.failure_shift;
    auto observe = [&](int obs_idx) {
      const Eigen::Vector2d po = out.tasks[obs_idx].position;
      for (std::size_t j = 0; j < out.tasks.size(); ++j) {
        const Eigen::Vector2d p = out.tasks[j].position;
        const double kernel =
            std::exp(-(p - po).squaredNorm() / (2.0 * shift_ls * shift_ls));
        const double tilt = std::clamp(
            1.0 + asym * pp.outcome * (po.y() - p.y()), 0.1, 3.0);
        f_tasks[j] += pp.outcome * shift0 * kernel * tilt;
      }
    };

    const int obs_order[2] = {obs_a, obs_b};
    for (int k = 0; k < 2; ++k) {
      observe(obs_order[k]);
      rec.observed[k].task_id = out.tasks[obs_order[k]].id;
      rec.observed[k].outcome = pp.outcome;
      rec.observed[k].score = score_of(obs_order[k]);
    }
    for (int k = 0; k < 3; ++k)
      rec.tested[k].post_score = score_of(tested[k]);

    pp.tau_final.resize(out.tasks.size());
    for (std::size_t j = 0; j < out.tasks.size(); ++j)
      pp.tau_final[j] = sigmoid(f_tasks[j]);

    validate_record(rec, ds.records.size());
    ds.records.push_back(std::move(rec));
    out.participants.push_back(std::move(pp));
  }

  attach_features(ds, std::move(features));
  return out;
}

}  // namespace trustlab
