#include "trustlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "trustlab/rng.hpp"

namespace trustlab {
namespace {

bool record_tests_task(const ParticipantRecord& record,
                       const std::string& task_id) {
  return std::any_of(record.tested.begin(), record.tested.end(),
                     [&](const TestedEntry& t) { return t.task_id == task_id; });
}

// held-out trust targets of one record: pre and post scores on tested tasks
std::vector<TargetRef> eval_targets(const ParticipantRecord& record) {
  std::vector<TargetRef> out;
  for (const TargetRef& t : record_targets(record)) {
    if (t.phase != TargetRef::Phase::kObserved) out.push_back(t);
  }
  return out;
}

double fold_mean(const std::vector<ModelFoldScore>& folds,
                 double ModelFoldScore::* member) {
  double sum = 0.0;
  for (const auto& f : folds) sum += f.*member;
  return sum / static_cast<double>(folds.size());
}

double fold_se(const std::vector<ModelFoldScore>& folds,
               double ModelFoldScore::* member, double mean) {
  const std::size_t n = folds.size();
  if (n < 2) return 0.0;
  double ss = 0.0;
  for (const auto& f : folds) {
    const double d = f.*member - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n - 1)) /
         std::sqrt(static_cast<double>(n));
}

}  // namespace

std::vector<FoldSpec> make_folds_e1(const Dataset& dataset, std::uint64_t seed,
                                    int n_folds) {
  const int n = static_cast<int>(dataset.records.size());
  if (n_folds < 1) throw Error("make_folds_e1: need at least one fold");
  if (n < n_folds)
    throw Error("make_folds_e1: need at least " + std::to_string(n_folds) +
                " participants, got " + std::to_string(n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed ^ 0x65316625ULL);
  rng.shuffle(order);
  std::vector<FoldSpec> folds(n_folds);
  const int base = n / n_folds;
  const int rem = n % n_folds;
  int pos = 0;
  for (int f = 0; f < n_folds; ++f) {
    const int size = base + (f < rem ? 1 : 0);
    FoldSpec& fold = folds[f];
    fold.name = "e1-fold" + std::to_string(f + 1);
    fold.test_records.assign(order.begin() + pos, order.begin() + pos + size);
    std::sort(fold.test_records.begin(), fold.test_records.end());
    pos += size;
  }
  return folds;
}

std::vector<FoldSpec> make_folds_e2(const Dataset& dataset) {
  std::vector<FoldSpec> folds;
  for (const TaskDescriptor& task : dataset.catalog) {
    FoldSpec fold;
    fold.name = "e2-" + task.id;
    fold.held_out_task = task.id;
    for (int i = 0; i < static_cast<int>(dataset.records.size()); ++i) {
      if (record_tests_task(dataset.records[i], task.id))
        fold.test_records.push_back(i);
    }
    fold.degenerate = fold.test_records.empty();
    folds.push_back(std::move(fold));
  }
  return folds;
}

double nll(std::span<const double> predictions,
           std::span<const double> targets) {
  if (predictions.empty()) throw Error("nll: empty input");
  return bernoulli_loss(predictions, targets) /
         static_cast<double>(predictions.size());
}

double mae(std::span<const double> predictions,
           std::span<const double> targets) {
  if (predictions.empty()) throw Error("mae: empty input");
  if (predictions.size() != targets.size())
    throw Error("mae: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    sum += std::abs(predictions[i] - targets[i]);
  return sum / static_cast<double>(predictions.size());
}

std::vector<std::map<std::string, double>> dfb(
    const std::vector<std::map<std::string, double>>& scores) {
  std::vector<std::map<std::string, double>> out;
  out.reserve(scores.size());
  std::set<std::string> models;
  for (const auto& fold : scores)
    for (const auto& [name, _] : fold) models.insert(name);
  for (const auto& fold : scores) {
    double best = std::numeric_limits<double>::infinity();
    for (const std::string& name : models) {
      auto it = fold.find(name);
      if (it == fold.end()) throw Error("dfb: missing score for model " + name);
      best = std::min(best, it->second);
    }
    std::map<std::string, double> rel;
    for (const auto& [name, score] : fold) rel[name] = score - best;
    out.push_back(std::move(rel));
  }
  return out;
}

double trust_distance(const ParticipantRecord& record, const std::string& task_a,
                      const std::string& task_b, TrustTime time) {
  auto score_of = [&](const std::string& task_id) -> int {
    for (const TestedEntry& t : record.tested) {
      if (t.task_id == task_id)
        return time == TrustTime::kPre ? t.pre_score : t.post_score;
    }
    if (time == TrustTime::kPost) {
      for (const ObservedEntry& o : record.observed) {
        if (o.task_id == task_id) return o.score;
      }
    }
    throw Error("trust_distance: no score for task " + task_id);
  };
  return std::abs(score_of(task_a) - score_of(task_b));
}

double trust_change(const ParticipantRecord& record, const std::string& task) {
  for (const TestedEntry& t : record.tested) {
    if (t.task_id == task) return std::abs(t.post_score - t.pre_score);
  }
  throw Error("trust_change: no tested score for task " + task);
}

MetricsReport run_experiment(const Dataset& dataset, Protocol protocol,
                             const ExperimentConfig& cfg) {
  if (dataset.features.empty())
    throw Error("run_experiment: dataset has no task features attached");
  if (cfg.models.empty()) throw Error("run_experiment: no models requested");

  MetricsReport report;
  report.protocol = protocol == Protocol::kE1 ? "E1" : "E2";
  report.folds = protocol == Protocol::kE1
                     ? make_folds_e1(dataset, cfg.seed, cfg.n_folds_e1)
                     : make_folds_e2(dataset);

  std::vector<int> active;  // folds that actually carry test targets
  for (int f = 0; f < static_cast<int>(report.folds.size()); ++f) {
    if (!report.folds[f].degenerate) active.push_back(f);
  }
  if (active.empty()) throw Error("run_experiment: every fold is degenerate");

  // per-(model, fold) training seeds, fixed up front so results do not
  // depend on the number of worker threads
  Rng seed_rng(cfg.seed ^ 0x6578706572ULL);
  std::vector<std::vector<std::uint64_t>> seeds(cfg.models.size());
  for (auto& row : seeds) {
    row.resize(active.size());
    for (auto& s : row) s = seed_rng.next_seed();
  }

  const int n_features =
      static_cast<int>(dataset.features.begin()->second.size());
  ModelConfig model_cfg = cfg.model;
  model_cfg.feature_dim = n_features;

  // scores[model][active-fold]
  std::vector<std::vector<ModelFoldScore>> scores(
      cfg.models.size(), std::vector<ModelFoldScore>(active.size()));

  auto run_fold = [&](std::size_t mi, std::size_t ai) {
    const FoldSpec& fold = report.folds[active[ai]];
    const std::set<int> test_set(fold.test_records.begin(),
                                 fold.test_records.end());

    std::vector<int> train_records;
    TargetFilter filter = nullptr;
    if (protocol == Protocol::kE1) {
      for (int i = 0; i < static_cast<int>(dataset.records.size()); ++i) {
        if (!test_set.count(i)) train_records.push_back(i);
      }
    } else {
      // leave-one-task-out: train on every record, but drop the targets
      // that score the held-out task
      const std::string task = *fold.held_out_task;
      filter = [task](const ParticipantRecord&, const TargetRef& t) {
        return t.task_id != task;
      };
    }

    TrustModel model(cfg.models[mi], model_cfg);
    TrainConfig tcfg = cfg.train;
    tcfg.seed = seeds[mi][ai];
    model.init_params(tcfg.seed);
    train(model, dataset, tcfg, filter, train_records);

    std::vector<double> preds, targets;
    ad::Tape tape;
    const ModelGraph graph(tape, model);
    for (int ri : fold.test_records) {
      const ParticipantRecord& record = dataset.records[ri];
      const auto all_targets = record_targets(record);
      const auto all_preds =
          record_predictions(graph, record, dataset.features);
      for (std::size_t t = 0; t < all_targets.size(); ++t) {
        const TargetRef& target = all_targets[t];
        if (target.phase == TargetRef::Phase::kObserved) continue;
        if (protocol == Protocol::kE2 &&
            target.task_id != *fold.held_out_task)
          continue;
        preds.push_back(tape.value(all_preds[t].prob)(0, 0));
        targets.push_back(target.value);
      }
    }
    if (preds.empty())
      throw Error("run_experiment: fold " + fold.name + " has no test targets");

    ModelFoldScore& score = scores[mi][ai];
    score.fold = fold.name;
    score.nll = nll(preds, targets);
    score.mae = mae(preds, targets);
    score.n_targets = static_cast<int>(preds.size());
  };

  std::vector<std::pair<std::size_t, std::size_t>> jobs_list;
  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi)
    for (std::size_t ai = 0; ai < active.size(); ++ai)
      jobs_list.emplace_back(mi, ai);

  const int n_workers = std::max(1, cfg.jobs);
  if (n_workers == 1) {
    for (auto [mi, ai] : jobs_list) run_fold(mi, ai);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < jobs_list.size(); j += n_workers)
            run_fold(jobs_list[j].first, jobs_list[j].second);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // DfB per fold, then summaries
  std::vector<std::map<std::string, double>> nll_by_fold(active.size());
  std::vector<std::map<std::string, double>> mae_by_fold(active.size());
  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    const std::string name = to_string(cfg.models[mi]);
    for (std::size_t ai = 0; ai < active.size(); ++ai) {
      nll_by_fold[ai][name] = scores[mi][ai].nll;
      mae_by_fold[ai][name] = scores[mi][ai].mae;
    }
  }
  const auto nll_rel = dfb(nll_by_fold);
  const auto mae_rel = dfb(mae_by_fold);

  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    ModelSummary summary;
    summary.kind = cfg.models[mi];
    summary.folds = scores[mi];
    summary.nll_mean = fold_mean(summary.folds, &ModelFoldScore::nll);
    summary.nll_se =
        fold_se(summary.folds, &ModelFoldScore::nll, summary.nll_mean);
    summary.mae_mean = fold_mean(summary.folds, &ModelFoldScore::mae);
    summary.mae_se =
        fold_se(summary.folds, &ModelFoldScore::mae, summary.mae_mean);
    const std::string name = to_string(cfg.models[mi]);
    double nd = 0.0, md = 0.0;
    for (std::size_t ai = 0; ai < active.size(); ++ai) {
      nd += nll_rel[ai].at(name);
      md += mae_rel[ai].at(name);
    }
    summary.nll_dfb = nd / static_cast<double>(active.size());
    summary.mae_dfb = md / static_cast<double>(active.size());
    report.models.push_back(std::move(summary));
  }
  return report;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "protocol\tmodel\tnll\tnll_se\tnll_dfb\tmae\tmae_se\tmae_dfb\n";
  for (const ModelSummary& m : report.models) {
    out << report.protocol << '\t' << to_string(m.kind) << '\t' << m.nll_mean
        << '\t' << m.nll_se << '\t' << m.nll_dfb << '\t' << m.mae_mean << '\t'
        << m.mae_se << '\t' << m.mae_dfb << '\n';
  }
  return out.str();
}

std::string format_fold_detail(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "protocol\tmodel\tfold\tnll\tmae\tn_targets\n";
  for (const ModelSummary& m : report.models) {
    for (const ModelFoldScore& f : m.folds) {
      out << report.protocol << '\t' << to_string(m.kind) << '\t' << f.fold
          << '\t' << f.nll << '\t' << f.mae << '\t' << f.n_targets << '\n';
    }
  }
  return out.str();
}

}  // namespace trustlab
