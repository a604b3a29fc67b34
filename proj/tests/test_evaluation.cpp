#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "trustlab/evaluation.hpp"
#include "trustlab/training.hpp"

using namespace trustlab;

namespace {

Dataset study_shaped(std::uint64_t seed = 1, int participants = 32) {
  SyntheticConfig cfg;
  cfg.n_participants = participants;
  cfg.n_tasks = 12;
  cfg.seed = seed;
  cfg.feature_dim = 10;
  return generate_synthetic(cfg).dataset;
}

}  // namespace

TEST_CASE("participant folds partition everyone as evenly as possible") {
  const Dataset ds = study_shaped();
  const auto folds = make_folds_e1(ds, 9);
  REQUIRE(folds.size() == 10);
  std::set<int> seen;
  std::multiset<std::size_t> sizes;
  for (const auto& f : folds) {
    sizes.insert(f.test_records.size());
    for (int r : f.test_records) CHECK(seen.insert(r).second);
  }
  CHECK(seen.size() == 32);  // every participant tests exactly once
  // 32 participants over 10 folds: two folds of 4, eight folds of 3
  CHECK(std::count(sizes.begin(), sizes.end(), 4) == 2);
  CHECK(std::count(sizes.begin(), sizes.end(), 3) == 8);

  // 31 participants: one fold of 4, nine of 3
  const Dataset ds31 = study_shaped(2, 31);
  std::multiset<std::size_t> sizes31;
  for (const auto& f : make_folds_e1(ds31, 9)) sizes31.insert(f.test_records.size());
  CHECK(std::count(sizes31.begin(), sizes31.end(), 4) == 1);
  CHECK(std::count(sizes31.begin(), sizes31.end(), 3) == 9);

  // deterministic in the seed
  const auto again = make_folds_e1(ds, 9);
  for (std::size_t i = 0; i < folds.size(); ++i)
    CHECK(folds[i].test_records == again[i].test_records);
  const auto other = make_folds_e1(ds, 10);
  bool differs = false;
  for (std::size_t i = 0; i < folds.size(); ++i)
    if (folds[i].test_records != other[i].test_records) differs = true;
  CHECK(differs);

  const Dataset tiny = study_shaped(3, 9);
  CHECK_THROWS_AS(make_folds_e1(tiny, 9), Error);
  CHECK(make_folds_e1(study_shaped(4, 10), 1).size() == 10);  // singletons
}

TEST_CASE("task folds cover the catalog one task at a time") {
  const Dataset ds = study_shaped();
  const auto folds = make_folds_e2(ds);
  REQUIRE(folds.size() == 12);
  std::set<std::string> tasks;
  for (const auto& f : folds) {
    REQUIRE(f.held_out_task.has_value());
    tasks.insert(*f.held_out_task);
    for (int r : f.test_records) {
      const auto& rec = ds.records[r];
      CHECK(std::any_of(rec.tested.begin(), rec.tested.end(),
                        [&](const TestedEntry& t) {
                          return t.task_id == *f.held_out_task;
                        }));
    }
  }
  CHECK(tasks.size() == 12);

  // a task never tested yields a flagged, empty fold
  Dataset pruned = ds;
  TaskDescriptor extra;
  extra.id = "T99";
  extra.domain = Domain::kHousehold;
  extra.category = Category::kA;
  extra.difficulty = Difficulty::kEasy;
  extra.description = "never referenced";
  pruned.catalog.push_back(extra);
  const auto folds2 = make_folds_e2(pruned);
  REQUIRE(folds2.size() == 13);
  CHECK(folds2.back().degenerate);
  CHECK(folds2.back().test_records.empty());
}

TEST_CASE("metric helpers agree with hand calculations") {
  const std::vector<double> half(5, 0.5);
  const std::vector<double> targets = {0.1, 0.9, 0.5, 0.99, 0.01};
  CHECK(nll(half, targets) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const std::vector<double> p = {0.2, 0.7};
  const std::vector<double> t = {0.3, 0.4};
  CHECK(mae(p, t) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(nll(p, t) ==
        doctest::Approx((-(0.3 * std::log(0.2) + 0.7 * std::log(0.8)) -
                         (0.4 * std::log(0.7) + 0.6 * std::log(0.3))) /
                        2.0)
            .epsilon(1e-13));
  CHECK_THROWS_AS(nll({}, {}), Error);
  CHECK_THROWS_AS(mae({}, {}), Error);
}

TEST_CASE("difference-from-best is a per-fold zero-minimum shift") {
  std::vector<std::map<std::string, double>> scores = {
      {{"a", 0.55}, {"b", 0.60}}, {{"a", 0.70}, {"b", 0.65}}};
  const auto rel = dfb(scores);
  CHECK(rel[0].at("a") == doctest::Approx(0.0));
  CHECK(rel[0].at("b") == doctest::Approx(0.05));
  CHECK(rel[1].at("a") == doctest::Approx(0.05));
  CHECK(rel[1].at("b") == doctest::Approx(0.0));
  for (const auto& fold : rel) {
    double mn = 1e9;
    for (const auto& [_, v] : fold) mn = std::min(mn, v);
    CHECK(mn == 0.0);
  }
  // shifting a fold by a constant leaves the result unchanged
  for (auto& [_, v] : scores[0]) v += 0.37;
  const auto shifted = dfb(scores);
  CHECK(shifted[0].at("b") == doctest::Approx(rel[0].at("b")).epsilon(1e-12));

  scores[1].erase("b");
  CHECK_THROWS_AS(dfb(scores), Error);
}

TEST_CASE("derived trust scores read the raw Likert responses") {
  const Dataset ds = study_shaped();
  const ParticipantRecord& r = ds.records[0];
  const std::string a = r.tested[0].task_id;
  const std::string b = r.tested[1].task_id;
  CHECK(trust_distance(r, a, b, TrustTime::kPre) ==
        doctest::Approx(std::abs(r.tested[0].pre_score - r.tested[1].pre_score)));
  CHECK(trust_distance(r, a, b, TrustTime::kPre) ==
        trust_distance(r, b, a, TrustTime::kPre));
  CHECK(trust_distance(r, a, a, TrustTime::kPost) == 0.0);
  CHECK(trust_change(r, a) ==
        doctest::Approx(std::abs(r.tested[0].post_score - r.tested[0].pre_score)));
  CHECK_THROWS_AS(trust_change(r, "T99"), Error);
  CHECK_THROWS_AS(trust_distance(r, a, "T99", TrustTime::kPre), Error);
}

TEST_CASE("a constant-only experiment reports zero difference from best") {
  const Dataset ds = study_shaped(9);
  ExperimentConfig cfg;
  cfg.models = {ModelKind::kCt};
  cfg.train.max_epochs = 15;
  cfg.seed = 5;
  const MetricsReport report = run_experiment(ds, Protocol::kE1, cfg);
  REQUIRE(report.models.size() == 1);
  CHECK(report.models[0].nll_dfb == 0.0);
  CHECK(report.models[0].mae_dfb == 0.0);
  CHECK(report.models[0].folds.size() == 10);
  CHECK(report.models[0].nll_mean > 0.0);

  // grand mean equals the mean of fold means (equal weighting)
  double sum = 0.0;
  for (const auto& f : report.models[0].folds) sum += f.nll;
  CHECK(report.models[0].nll_mean ==
        doctest::Approx(sum / 10.0).epsilon(1e-14));
}

TEST_CASE("experiments are deterministic and honor the protocol split") {
  const Dataset ds = study_shaped(10);
  ExperimentConfig cfg;
  cfg.models = {ModelKind::kCt, ModelKind::kLg};
  cfg.train.max_epochs = 10;
  cfg.seed = 8;

  const MetricsReport a = run_experiment(ds, Protocol::kE2, cfg);
  const MetricsReport b = run_experiment(ds, Protocol::kE2, cfg);
  CHECK(format_report(a) == format_report(b));
  CHECK(a.folds.size() == 12);  // one per task
  for (const auto& m : a.models) {
    CHECK(m.folds.size() == 12);
    // every held-out task contributes pre and post targets only
    for (const auto& f : m.folds) CHECK(f.n_targets > 0);
  }

  // concurrent fold evaluation changes nothing
  ExperimentConfig par = cfg;
  par.jobs = 4;
  const MetricsReport c = run_experiment(ds, Protocol::kE2, par);
  CHECK(format_report(c) == format_report(a));
}

TEST_CASE("report tables carry one line per model and per fold") {
  const Dataset ds = study_shaped(11);
  ExperimentConfig cfg;
  cfg.models = {ModelKind::kCt};
  cfg.train.max_epochs = 5;
  const MetricsReport report = run_experiment(ds, Protocol::kE1, cfg);
  const std::string table = format_report(report);
  CHECK(table.find("protocol\tmodel\tnll") == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 2);  // header + ct
  const std::string detail = format_fold_detail(report);
  CHECK(std::count(detail.begin(), detail.end(), '\n') == 11);  // header + 10
}
