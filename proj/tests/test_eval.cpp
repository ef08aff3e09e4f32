#include <gtest/gtest.h>

#include <fstream>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

#include "test_util.hpp"

using namespace motionrocket;

namespace {

double trapezoid_auc(std::span<const int> pos, std::span<const double> scores) {
  const auto roc = roc_curve(pos, scores);
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  return area;
}

// Each class is a constant level per window plus small noise.
// One clean tone per class (1, 3, ..., 13 Hz) with a random phase per window.
LabeledDataset tone_dataset(int per_class) {
  LabeledDataset ds;
  Rng rng(1);
  std::normal_distribution<double> n(0.0, 0.01);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int c = 0; c < kNumClasses; ++c)
    for (int i = 0; i < per_class; ++i) {
      MotionWindow w(24, 96);
      const double f = 1.0 + 2.0 * c;
      for (int ch = 0; ch < 24; ++ch) {
        const double ph = phase(rng);
        for (int t = 0; t < 96; ++t) w.at(ch, t) = std::sin(2.0 * std::numbers::pi * f * t / 48.0 + ph) + n(rng);
      }
      ds.add(std::move(w), c);
    }
  return ds;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.num_features = 840;
  cfg.augment.copies = 0;
  return cfg;
}

// Tag balance check; enough to catch malformed output from a string builder.
bool well_formed_xml(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = s.find('<', i)) != std::string::npos) {
    const auto end = s.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = s.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (tag.back() == '/') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else {
      stack.push_back(tag.substr(0, tag.find_first_of(" \n\t")));
    }
  }
  return stack.empty();
}

}  // namespace

TEST(Folds, SmallExample) {
  const std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1};
  const auto plan = stratified_kfold(labels, 2, 3);
  for (int f = 0; f < 2; ++f) {
    int zeros = 0, ones = 0;
    for (auto i : plan.test_indices(f)) (labels[i] == 0 ? zeros : ones)++;
    EXPECT_EQ(zeros, 2);
    EXPECT_EQ(ones, 2);
  }
}

TEST(Folds, KEqualsNIsLeaveOneOut) {
  const std::vector<int> labels{0, 1, 2, 3, 4, 5, 6, 0, 1, 2};
  const auto plan = stratified_kfold(labels, 10, 1);
  for (int f = 0; f < 10; ++f) EXPECT_EQ(plan.test_indices(f).size(), 1u);
}

TEST(Folds, BalancePropertyOverSeeds) {
  const auto counts = synth::counts_for_total(648);
  std::vector<int> labels;
  for (int c = 0; c < 7; ++c) labels.insert(labels.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(c)]), c);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto plan = stratified_kfold(labels, 10, seed);
    std::vector<std::vector<int>> per(10, std::vector<int>(7, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ASSERT_GE(plan.assignments[i], 0);
      ASSERT_LT(plan.assignments[i], 10);
      ++per[static_cast<std::size_t>(plan.assignments[i])][static_cast<std::size_t>(labels[i])];
    }
    for (int c = 0; c < 7; ++c) {
      int lo = 1 << 30, hi = 0;
      for (int f = 0; f < 10; ++f) {
        lo = std::min(lo, per[static_cast<std::size_t>(f)][static_cast<std::size_t>(c)]);
        hi = std::max(hi, per[static_cast<std::size_t>(f)][static_cast<std::size_t>(c)]);
      }
      EXPECT_LE(hi - lo, 1);
    }
    std::set<std::size_t> seen;
    for (int f = 0; f < 10; ++f) {
      const auto t = plan.test_indices(f);
      EXPECT_TRUE(t.size() == 64 || t.size() == 65) << t.size();
      for (auto i : t) EXPECT_TRUE(seen.insert(i).second);
      EXPECT_EQ(t.size() + plan.train_indices(f).size(), labels.size());
    }
    EXPECT_EQ(seen.size(), labels.size());
  }
}

TEST(Folds, Errors) {
  const std::vector<int> labels{0, 1, 0};
  EXPECT_THROW(stratified_kfold(labels, 1, 0), std::invalid_argument);
  EXPECT_THROW(stratified_kfold(labels, 4, 0), std::invalid_argument);
}

TEST(MacroF1, Examples) {
  EXPECT_DOUBLE_EQ(macro_f1({{5, 0, 0}, {0, 3, 0}, {0, 0, 9}}), 1.0);
  EXPECT_DOUBLE_EQ(macro_f1({{8, 2}, {2, 8}}), 0.8);
  const double expected = (2.0 * 0.5 / 1.5 + 1.0 + 0.0) / 3.0;
  EXPECT_NEAR(macro_f1({{10, 0, 0}, {0, 10, 0}, {10, 0, 0}}), expected, 1e-12);
  EXPECT_NEAR(expected, 0.5556, 1e-4);
  EXPECT_DOUBLE_EQ(macro_f1({{3, 0, 0}, {0, 3, 0}, {0, 0, 0}}), 2.0 / 3.0);
}

TEST(Auc, Examples) {
  const std::vector<int> pos{0, 0, 1, 1};
  EXPECT_EQ(rank_auc(pos, std::vector<double>{0.1, 0.2, 0.8, 0.9}), 1.0);
  EXPECT_EQ(rank_auc(pos, std::vector<double>{0.9, 0.8, 0.2, 0.1}), 0.0);
  EXPECT_EQ(rank_auc(pos, std::vector<double>{0.5, 0.5, 0.5, 0.5}), 0.5);
  EXPECT_FALSE(rank_auc(std::vector<int>{0, 0}, std::vector<double>{0.1, 0.2}).has_value());
}

TEST(Auc, RankStatisticEqualsTrapezoid) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 5 + trial % 60;
    std::vector<int> pos(static_cast<std::size_t>(n));
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      pos[static_cast<std::size_t>(i)] = i < 2 ? i : static_cast<int>(rng() % 2);
      // Coarse scores force plenty of ties.
      scores[static_cast<std::size_t>(i)] = static_cast<double>(rng() % 7) / 7.0 + 0.1 * pos[static_cast<std::size_t>(i)];
    }
    const auto auc = rank_auc(pos, scores);
    ASSERT_TRUE(auc.has_value());
    EXPECT_NEAR(*auc, trapezoid_auc(pos, scores), 1e-12);
    EXPECT_GE(*auc, 0.0);
    EXPECT_LE(*auc, 1.0);
  }
}

TEST(Auc, OvrSkipsAbsentClass) {
  const std::vector<int> labels{0, 1, 0, 1};
  const std::vector<std::vector<double>> probs{{0.9, 0.1, 0.0}, {0.2, 0.8, 0.0}, {0.7, 0.3, 0.0}, {0.4, 0.6, 0.0}};
  const auto r = roc_auc_ovr(labels, probs, 3);
  EXPECT_EQ(r.per_class[0], 1.0);
  EXPECT_EQ(r.per_class[1], 1.0);
  EXPECT_FALSE(r.per_class[2].has_value());
  EXPECT_EQ(r.macro, 1.0);
  EXPECT_TRUE(r.class_tpr[2].empty());
  ASSERT_EQ(r.fpr_grid.size(), 101u);
  EXPECT_EQ(r.mean_tpr.back(), 1.0);
}

TEST(CrossValidate, SeparableDataIsPerfect) {
  const auto ds = tone_dataset(10);
  const auto r = cross_validate(ds, 5, 1, small_config());
  EXPECT_EQ(r.mean_accuracy, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
  for (const auto& a : r.class_auc) EXPECT_EQ(a, 1.0);
}

TEST(CrossValidate, ReportInvariantsAndDeterminism) {
  synth::SynthSpec spec;
  spec.samples_per_class = {6, 5, 5, 5, 5, 5, 5};
  spec.noise_std = 0.8;
  const auto ds = synth::generate(spec);
  auto cfg = small_config();
  cfg.augment.copies = 1;
  CvOptions opts;
  opts.threads = 3;
  const auto r = cross_validate(ds, 4, 9, cfg, opts);
  const auto counts = ds.class_counts();
  for (int c = 0; c < 7; ++c) {
    const auto& row = r.confusion[static_cast<std::size_t>(c)];
    EXPECT_EQ(static_cast<std::size_t>(std::accumulate(row.begin(), row.end(), std::int64_t{0})), counts.at(c));
  }
  double weighted = 0.0;
  for (std::size_t f = 0; f < r.fold_sizes.size(); ++f)
    weighted += r.fold_accuracy[f] * static_cast<double>(r.fold_sizes[f]) / static_cast<double>(ds.size());
  EXPECT_NEAR(weighted, r.pooled_accuracy, 1e-12);
  for (const auto& a : r.class_auc) {
    ASSERT_TRUE(a.has_value());
    EXPECT_GE(*a, 0.0);
    EXPECT_LE(*a, 1.0);
  }
  opts.threads = 1;
  EXPECT_EQ(cross_validate(ds, 4, 9, cfg, opts), r);
}

TEST(CrossValidate, TestWindowsNeverReachTheFitter) {
  synth::SynthSpec spec;
  spec.samples_per_class = std::vector<int>(7, 4);
  const auto ds = synth::generate(spec);
  std::mutex m;
  int folds_seen = 0;
  CvOptions opts;
  opts.audit = [&](int, const LabeledDataset& train, std::span<const std::size_t> test) {
    std::lock_guard lock(m);
    ++folds_seen;
    EXPECT_EQ(train.size() + test.size(), ds.size());
    for (auto i : test)
      for (const auto& w : train.windows) EXPECT_FALSE(w == ds.windows[i]);
  };
  cross_validate(ds, 4, 2, small_config(), opts);
  EXPECT_EQ(folds_seen, 4);
}

TEST(Report, JsonCsvSvg) {
  mrtest::TempDir dir("report");
  auto cfg = small_config();
  const auto ds = tone_dataset(4);
  auto r = cross_validate(ds, 2, 3, cfg);
  r.class_auc[6] = std::nullopt;  // exercise the undefined-AUC path
  r.class_roc_tpr[6].clear();

  emit_report(r, dir.file("r.json"), "json");
  EXPECT_EQ(load_report(dir.file("r.json")), r);

  emit_report(r, dir.file("r.csv"), "csv");
  std::ifstream csv(dir.file("r.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_TRUE(std::regex_match(line, std::regex(R"(\d+(,\d+){6})"))) << line;
  }
  EXPECT_EQ(rows, 7);

  emit_report(r, dir.file("r.svg"), "svg-plot");
  std::stringstream svg;
  svg << std::ifstream(dir.file("r.svg")).rdbuf();
  EXPECT_TRUE(well_formed_xml(svg.str()));
  std::size_t paths = 0;
  for (std::size_t p = 0; (p = svg.str().find("class=\"roc-class\"", p)) != std::string::npos; ++p) ++paths;
  EXPECT_EQ(paths, 6u);

  EXPECT_THROW(emit_report(r, dir.file("r.x"), "pdf"), std::invalid_argument);
}
