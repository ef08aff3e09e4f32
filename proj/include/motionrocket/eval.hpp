#pragma once

// Stratified k-fold cross-validation and the metrics reported from it:
// per-fold accuracy, summed confusion matrix, macro-F1 and one-vs-rest ROC/AUC.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "motionrocket/dataset.hpp"
#include "motionrocket/pipeline.hpp"
#include "motionrocket/random.hpp"

namespace motionrocket {

using ConfusionMatrix = std::vector<std::vector<std::int64_t>>;  // [true][predicted]

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }
};

/// Shuffles each class (seeded) and deals it round-robin across folds. The
/// dealing position carries over from one class to the next, so fold sizes
/// differ by at most one overall as well as per class.
inline FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be at least 2");
  if (static_cast<std::size_t>(k) > labels.size()) throw std::invalid_argument("k exceeds the number of samples");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  FoldPlan plan{k, std::vector<int>(labels.size(), -1), seed};
  std::size_t next = 0;
  for (auto& [label, idx] : by_class) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(static_cast<std::int64_t>(label))}));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) plan.assignments[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return plan;
}

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// Unweighted mean F1 over every row of the matrix; a class with no true and
/// no predicted samples scores 0.
inline double macro_f1(const ConfusionMatrix& cm) {
  const std::size_t n = cm.size();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::int64_t predicted = 0;
    std::int64_t actual = 0;
    for (std::size_t j = 0; j < n; ++j) {
      predicted += cm[j][c];
      actual += cm[c][j];
    }
    const double tp = static_cast<double>(cm[c][c]);
    const double precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    const double recall = actual > 0 ? tp / static_cast<double>(actual) : 0.0;
    total += f1_score(precision, recall);
  }
  return total / static_cast<double>(n);
}

struct RocPoint {
  double fpr;
  double tpr;
};

/// Empirical ROC for binary labels, one point per distinct score threshold, from (0,0) to (1,1).
inline std::vector<RocPoint> roc_curve(std::span<const int> positive, std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double p = 0.0;
  double n = 0.0;
  for (int v : positive) (v ? p : n) += 1.0;
  std::vector<RocPoint> pts{{0.0, 0.0}};
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (positive[order[i]] ? tp : fp) += 1.0;
    pts.push_back({n > 0 ? fp / n : 0.0, p > 0 ? tp / p : 0.0});
  }
  return pts;
}

/// Mann-Whitney AUC with midranks for ties; nullopt when either class is empty.
inline std::optional<double> rank_auc(std::span<const int> positive, std::span<const double> scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) rank[order[t]] = mid;
    i = j;
  }
  double np = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (positive[i]) {
      np += 1.0;
      rank_sum += rank[i];
    }
  const double nn = static_cast<double>(n) - np;
  if (np == 0.0 || nn == 0.0) return std::nullopt;
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

/// TPR of a ROC curve at fpr x: linear between points, the highest TPR on vertical segments.
inline double roc_tpr_at(std::span<const RocPoint> roc, double x) {
  double best = 0.0;
  bool hit = false;
  for (std::size_t i = 0; i < roc.size(); ++i) {
    if (roc[i].fpr == x) {
      best = hit ? std::max(best, roc[i].tpr) : roc[i].tpr;
      hit = true;
    }
  }
  if (hit) return best;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    const auto& a = roc[i - 1];
    const auto& b = roc[i];
    if (a.fpr < x && x < b.fpr) return a.tpr + (x - a.fpr) / (b.fpr - a.fpr) * (b.tpr - a.tpr);
  }
  return roc.back().tpr;
}

inline constexpr int kRocGridPoints = 101;

struct AucResult {
  std::vector<std::optional<double>> per_class;
  double macro = 0.0;
  std::vector<double> fpr_grid;
  std::vector<double> mean_tpr;
  std::vector<std::vector<double>> class_tpr;  // empty for classes with undefined AUC
};

/// One-vs-rest AUC per class; column c of each probability row scores class c.
inline AucResult roc_auc_ovr(std::span<const int> labels, const std::vector<std::vector<double>>& probabilities,
                             int num_classes) {
  if (labels.size() != probabilities.size()) throw std::invalid_argument("labels and probability rows differ in count");
  AucResult r;
  r.per_class.resize(static_cast<std::size_t>(num_classes));
  r.class_tpr.resize(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < kRocGridPoints; ++i) r.fpr_grid.push_back(i / static_cast<double>(kRocGridPoints - 1));
  r.mean_tpr.assign(r.fpr_grid.size(), 0.0);

  int defined = 0;
  double sum = 0.0;
  std::vector<int> positive(labels.size());
  std::vector<double> scores(labels.size());
  for (int c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      positive[i] = labels[i] == c ? 1 : 0;
      scores[i] = probabilities[i].at(static_cast<std::size_t>(c));
    }
    const auto auc = rank_auc(positive, scores);
    r.per_class[static_cast<std::size_t>(c)] = auc;
    if (!auc) continue;
    ++defined;
    sum += *auc;
    const auto roc = roc_curve(positive, scores);
    auto& tpr = r.class_tpr[static_cast<std::size_t>(c)];
    for (double x : r.fpr_grid) tpr.push_back(roc_tpr_at(roc, x));
    for (std::size_t i = 0; i < tpr.size(); ++i) r.mean_tpr[i] += tpr[i];
  }
  if (defined > 0) {
    r.macro = sum / defined;
    for (double& v : r.mean_tpr) v /= defined;
  }
  return r;
}

struct EvalReport {
  int folds = 0;
  std::uint64_t seed = 0;
  int num_classes = kNumClasses;
  std::vector<std::size_t> fold_sizes;
  std::vector<double> fold_accuracy;
  std::vector<double> fold_alpha;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over folds
  double pooled_accuracy = 0.0;
  double macro_f1 = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> class_auc;
  double macro_auc = 0.0;
  std::vector<double> roc_fpr;
  std::vector<double> mean_roc_tpr;
  std::vector<std::vector<double>> class_roc_tpr;

  bool operator==(const EvalReport&) const = default;
};

/// Out-of-fold predictions, indexed like the dataset.
struct CvPredictions {
  std::vector<int> predicted;
  std::vector<std::vector<double>> probabilities;  // kNumClasses columns, by label
};

/// Invoked once per fold with the exact training split handed to the fitter
/// and the held-out indices. May be called from worker threads.
using FoldAudit = std::function<void(int fold, const LabeledDataset& train_split, std::span<const std::size_t> test_indices)>;

struct CvOptions {
  int threads = 0;  // 0 = hardware concurrency
  FoldAudit audit;
};

inline EvalReport cross_validate(const LabeledDataset& ds, int k, std::uint64_t seed, const TrainConfig& train_cfg,
                                 const CvOptions& opts = {}, CvPredictions* predictions = nullptr) {
  ds.validate();
  const auto plan = stratified_kfold(ds.labels, k, seed);
  const std::size_t n = ds.size();

  CvPredictions oof;
  oof.predicted.assign(n, -1);
  oof.probabilities.assign(n, std::vector<double>(kNumClasses, 0.0));
  std::vector<double> alphas(static_cast<std::size_t>(k), 0.0);

  std::atomic<int> next_fold{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (int f = next_fold++; f < k; f = next_fold++) {
      try {
        const auto train_idx = plan.train_indices(f);
        const auto test_idx = plan.test_indices(f);
        const auto train = ds.subset(train_idx);
        if (opts.audit) opts.audit(f, train, test_idx);
        TrainConfig cfg = train_cfg;
        cfg.seed = derive_seed(train_cfg.seed, {static_cast<std::uint64_t>(f)});
        const RidgeModel model = train_model(train, cfg);
        alphas[static_cast<std::size_t>(f)] = model.alpha;
        Classifier clf(model);
        for (auto i : test_idx) {
          const auto pred = clf.classify(ds.windows[i]);
          oof.predicted[i] = pred.label;
          for (std::size_t c = 0; c < model.classes.size(); ++c)
            oof.probabilities[i][static_cast<std::size_t>(model.classes[c])] = pred.probabilities[c];
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next_fold = k;
      }
    }
  };
  unsigned threads = opts.threads > 0 ? static_cast<unsigned>(opts.threads) : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(k));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  EvalReport r;
  r.folds = k;
  r.seed = seed;
  r.fold_alpha = alphas;
  r.confusion.assign(kNumClasses, std::vector<std::int64_t>(kNumClasses, 0));
  std::vector<std::size_t> correct(static_cast<std::size_t>(k), 0);
  r.fold_sizes.assign(static_cast<std::size_t>(k), 0);
  std::size_t total_correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = static_cast<std::size_t>(plan.assignments[i]);
    ++r.fold_sizes[f];
    ++r.confusion[static_cast<std::size_t>(ds.labels[i])][static_cast<std::size_t>(oof.predicted[i])];
    if (oof.predicted[i] == ds.labels[i]) {
      ++correct[f];
      ++total_correct;
    }
  }
  for (int f = 0; f < k; ++f)
    r.fold_accuracy.push_back(static_cast<double>(correct[static_cast<std::size_t>(f)]) /
                              static_cast<double>(r.fold_sizes[static_cast<std::size_t>(f)]));
  r.mean_accuracy = std::accumulate(r.fold_accuracy.begin(), r.fold_accuracy.end(), 0.0) / k;
  double var = 0.0;
  for (double a : r.fold_accuracy) var += (a - r.mean_accuracy) * (a - r.mean_accuracy);
  r.std_accuracy = std::sqrt(var / k);
  r.pooled_accuracy = static_cast<double>(total_correct) / static_cast<double>(n);
  r.macro_f1 = macro_f1(r.confusion);

  const auto auc = roc_auc_ovr(ds.labels, oof.probabilities, kNumClasses);
  r.class_auc = auc.per_class;
  r.macro_auc = auc.macro;
  r.roc_fpr = auc.fpr_grid;
  r.mean_roc_tpr = auc.mean_tpr;
  r.class_roc_tpr = auc.class_tpr;

  if (predictions) *predictions = std::move(oof);
  return r;
}

}  // namespace motionrocket
