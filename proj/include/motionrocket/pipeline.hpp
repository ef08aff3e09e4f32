#pragma once

// Training and inference glue: augment -> MiniRocket -> ridge.

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "motionrocket/augment.hpp"
#include "motionrocket/dataset.hpp"
#include "motionrocket/minirocket.hpp"
#include "motionrocket/random.hpp"
#include "motionrocket/ridge.hpp"

namespace motionrocket {

struct TrainConfig {
  int num_features = 10000;
  std::uint64_t seed = 0;
  AugmentConfig augment{};
  std::vector<double> alpha_grid = default_alpha_grid();
};

inline Eigen::MatrixXd feature_matrix(std::span<const MotionWindow> windows, const rocket::RocketParams& params) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(params.num_features()));
  rocket::Transformer tr(params);
  std::vector<double> row(params.num_features());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    tr.transform_into(windows[i], row);
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
  }
  return x;
}

/// Augments (when cfg.augment.copies > 0), fits MiniRocket, then ridge.
inline RidgeModel train_model(const LabeledDataset& ds, const TrainConfig& cfg, RidgeDiagnostics* diagnostics = nullptr) {
  ds.validate();
  if (ds.empty()) throw DataError("cannot train on an empty dataset");
  AugmentConfig aug = cfg.augment;
  aug.seed = derive_seed(cfg.seed, {0xA06});
  const LabeledDataset train = expand_dataset(ds, aug.copies, aug);
  auto params = rocket::fit(train, cfg.num_features, derive_seed(cfg.seed, {0x80C}));
  RidgeModel model = fit_ridge(feature_matrix(train.windows, params), train.labels, cfg.alpha_grid, diagnostics);
  model.rocket = std::move(params);
  return model;
}

/// Transform + predict with reusable scratch. Not thread-safe; use one per thread.
class Classifier {
 public:
  explicit Classifier(const RidgeModel& model) : model_(&model), transformer_(model.rocket), features_(model.num_features()) {}

  Prediction classify(const MotionWindow& w) {
    const auto start = std::chrono::steady_clock::now();
    transformer_.transform_into(w, features_);
    Prediction pred = prediction_from_scores(*model_, decision_scores(*model_, features_));
    pred.infer_micros = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
    return pred;
  }

  const std::vector<double>& last_features() const { return features_; }
  const RidgeModel& model() const { return *model_; }

 private:
  const RidgeModel* model_;
  rocket::Transformer transformer_;
  std::vector<double> features_;
};

}  // namespace motionrocket
