#pragma once

// Multiclass ridge classifier with closed-form leave-one-out alpha selection.
//
// Features are standardized, targets are one-hot in {-1, +1} and centered, and
// the weights solve (X'X + aI) W = X'Y in primal form when p <= n or
// W = X'(XX' + aI)^-1 Y in dual form otherwise. The regularizer is chosen from
// a grid by the exact leave-one-out residual of the linear smoother, computed
// from one spectral decomposition shared by every grid value.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "motionrocket/error.hpp"
#include "motionrocket/minirocket.hpp"

namespace motionrocket {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Ten log-spaced values in [1e-3, 1e3].
inline std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 9.0));
  return grid;
}

struct RidgeModel {
  Eigen::MatrixXd weights;  // features x classes
  Eigen::VectorXd intercepts;
  double alpha = 0.0;
  std::vector<int> classes;
  Eigen::VectorXd feature_means;
  Eigen::VectorXd feature_stds;
  rocket::RocketParams rocket;

  std::size_t num_features() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t num_classes() const { return classes.size(); }

  void validate() const {
    const auto p = weights.rows();
    const auto k = weights.cols();
    if (k < 2 || static_cast<std::size_t>(k) != classes.size() || intercepts.size() != k)
      throw ShapeError("ridge model class dimensions are inconsistent");
    if (feature_means.size() != p || feature_stds.size() != p) throw ShapeError("ridge model feature dimensions are inconsistent");
    if (!std::is_sorted(classes.begin(), classes.end()) ||
        std::adjacent_find(classes.begin(), classes.end()) != classes.end())
      throw ShapeError("ridge model classes must be strictly ascending");
    for (Eigen::Index i = 0; i < p; ++i)
      if (!(feature_stds[i] > 0.0)) throw ShapeError("ridge model has a non-positive feature std");
    if (!rocket.biases.empty() && rocket.num_features() != static_cast<std::size_t>(p))
      throw ShapeError("embedded rocket params produce " + std::to_string(rocket.num_features()) +
                       " features but ridge expects " + std::to_string(p));
  }
};

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
  std::vector<double> decision_scores;
  double infer_micros = 0.0;

  double max_probability() const { return *std::max_element(probabilities.begin(), probabilities.end()); }
};

struct RidgeDiagnostics {
  std::vector<double> alpha_grid;
  std::vector<double> loo_mse;
  bool dual = false;
};

namespace ridge {

/// (X'X + aI)^-1 X'Y
inline Eigen::MatrixXd solve_primal(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double alpha) {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  gram.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success) throw std::runtime_error("primal ridge system is not positive definite");
  return llt.solve(x.transpose() * y);
}

/// X'(XX' + aI)^-1 Y
inline Eigen::MatrixXd solve_dual(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double alpha) {
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  kernel.selfadjointView<Eigen::Lower>().rankUpdate(x);
  kernel.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(kernel.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success) throw std::runtime_error("dual ridge system is not positive definite");
  return x.transpose() * llt.solve(y);
}

/// Orthonormal basis U of the column space with eigenvalues of XX' on it.
struct Spectrum {
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
};

inline Spectrum spectrum(const Eigen::MatrixXd& x) {
  Spectrum s;
  if (x.cols() <= x.rows()) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
    s.basis = svd.matrixU();
    s.eigenvalues = svd.singularValues().array().square();
  } else {
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(x.rows(), x.rows());
    kernel.selfadjointView<Eigen::Lower>().rankUpdate(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel.selfadjointView<Eigen::Lower>());
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    s.basis = eig.eigenvectors();
    s.eigenvalues = eig.eigenvalues().cwiseMax(0.0);
  }
  return s;
}

/// Mean squared leave-one-out residual of the ridge smoother H = U diag(l/(l+a)) U'.
inline double loo_mse(const Spectrum& s, const Eigen::MatrixXd& y, double alpha) {
  const Eigen::VectorXd shrink = s.eigenvalues.array() / (s.eigenvalues.array() + alpha);
  const Eigen::MatrixXd fitted = s.basis * (shrink.asDiagonal() * (s.basis.transpose() * y));
  const Eigen::VectorXd leverage = s.basis.array().square().matrix() * shrink;
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double denom = 1.0 - leverage[i];
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      const double r = (y(i, c) - fitted(i, c)) / denom;
      total += r * r;
    }
  }
  return total / static_cast<double>(y.size());
}

}  // namespace ridge

/// Fits on an n x p feature matrix. Rows of `features` are consumed (standardized in place).
inline RidgeModel fit_ridge(Eigen::MatrixXd features, std::span<const int> labels,
                            std::span<const double> alpha_grid = {}, RidgeDiagnostics* diagnostics = nullptr) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (static_cast<std::size_t>(n) != labels.size()) throw DataError("feature rows and labels differ in count");
  if (n < 2) throw DataError("ridge needs at least 2 samples");
  if (!features.allFinite()) throw DataError("non-finite features");

  std::vector<double> grid(alpha_grid.begin(), alpha_grid.end());
  if (grid.empty()) grid = default_alpha_grid();
  for (double a : grid)
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("alpha values must be positive and finite");

  RidgeModel model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) throw DataError("degenerate labels");
  const auto k = static_cast<Eigen::Index>(model.classes.size());

  model.feature_means = features.colwise().mean().transpose();
  features.rowwise() -= model.feature_means.transpose();
  model.feature_stds = (features.array().square().colwise().sum() / static_cast<double>(n)).sqrt().transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(model.feature_stds[j] > 0.0)) model.feature_stds[j] = 1.0;
  features.array().rowwise() /= model.feature_stds.transpose().array();

  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(n, k, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto it = std::lower_bound(model.classes.begin(), model.classes.end(), labels[static_cast<std::size_t>(i)]);
    y(i, it - model.classes.begin()) = 1.0;
  }
  model.intercepts = y.colwise().mean().transpose();
  y.rowwise() -= model.intercepts.transpose();

  std::size_t best = 0;
  std::vector<double> errors;
  if (grid.size() > 1) {
    const auto spec = ridge::spectrum(features);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      errors.push_back(ridge::loo_mse(spec, y, grid[i]));
      if (errors[i] < errors[best]) best = i;
    }
  }
  model.alpha = grid[best];
  const bool dual = p > n;
  model.weights = dual ? ridge::solve_dual(features, y, model.alpha) : ridge::solve_primal(features, y, model.alpha);

  if (diagnostics) {
    diagnostics->alpha_grid = grid;
    diagnostics->loo_mse = errors;
    diagnostics->dual = dual;
  }
  return model;
}

/// Raw margins for one feature vector.
inline Eigen::VectorXd decision_scores(const RidgeModel& model, std::span<const double> fv) {
  if (fv.size() != model.num_features())
    throw ShapeError("feature vector has length " + std::to_string(fv.size()) + ", model expects " +
                     std::to_string(model.num_features()));
  const Eigen::Map<const Eigen::VectorXd> x(fv.data(), static_cast<Eigen::Index>(fv.size()));
  const Eigen::VectorXd z = (x - model.feature_means).cwiseQuotient(model.feature_stds);
  return model.weights.transpose() * z + model.intercepts;
}

/// Softmax over margins; the index of the first maximum wins ties.
inline Prediction prediction_from_scores(const RidgeModel& model, const Eigen::VectorXd& scores) {
  Prediction pred;
  pred.decision_scores.assign(scores.data(), scores.data() + scores.size());
  const double top = scores.maxCoeff();
  pred.probabilities.resize(pred.decision_scores.size());
  double total = 0.0;
  for (std::size_t c = 0; c < pred.probabilities.size(); ++c) {
    pred.probabilities[c] = std::exp(pred.decision_scores[c] - top);
    total += pred.probabilities[c];
  }
  for (double& v : pred.probabilities) v /= total;
  const auto best = std::max_element(pred.probabilities.begin(), pred.probabilities.end());
  pred.label = model.classes[static_cast<std::size_t>(best - pred.probabilities.begin())];
  return pred;
}

inline Prediction predict(const RidgeModel& model, std::span<const double> fv) {
  const auto start = std::chrono::steady_clock::now();
  Prediction pred = prediction_from_scores(model, decision_scores(model, fv));
  pred.infer_micros = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
  return pred;
}

}  // namespace motionrocket
