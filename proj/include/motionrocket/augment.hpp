#pragma once

// Training-set augmentation: additive Gaussian jitter and smooth random time warping.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "motionrocket/dataset.hpp"
#include "motionrocket/random.hpp"
#include "motionrocket/signal.hpp"

namespace motionrocket {

struct AugmentConfig {
  // Noise std as a multiple of each channel's std within the window.
  double jitter_sigma = 0.03;
  // Interior knots of the random speed curve.
  int warp_knots = 4;
  // Std of the per-knot speed perturbation around 1.
  double warp_sigma = 0.2;
  int copies = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(jitter_sigma >= 0.0)) throw std::invalid_argument("augment.jitter_sigma must be >= 0");
    if (!(warp_sigma >= 0.0)) throw std::invalid_argument("augment.warp_sigma must be >= 0");
    if (warp_knots < 2) throw std::invalid_argument("augment.warp_knots must be >= 2");
    if (copies < 0) throw std::invalid_argument("augment.copies must be >= 0");
  }
};

inline double channel_std(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

/// Adds iid N(0, (jitter_sigma * std_c)^2) noise to channel c. Constant channels are left untouched.
inline MotionWindow jitter(const MotionWindow& w, const AugmentConfig& cfg, Rng& rng) {
  MotionWindow out = w;
  if (cfg.jitter_sigma == 0.0) return out;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < w.channels(); ++c) {
    const double sigma = cfg.jitter_sigma * channel_std(w.channel(c));
    auto dst = out.channel(c);
    for (double& v : dst) v += sigma * normal(rng);
  }
  return out;
}

/// Source positions (in samples) for each output sample of a warped window.
/// Strictly increasing, pinned to 0 and length-1.
inline std::vector<double> warp_time_map(int length, const AugmentConfig& cfg, Rng& rng) {
  if (length < 4) throw std::invalid_argument("time warp needs at least 4 samples");
  std::vector<double> pos(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) pos[static_cast<std::size_t>(t)] = t;
  if (cfg.warp_sigma == 0.0) return pos;

  const int points = cfg.warp_knots + 2;
  const double step = 1.0 / (points - 1);
  std::normal_distribution<double> normal(0.0, cfg.warp_sigma);
  std::vector<double> knots(static_cast<std::size_t>(points));
  std::vector<double> speed(static_cast<std::size_t>(length));

  // Resample until the speed curve is positive everywhere; bounded so a
  // pathological sigma degrades to the identity map instead of spinning.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (double& k : knots) k = 1.0 + normal(rng);
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(knots.data(), knots.size(), 0.0, step, 0.0, 0.0);
    bool positive = true;
    for (int t = 0; t < length && positive; ++t) {
      const double s = spline(static_cast<double>(t) / (length - 1));
      speed[static_cast<std::size_t>(t)] = s;
      positive = s > 0.0;
    }
    if (!positive) continue;

    std::vector<double> cum(static_cast<std::size_t>(length), 0.0);
    for (std::size_t t = 1; t < cum.size(); ++t) cum[t] = cum[t - 1] + 0.5 * (speed[t - 1] + speed[t]);
    const double scale = (length - 1) / cum.back();
    for (std::size_t t = 0; t < cum.size(); ++t) pos[t] = cum[t] * scale;
    pos.front() = 0.0;
    pos.back() = length - 1;
    bool increasing = true;
    for (std::size_t t = 1; t < pos.size(); ++t) increasing = increasing && pos[t] > pos[t - 1];
    if (increasing) return pos;
  }
  for (int t = 0; t < length; ++t) pos[static_cast<std::size_t>(t)] = t;
  return pos;
}

inline double sample_linear(std::span<const double> x, double p) {
  const auto last = static_cast<double>(x.size() - 1);
  if (p <= 0.0) return x.front();
  if (p >= last) return x.back();
  const auto i = static_cast<std::size_t>(p);
  const double frac = p - static_cast<double>(i);
  if (frac == 0.0) return x[i];
  return x[i] + frac * (x[i + 1] - x[i]);
}

inline MotionWindow time_warp(const MotionWindow& w, const AugmentConfig& cfg, Rng& rng) {
  const auto pos = warp_time_map(w.length(), cfg, rng);
  MotionWindow out(w.channels(), w.length(), w.t_start_ms());
  for (int c = 0; c < w.channels(); ++c) {
    auto src = w.channel(c);
    auto dst = out.channel(c);
    for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = sample_linear(src, pos[t]);
  }
  return out;
}

/// Originals first, then `copies` jitter(time_warp(w)) variants per window in input order.
inline LabeledDataset expand_dataset(const LabeledDataset& ds, int copies, const AugmentConfig& cfg) {
  if (copies < 0) throw std::invalid_argument("copies must be >= 0");
  cfg.validate();
  LabeledDataset out = ds;
  if (copies == 0) return out;
  out.windows.reserve(ds.size() * static_cast<std::size_t>(1 + copies));
  out.labels.reserve(out.windows.capacity());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int k = 0; k < copies; ++k) {
      Rng rng(derive_seed(cfg.seed, {i, static_cast<std::uint64_t>(k)}));
      out.add(jitter(time_warp(ds.windows[i], cfg, rng), cfg, rng), ds.labels[i]);
    }
  }
  return out;
}

}  // namespace motionrocket
