#pragma once

// MiniRocket feature transform for multichannel windows.
//
// 84 fixed length-9 kernels (weights -1 with +2 at three positions) are
// applied at a small set of exponentially spaced dilations. Each
// (dilation, kernel) group sums the convolution over a random subset of
// channels; each of its features is the proportion of outputs strictly above
// a bias drawn as a low-discrepancy quantile of the same convolution on a
// random training window.
//
// The fast path never materializes kernel weights. Per dilation and channel it
// builds A = -(sum of the 9 dilated taps) and G_j = 3 * (tap j); kernel k's
// output is then A + G_a + G_b + G_c for its three +2 positions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "motionrocket/error.hpp"
#include "motionrocket/random.hpp"
#include "motionrocket/signal.hpp"

namespace motionrocket::rocket {

inline constexpr int kKernelLength = 9;
inline constexpr int kNumKernels = 84;
inline constexpr int kMaxDilationCandidates = 32;

using KernelIndex = std::array<int, 3>;
using FeatureVector = std::vector<double>;

/// The 84 choices of +2 positions out of 9, lexicographic.
inline const std::array<KernelIndex, kNumKernels>& kernel_indices() {
  static const auto table = [] {
    std::array<KernelIndex, kNumKernels> t{};
    int n = 0;
    for (int a = 0; a < kKernelLength; ++a)
      for (int b = a + 1; b < kKernelLength; ++b)
        for (int c = b + 1; c < kKernelLength; ++c) t[static_cast<std::size_t>(n++)] = {a, b, c};
    return t;
  }();
  return table;
}

inline std::array<double, kKernelLength> kernel_weights(int kernel) {
  std::array<double, kKernelLength> w;
  w.fill(-1.0);
  for (int p : kernel_indices()[static_cast<std::size_t>(kernel)]) w[static_cast<std::size_t>(p)] = 2.0;
  return w;
}

struct DilationPlan {
  std::vector<int> dilations;
  // Total features per dilation; always a multiple of 84.
  std::vector<int> features_per_dilation;
};

/// Exponentially spaced dilations in [1, (length-1)/8] with features spread
/// evenly across them (smaller dilations take the remainder).
inline DilationPlan plan_dilations(int window_len, int requested_features) {
  if (window_len < kKernelLength) throw std::invalid_argument("window shorter than kernel span");
  if (requested_features < kNumKernels)
    throw std::invalid_argument("requested features must be at least " + std::to_string(kNumKernels));

  const int per_kernel = requested_features / kNumKernels;
  const int true_max = (window_len - 1) / (kKernelLength - 1);
  const int m = std::min(kMaxDilationCandidates, per_kernel);

  DilationPlan plan;
  if (m <= 1 || true_max == 1) {
    plan.dilations = {1};
  } else {
    const double exponent = std::log2(static_cast<double>(true_max));
    for (int j = 0; j < m; ++j) {
      const double v = std::pow(2.0, j * exponent / (m - 1));
      plan.dilations.push_back(std::min(true_max, static_cast<int>(std::floor(v + 1e-9))));
    }
    plan.dilations.erase(std::unique(plan.dilations.begin(), plan.dilations.end()), plan.dilations.end());
  }

  const int n = static_cast<int>(plan.dilations.size());
  for (int i = 0; i < n; ++i) {
    const int count = per_kernel / n + (i < per_kernel % n ? 1 : 0);
    plan.features_per_dilation.push_back(count * kNumKernels);
  }
  return plan;
}

/// Fitted transform state. Groups are ordered dilation-major, then kernel.
struct RocketParams {
  int channels = 0;
  int length = 0;
  std::vector<int> dilations;
  std::vector<int> features_per_dilation;
  std::vector<std::uint8_t> paddings;
  std::vector<std::vector<int>> channel_combos;
  std::vector<double> biases;
  std::uint64_t seed = 0;

  std::size_t num_features() const { return biases.size(); }
  std::size_t num_groups() const { return paddings.size(); }
  int biases_per_group(std::size_t dilation_index) const {
    return features_per_dilation[dilation_index] / kNumKernels;
  }

  void validate() const {
    if (channels < 1 || length < kKernelLength) throw ShapeError("rocket params have invalid window shape");
    if (dilations.empty() || dilations.size() != features_per_dilation.size())
      throw ShapeError("rocket params dilation tables are inconsistent");
    std::size_t features = 0;
    for (std::size_t i = 0; i < dilations.size(); ++i) {
      if (dilations[i] < 1 || dilations[i] > (length - 1) / (kKernelLength - 1))
        throw ShapeError("rocket params dilation out of range");
      if (features_per_dilation[i] <= 0 || features_per_dilation[i] % kNumKernels != 0)
        throw ShapeError("rocket params feature allocation is not a positive multiple of 84");
      features += static_cast<std::size_t>(features_per_dilation[i]);
    }
    const std::size_t groups = dilations.size() * kNumKernels;
    if (paddings.size() != groups || channel_combos.size() != groups)
      throw ShapeError("rocket params group tables have the wrong size");
    for (const auto& combo : channel_combos) {
      if (combo.empty() || combo.size() > static_cast<std::size_t>(kKernelLength))
        throw ShapeError("rocket params channel combination has invalid size");
      for (int c : combo)
        if (c < 0 || c >= channels) throw ShapeError("rocket params channel index out of range");
    }
    if (biases.size() != features) throw ShapeError("rocket params bias count does not match allocation");
    for (double b : biases)
      if (!std::isfinite(b)) throw ShapeError("rocket params bias is not finite");
  }

  bool operator==(const RocketParams&) const = default;
};

// --- reference convolution ----------------------------------------------------

/// y[t] = sum_j w[j] * x[t + (j-4)*dilation]. Padded: zero outside the input,
/// output length = input length. Unpadded: only fully-covered positions.
inline std::vector<double> conv_naive(std::span<const double> x, const std::array<double, kKernelLength>& w,
                                      int dilation, bool padded) {
  const int n = static_cast<int>(x.size());
  const int half = (kKernelLength / 2) * dilation;
  const int lo = padded ? 0 : half;
  const int hi = padded ? n : n - half;
  std::vector<double> y;
  if (hi <= lo) return y;
  y.reserve(static_cast<std::size_t>(hi - lo));
  for (int t = lo; t < hi; ++t) {
    double acc = 0.0;
    for (int j = 0; j < kKernelLength; ++j) {
      const int idx = t + (j - kKernelLength / 2) * dilation;
      if (idx >= 0 && idx < n) acc += w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(idx)];
    }
    y.push_back(acc);
  }
  return y;
}

// --- fast path --------------------------------------------------------------

namespace detail {

/// Per-channel A and G_0..G_8 arrays for one dilation.
class DilationCache {
 public:
  void compute(const MotionWindow& w, int dilation, std::span<const int> channels) {
    length_ = w.length();
    const std::size_t stride = static_cast<std::size_t>(kKernelLength + 1) * static_cast<std::size_t>(length_);
    if (data_.size() < stride * static_cast<std::size_t>(w.channels()))
      data_.resize(stride * static_cast<std::size_t>(w.channels()));
    stride_ = stride;
    for (int c : channels) {
      const auto x = w.channel(c);
      double* a = alpha(c);
      std::fill(a, a + length_, 0.0);
      for (int j = 0; j < kKernelLength; ++j) {
        double* g = gamma(c, j);
        const int shift = (j - kKernelLength / 2) * dilation;
        for (int t = 0; t < length_; ++t) {
          const int idx = t + shift;
          const double v = (idx >= 0 && idx < length_) ? x[static_cast<std::size_t>(idx)] : 0.0;
          g[t] = 3.0 * v;
          a[t] -= v;
        }
      }
    }
  }

  /// Summed multichannel output of one kernel over [lo, hi).
  void accumulate(int kernel, std::span<const int> combo, int lo, int hi, std::vector<double>& out) const {
    const auto& k = kernel_indices()[static_cast<std::size_t>(kernel)];
    out.assign(static_cast<std::size_t>(hi - lo), 0.0);
    double* o = out.data() - lo;
    for (int c : combo) {
      const double* a = alpha(c);
      const double* g0 = gamma(c, k[0]);
      const double* g1 = gamma(c, k[1]);
      const double* g2 = gamma(c, k[2]);
      for (int t = lo; t < hi; ++t) o[t] += a[t] + g0[t] + g1[t] + g2[t];
    }
  }

  int length() const { return length_; }

 private:
  double* alpha(int c) { return data_.data() + static_cast<std::size_t>(c) * stride_; }
  const double* alpha(int c) const { return data_.data() + static_cast<std::size_t>(c) * stride_; }
  double* gamma(int c, int j) { return alpha(c) + static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(length_); }
  const double* gamma(int c, int j) const {
    return alpha(c) + static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(length_);
  }

  std::vector<double> data_;
  std::size_t stride_ = 0;
  int length_ = 0;
};

inline std::pair<int, int> output_range(int length, int dilation, bool padded) {
  if (padded) return {0, length};
  const int half = (kKernelLength / 2) * dilation;
  return {half, std::max(half, length - half)};
}

/// numpy-style linear-interpolation quantile of unsorted values.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double golden_quantile(std::size_t feature_index) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  return std::fmod(static_cast<double>(feature_index + 1) * phi, 1.0);
}

}  // namespace detail

/// Proportion of values strictly greater than bias.
inline double ppv(std::span<const double> conv, double bias) {
  if (conv.empty()) return 0.0;
  std::size_t n = 0;
  for (double v : conv) n += v > bias ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(conv.size());
}

inline RocketParams fit(std::span<const MotionWindow> train, int requested_features, std::uint64_t seed) {
  if (train.empty()) throw DataError("cannot fit MiniRocket on an empty dataset");
  const int channels = train[0].channels();
  const int length = train[0].length();
  for (const auto& w : train)
    if (w.channels() != channels || w.length() != length) throw ShapeError("training windows differ in shape");
  if (channels < 1) throw ShapeError("windows have no channels");

  const auto plan = plan_dilations(length, requested_features);
  RocketParams p;
  p.channels = channels;
  p.length = length;
  p.dilations = plan.dilations;
  p.features_per_dilation = plan.features_per_dilation;
  p.seed = seed;

  Rng rng(seed);
  const int max_combo = std::min(channels, kKernelLength);
  std::uniform_real_distribution<double> unit(0.0, std::log2(max_combo + 1.0));
  std::vector<int> pool(static_cast<std::size_t>(channels));
  const std::size_t groups = p.dilations.size() * kNumKernels;
  p.paddings.reserve(groups);
  p.channel_combos.reserve(groups);
  for (std::size_t di = 0; di < p.dilations.size(); ++di) {
    for (int k = 0; k < kNumKernels; ++k) {
      p.paddings.push_back((di + static_cast<std::size_t>(k)) % 2 == 0 ? 1 : 0);
      const int size = std::clamp(static_cast<int>(std::floor(std::pow(2.0, unit(rng)))), 1, max_combo);
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < size; ++i) {
        std::uniform_int_distribution<int> pick(i, channels - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
      }
      std::vector<int> combo(pool.begin(), pool.begin() + size);
      std::sort(combo.begin(), combo.end());
      p.channel_combos.push_back(std::move(combo));
    }
  }

  std::uniform_int_distribution<std::size_t> pick_window(0, train.size() - 1);
  detail::DilationCache cache;
  std::vector<double> out;
  std::size_t feature = 0;
  p.biases.reserve(static_cast<std::size_t>(std::accumulate(p.features_per_dilation.begin(), p.features_per_dilation.end(), 0)));
  for (std::size_t di = 0; di < p.dilations.size(); ++di) {
    const int d = p.dilations[di];
    const int per_group = p.biases_per_group(di);
    for (int k = 0; k < kNumKernels; ++k) {
      const std::size_t g = di * kNumKernels + static_cast<std::size_t>(k);
      const auto& combo = p.channel_combos[g];
      const auto [lo, hi] = detail::output_range(length, d, p.paddings[g] != 0);
      for (int f = 0; f < per_group; ++f, ++feature) {
        cache.compute(train[pick_window(rng)], d, combo);
        cache.accumulate(k, combo, lo, hi, out);
        p.biases.push_back(detail::quantile(out, detail::golden_quantile(feature)));
      }
    }
  }
  return p;
}

inline RocketParams fit(const LabeledDataset& train, int requested_features, std::uint64_t seed) {
  return fit(std::span<const MotionWindow>(train.windows), requested_features, seed);
}

/// Reusable scratch for transform; one per thread.
class Transformer {
 public:
  explicit Transformer(const RocketParams& params) : params_(&params) {
    all_channels_.resize(static_cast<std::size_t>(params.channels));
    std::iota(all_channels_.begin(), all_channels_.end(), 0);
  }

  void transform_into(const MotionWindow& w, std::span<double> features) {
    const auto& p = *params_;
    if (w.channels() != p.channels || w.length() != p.length)
      throw ShapeError("window shape " + std::to_string(w.channels()) + "x" + std::to_string(w.length()) +
                       " does not match fitted shape " + std::to_string(p.channels) + "x" + std::to_string(p.length));
    if (features.size() != p.num_features()) throw ShapeError("feature buffer has the wrong length");

    std::size_t feature = 0;
    for (std::size_t di = 0; di < p.dilations.size(); ++di) {
      const int d = p.dilations[di];
      const int per_group = p.biases_per_group(di);
      cache_.compute(w, d, all_channels_);
      for (int k = 0; k < kNumKernels; ++k) {
        const std::size_t g = di * kNumKernels + static_cast<std::size_t>(k);
        const auto [lo, hi] = detail::output_range(p.length, d, p.paddings[g] != 0);
        cache_.accumulate(k, p.channel_combos[g], lo, hi, out_);
        for (int f = 0; f < per_group; ++f, ++feature) features[feature] = ppv(out_, p.biases[feature]);
      }
    }
  }

  FeatureVector transform(const MotionWindow& w) {
    FeatureVector fv(params_->num_features());
    transform_into(w, fv);
    return fv;
  }

 private:
  const RocketParams* params_;
  std::vector<int> all_channels_;
  detail::DilationCache cache_;
  std::vector<double> out_;
};

inline std::vector<FeatureVector> transform(std::span<const MotionWindow> windows, const RocketParams& params) {
  Transformer tr(params);
  std::vector<FeatureVector> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(tr.transform(w));
  return out;
}

inline FeatureVector transform(const MotionWindow& window, const RocketParams& params) {
  return Transformer(params).transform(window);
}

}  // namespace motionrocket::rocket
