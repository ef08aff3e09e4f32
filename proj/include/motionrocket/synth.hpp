#pragma once

// Synthetic seven-class IMU motion data.
//
// Class c >= 1 is a sinusoid at 0.5 + 0.5*c Hz with a random phase per
// channel, active only on the channels selected by the class's placement
// mask (wrists, ankles, one body side, accel-only, gyro-only). Class 0 is
// low-amplitude noise on every channel.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "motionrocket/dataset.hpp"
#include "motionrocket/random.hpp"
#include "motionrocket/signal.hpp"

namespace motionrocket::synth {

/// Per-class counts for `total` windows, remainder dealt to the lowest classes.
inline std::vector<int> counts_for_total(int total, int classes = kNumClasses) {
  if (total < classes) throw std::invalid_argument("total must provide at least one window per class");
  std::vector<int> counts(static_cast<std::size_t>(classes), total / classes);
  for (int i = 0; i < total % classes; ++i) ++counts[static_cast<std::size_t>(i)];
  return counts;
}

struct SynthSpec {
  std::vector<int> samples_per_class = counts_for_total(648);
  double noise_std = 0.05;
  double idle_std = 0.1;
  // Per-window amplitude drawn uniformly from [1 - a, 1 + a].
  double amplitude_jitter = 0.2;
  double window_seconds = 2.0;
  ChannelLayout layout{};
  std::uint64_t seed = 7;

  void validate() const {
    if (samples_per_class.size() != static_cast<std::size_t>(kNumClasses))
      throw std::invalid_argument("samples_per_class needs one entry per class");
    for (int n : samples_per_class)
      if (n < 1) throw std::invalid_argument("samples_per_class entries must be >= 1");
    if (noise_std < 0.0 || idle_std < 0.0 || amplitude_jitter < 0.0 || amplitude_jitter >= 1.0)
      throw std::invalid_argument("invalid synth noise/amplitude settings");
    if (layout.num_sensors != 4) throw std::invalid_argument("synthetic masks assume four sensors");
    for (int c = 1; c < kNumClasses; ++c)
      if (0.5 + 0.5 * c >= layout.sample_rate_hz / 2) throw std::invalid_argument("class frequency above Nyquist");
  }
};

inline double class_frequency_hz(int c) { return 0.5 + 0.5 * c; }

// Sensors 0,1 are the wrists, 2,3 the ankles.
inline std::array<double, 24> channel_mask(int c) {
  std::array<double, 24> m{};
  auto set = [&](std::initializer_list<int> sensors, int first_axis, int last_axis) {
    for (int s : sensors)
      for (int a = first_axis; a <= last_axis; ++a) m[static_cast<std::size_t>(s * 6 + a)] = 1.0;
  };
  switch (c) {
    case 1: set({0, 1}, 0, 5); break;
    case 2: set({2, 3}, 0, 5); break;
    case 3: set({0, 1, 2, 3}, 0, 2); break;
    case 4: set({0, 2}, 0, 5); break;
    case 5: set({1, 3}, 0, 5); break;
    case 6: set({0, 1, 2, 3}, 3, 5); break;
    default: break;
  }
  return m;
}

inline MotionWindow generate_window(const SynthSpec& spec, int label, Rng& rng, double t_start_ms = 0.0) {
  const int channels = spec.layout.channels();
  const int length = spec.layout.samples_for(spec.window_seconds);
  MotionWindow w(channels, length, t_start_ms);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp_dist(1.0 - spec.amplitude_jitter, 1.0 + spec.amplitude_jitter);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double amplitude = amp_dist(rng);
  const auto mask = channel_mask(label);
  const double omega = 2.0 * std::numbers::pi * class_frequency_hz(label) / spec.layout.sample_rate_hz;
  for (int c = 0; c < channels; ++c) {
    const double phase = phase_dist(rng);
    auto x = w.channel(c);
    for (int t = 0; t < length; ++t) {
      double v = 0.0;
      if (label == 0)
        v = spec.idle_std * normal(rng);
      else if (mask[static_cast<std::size_t>(c)] != 0.0)
        v = amplitude * mask[static_cast<std::size_t>(c)] * std::sin(omega * t + phase);
      if (spec.noise_std > 0.0) v += spec.noise_std * normal(rng);
      x[static_cast<std::size_t>(t)] = v;
    }
  }
  return w;
}

/// Windows in class-major order; window i of class c depends only on (seed, c, i).
inline LabeledDataset generate(const SynthSpec& spec) {
  spec.validate();
  LabeledDataset ds;
  ds.class_names = {"idle", "motion1", "motion2", "motion3", "motion4", "motion5", "motion6"};
  const double window_ms = spec.window_seconds * 1000.0;
  std::size_t index = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    for (int i = 0; i < spec.samples_per_class[static_cast<std::size_t>(c)]; ++i, ++index) {
      Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i)}));
      ds.add(generate_window(spec, c, rng, static_cast<double>(index) * window_ms), c);
    }
  }
  return ds;
}

struct Recording {
  std::vector<SensorFrame> frames;
  // Ground truth per grid sample; -1 inside a crossfade between different classes.
  std::vector<int> sample_labels;
  // Sample index where each concatenated window begins.
  std::vector<std::size_t> window_starts;
};

/// Concatenates the dataset's windows, interleaved round-robin across classes
/// so consecutive windows differ where possible, blending the last and first
/// `crossfade_seconds` of neighbours linearly. Emits one frame per sensor per sample.
inline Recording inject_transitions(const LabeledDataset& ds, double crossfade_seconds, ChannelLayout layout = {}) {
  ds.validate();
  if (ds.empty()) return {};
  const int length = ds.windows[0].length();
  const int channels = ds.windows[0].channels();
  if (channels != layout.channels()) throw std::invalid_argument("dataset channels do not match the layout");
  const int fade = layout.samples_for(crossfade_seconds);
  if (crossfade_seconds < 0.0 || fade >= length) throw std::invalid_argument("crossfade must be shorter than a window");

  std::map<int, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < ds.size(); ++i) buckets[ds.labels[i]].push_back(i);
  std::vector<std::size_t> order;
  for (std::size_t round = 0; order.size() < ds.size(); ++round)
    for (auto& [label, idx] : buckets)
      if (round < idx.size()) order.push_back(idx[round]);

  std::vector<std::vector<double>> rows;
  Recording rec;
  for (std::size_t n = 0; n < order.size(); ++n) {
    const auto& w = ds.windows[order[n]];
    const int label = ds.labels[order[n]];
    const int overlap = n == 0 ? 0 : fade;
    const std::size_t start = rows.size() - static_cast<std::size_t>(overlap);
    rec.window_starts.push_back(start);
    for (int t = 0; t < length; ++t) {
      std::vector<double> v(static_cast<std::size_t>(channels));
      for (int c = 0; c < channels; ++c) v[static_cast<std::size_t>(c)] = w.at(c, t);
      if (t < overlap) {
        const double a = static_cast<double>(t + 1) / static_cast<double>(overlap + 1);
        auto& prev = rows[start + static_cast<std::size_t>(t)];
        for (int c = 0; c < channels; ++c)
          prev[static_cast<std::size_t>(c)] = (1.0 - a) * prev[static_cast<std::size_t>(c)] + a * v[static_cast<std::size_t>(c)];
        int& lab = rec.sample_labels[start + static_cast<std::size_t>(t)];
        if (lab != label) lab = -1;
      } else {
        rows.push_back(std::move(v));
        rec.sample_labels.push_back(label);
      }
    }
  }

  std::uint64_t seq = 0;
  rec.frames.reserve(rows.size() * static_cast<std::size_t>(layout.num_sensors));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double t_ms = static_cast<double>(k) * layout.period_ms();
    for (int s = 0; s < layout.num_sensors; ++s) {
      SensorFrame f;
      f.seq = seq++;
      f.t_ms = t_ms;
      f.sensor_id = s;
      for (int a = 0; a < 3; ++a) {
        f.accel[static_cast<std::size_t>(a)] = rows[k][static_cast<std::size_t>(layout.channel_index(s, a))];
        f.gyro[static_cast<std::size_t>(a)] = rows[k][static_cast<std::size_t>(layout.channel_index(s, a + 3))];
      }
      rec.frames.push_back(f);
    }
  }
  return rec;
}

}  // namespace motionrocket::synth
