#pragma once

// Sensor frames, the 24-channel layout, fixed-length windows, and the
// streaming machinery that turns asynchronous per-sensor frames into
// windows on a uniform sample grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace motionrocket {

inline constexpr int kNumClasses = 7;

/// One reading from one IMU unit: accelerometer in g, gyroscope in deg/s.
struct SensorFrame {
  std::uint64_t seq = 0;
  double t_ms = 0.0;
  int sensor_id = 0;
  std::array<double, 3> accel{};
  std::array<double, 3> gyro{};

  double axis(int a) const { return a < 3 ? accel[a] : gyro[a - 3]; }

  bool finite() const {
    for (int a = 0; a < 6; ++a)
      if (!std::isfinite(axis(a))) return false;
    return std::isfinite(t_ms);
  }

  bool operator==(const SensorFrame&) const = default;
};

/// Sensor-major, accel-before-gyro ordering: channel = sensor * 6 + axis.
struct ChannelLayout {
  static constexpr int kAxesPerSensor = 6;

  int num_sensors = 4;
  double sample_rate_hz = 48.0;

  int channels() const { return num_sensors * kAxesPerSensor; }
  int channel_index(int sensor, int axis) const { return sensor * kAxesPerSensor + axis; }
  double period_ms() const { return 1000.0 / sample_rate_hz; }
  int samples_for(double seconds) const { return static_cast<int>(std::lround(seconds * sample_rate_hz)); }

  void validate() const {
    if (num_sensors < 1) throw std::invalid_argument("layout needs at least one sensor");
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
  }
};

/// Channels x samples matrix of float64 values, stored channel-major.
class MotionWindow {
 public:
  MotionWindow() = default;

  MotionWindow(int channels, int length, double t_start_ms = 0.0)
      : channels_(channels), length_(length), t_start_ms_(t_start_ms),
        data_(static_cast<std::size_t>(channels) * static_cast<std::size_t>(length), 0.0) {
    if (channels < 0 || length < 0) throw std::invalid_argument("negative window shape");
  }

  MotionWindow(int channels, int length, std::vector<double> data, double t_start_ms = 0.0)
      : channels_(channels), length_(length), t_start_ms_(t_start_ms), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(channels) * static_cast<std::size_t>(length))
      throw std::invalid_argument("window data size does not match shape");
  }

  int channels() const { return channels_; }
  int length() const { return length_; }
  double t_start_ms() const { return t_start_ms_; }
  void set_t_start_ms(double t) { t_start_ms_ = t; }

  std::span<const double> channel(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * length_, static_cast<std::size_t>(length_)};
  }
  std::span<double> channel(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * length_, static_cast<std::size_t>(length_)};
  }

  double at(int c, int t) const { return data_[static_cast<std::size_t>(c) * length_ + t]; }
  double& at(int c, int t) { return data_[static_cast<std::size_t>(c) * length_ + t]; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const MotionWindow&) const = default;

 private:
  int channels_ = 0;
  int length_ = 0;
  double t_start_ms_ = 0.0;
  std::vector<double> data_;
};

/// One tick of the uniform grid. Bit s of stale_mask is set when sensor s
/// had no frame within the gap tolerance of this tick.
struct StreamRow {
  double t_ms = 0.0;
  std::vector<double> values;
  std::uint32_t stale_mask = 0;

  bool stale() const { return stale_mask != 0; }
  bool operator==(const StreamRow&) const = default;
};

struct AssemblerConfig {
  ChannelLayout layout{};
  double gap_tolerance_ms = 250.0;
  // Frames older than the sensor's newest frame by more than this are dropped.
  double reorder_window_ms = 100.0;
};

struct AssemblerStats {
  std::uint64_t accepted = 0;
  std::uint64_t rejected_sensor = 0;
  std::uint64_t rejected_nonfinite = 0;
  std::uint64_t rejected_late = 0;

  std::uint64_t rejected() const { return rejected_sensor + rejected_nonfinite + rejected_late; }
};

/// Resamples per-sensor frames onto the grid t0 + k * period.
///
/// Each channel is linearly interpolated between the two frames that bracket
/// a tick. When those frames are further apart than the gap tolerance, or the
/// sensor has gone quiet, the last value is held and the tick is flagged stale.
/// A tick is emitted once every sensor either has a frame at or after it or
/// has been silent for longer than the gap tolerance relative to the newest
/// frame seen from any sensor.
class StreamAssembler {
 public:
  explicit StreamAssembler(AssemblerConfig cfg = {}) : cfg_(cfg), history_(cfg.layout.num_sensors) {
    cfg_.layout.validate();
    if (cfg_.gap_tolerance_ms < 0.0) throw std::invalid_argument("gap tolerance must be non-negative");
  }

  const AssemblerConfig& config() const { return cfg_; }
  const AssemblerStats& stats() const { return stats_; }
  std::optional<double> origin_ms() const { return t0_; }

  /// Feeds one frame and appends the rows it completes. Returns false when
  /// the frame was rejected (unknown sensor, non-finite value, too late).
  bool push(const SensorFrame& f, std::vector<StreamRow>& out) {
    if (f.sensor_id < 0 || f.sensor_id >= cfg_.layout.num_sensors) {
      ++stats_.rejected_sensor;
      return false;
    }
    if (!f.finite()) {
      ++stats_.rejected_nonfinite;
      return false;
    }
    auto& h = history_[static_cast<std::size_t>(f.sensor_id)];
    if (!h.empty() && f.t_ms < h.back().t_ms) {
      if (h.back().t_ms - f.t_ms > cfg_.reorder_window_ms || (emitted_any_ && f.t_ms < last_tick_ms_)) {
        ++stats_.rejected_late;
        return false;
      }
      auto pos = std::upper_bound(h.begin(), h.end(), f.t_ms,
                                  [](double t, const SensorFrame& x) { return t < x.t_ms; });
      h.insert(pos, f);
    } else {
      h.push_back(f);
    }
    ++stats_.accepted;
    if (!t0_) t0_ = f.t_ms;
    watermark_ = std::max(watermark_, f.t_ms);
    drain(out, false);
    return true;
  }

  /// End of stream: emits every remaining tick up to the newest frame.
  void flush(std::vector<StreamRow>& out) { drain(out, true); }

  std::vector<StreamRow> assemble(std::span<const SensorFrame> frames) {
    std::vector<StreamRow> rows;
    for (const auto& f : frames) push(f, rows);
    flush(rows);
    return rows;
  }

 private:
  double tick_time(std::int64_t k) const { return *t0_ + static_cast<double>(k) * cfg_.layout.period_ms(); }

  // A bracket wider than 1.5 periods may still be missing a reordered frame,
  // so it waits until the reorder window has passed.
  bool sensor_ready(std::size_t s, double t) const {
    const auto& h = history_[s];
    if (!h.empty() && h.back().t_ms >= t) {
      if (h.back().t_ms - t >= cfg_.reorder_window_ms) return true;
      auto next = std::lower_bound(h.begin(), h.end(), t,
                                   [](const SensorFrame& x, double v) { return x.t_ms < v; });
      if (next->t_ms == t) return true;
      if (next == h.begin()) return false;
      return next->t_ms - std::prev(next)->t_ms <= 1.5 * cfg_.layout.period_ms();
    }
    // A silent sensor may resume exactly at t, so wait for a newer frame elsewhere.
    const double last = h.empty() ? *t0_ : h.back().t_ms;
    return watermark_ - last > cfg_.gap_tolerance_ms && watermark_ > t;
  }

  void drain(std::vector<StreamRow>& out, bool final) {
    if (!t0_) return;
    for (;;) {
      const double t = tick_time(next_tick_);
      if (t > watermark_) break;
      if (!final) {
        bool ready = true;
        for (std::size_t s = 0; s < history_.size() && ready; ++s) ready = sensor_ready(s, t);
        if (!ready) break;
      }
      out.push_back(make_row(t));
      last_tick_ms_ = t;
      emitted_any_ = true;
      ++next_tick_;
      prune(t);
    }
  }

  StreamRow make_row(double t) const {
    StreamRow row;
    row.t_ms = t;
    row.values.assign(static_cast<std::size_t>(cfg_.layout.channels()), 0.0);
    const double tol = cfg_.gap_tolerance_ms;
    for (std::size_t s = 0; s < history_.size(); ++s) {
      const auto& h = history_[s];
      auto next = std::lower_bound(h.begin(), h.end(), t,
                                   [](const SensorFrame& x, double v) { return x.t_ms < v; });
      const SensorFrame* nf = next != h.end() ? &*next : nullptr;
      const SensorFrame* pf = next != h.begin() ? &*std::prev(next) : nullptr;
      bool stale = false;
      std::array<double, 6> v{};
      if (nf && nf->t_ms == t) {
        for (int a = 0; a < 6; ++a) v[a] = nf->axis(a);
      } else if (pf && nf && nf->t_ms - pf->t_ms <= tol) {
        const double w = (t - pf->t_ms) / (nf->t_ms - pf->t_ms);
        for (int a = 0; a < 6; ++a) v[a] = pf->axis(a) + w * (nf->axis(a) - pf->axis(a));
      } else if (pf) {
        for (int a = 0; a < 6; ++a) v[a] = pf->axis(a);
        stale = t - pf->t_ms > tol;
      } else if (nf) {
        for (int a = 0; a < 6; ++a) v[a] = nf->axis(a);
        stale = nf->t_ms - t > tol;
      } else {
        stale = true;
      }
      for (int a = 0; a < 6; ++a)
        row.values[static_cast<std::size_t>(cfg_.layout.channel_index(static_cast<int>(s), a))] = v[a];
      if (stale) row.stale_mask |= (1u << s);
    }
    return row;
  }

  // Keep the newest frame at or before t; everything older is unreachable.
  void prune(double t) {
    for (auto& h : history_)
      while (h.size() >= 2 && h[1].t_ms <= t) h.pop_front();
  }

  AssemblerConfig cfg_;
  std::vector<std::deque<SensorFrame>> history_;
  AssemblerStats stats_{};
  std::optional<double> t0_;
  std::int64_t next_tick_ = 0;
  double watermark_ = -std::numeric_limits<double>::infinity();
  double last_tick_ms_ = 0.0;
  bool emitted_any_ = false;
};

inline std::vector<StreamRow> assemble_stream(std::span<const SensorFrame> frames, AssemblerConfig cfg = {}) {
  return StreamAssembler(cfg).assemble(frames);
}

inline void validate_segmentation(int window_len, int hop) {
  if (window_len < 1) throw std::invalid_argument("window_len must be >= 1");
  if (hop < 1 || hop > 4 * window_len) throw std::invalid_argument("hop must be in [1, 4 * window_len]");
}

/// Window i covers rows [i*hop, i*hop + window_len); a trailing partial window is dropped.
inline std::vector<MotionWindow> segment(std::span<const StreamRow> rows, int channels, int window_len, int hop) {
  validate_segmentation(window_len, hop);
  std::vector<MotionWindow> windows;
  const std::size_t n = rows.size();
  for (std::size_t start = 0; start + static_cast<std::size_t>(window_len) <= n; start += static_cast<std::size_t>(hop)) {
    MotionWindow w(channels, window_len, rows[start].t_ms);
    for (int t = 0; t < window_len; ++t) {
      const auto& r = rows[start + static_cast<std::size_t>(t)];
      if (r.values.size() != static_cast<std::size_t>(channels)) throw std::invalid_argument("row width mismatch");
      for (int c = 0; c < channels; ++c) w.at(c, t) = r.values[static_cast<std::size_t>(c)];
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

struct SlicedWindow {
  MotionWindow window;
  double t_end_ms = 0.0;
  bool stale = false;
};

/// Incremental counterpart of segment(): fed one row at a time, it yields the
/// same windows in the same order while buffering at most one window of rows.
class WindowSlicer {
 public:
  WindowSlicer(int channels, int window_len, int hop) : channels_(channels), window_len_(window_len), hop_(hop) {
    validate_segmentation(window_len, hop);
  }

  std::optional<SlicedWindow> push(const StreamRow& row) {
    const std::uint64_t index = rows_seen_++;
    if (index < next_start_) return std::nullopt;  // hop > window_len gap
    buffer_.push_back(row);
    if (buffer_.size() > static_cast<std::size_t>(window_len_)) buffer_.pop_front();
    if (index + 1 != next_start_ + static_cast<std::uint64_t>(window_len_)) return std::nullopt;

    SlicedWindow out{MotionWindow(channels_, window_len_, buffer_.front().t_ms), buffer_.back().t_ms, false};
    for (int t = 0; t < window_len_; ++t) {
      const auto& r = buffer_[static_cast<std::size_t>(t)];
      if (r.values.size() != static_cast<std::size_t>(channels_)) throw std::invalid_argument("row width mismatch");
      out.stale = out.stale || r.stale();
      for (int c = 0; c < channels_; ++c) out.window.at(c, t) = r.values[static_cast<std::size_t>(c)];
    }
    next_start_ += static_cast<std::uint64_t>(hop_);
    // Drop rows that no later window needs.
    while (!buffer_.empty() && index + 1 - buffer_.size() < next_start_) buffer_.pop_front();
    return out;
  }

  std::uint64_t rows_seen() const { return rows_seen_; }

 private:
  int channels_;
  int window_len_;
  int hop_;
  std::uint64_t rows_seen_ = 0;
  std::uint64_t next_start_ = 0;
  std::deque<StreamRow> buffer_;
};

}  // namespace motionrocket
