#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace motionrocket;
using mrtest::frame;

namespace {

std::vector<StreamRow> rows_of(int n, int channels = 24) {
  std::vector<StreamRow> rows;
  for (int k = 0; k < n; ++k) {
    StreamRow r;
    r.t_ms = k * 1000.0 / 48.0;
    r.values.assign(static_cast<std::size_t>(channels), static_cast<double>(k));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST(ChannelLayout, IndexIsSensorMajor) {
  ChannelLayout l;
  EXPECT_EQ(l.channels(), 24);
  EXPECT_EQ(l.channel_index(0, 0), 0);
  EXPECT_EQ(l.channel_index(2, 3), 15);
  EXPECT_EQ(l.channel_index(3, 5), 23);
  EXPECT_EQ(l.samples_for(2.0), 96);
}

TEST(Assembler, SingleTickAtOrigin) {
  std::vector<SensorFrame> frames;
  for (int s = 0; s < 4; ++s) frames.push_back(frame(s, 0.0, 0.25 * (s + 1)));
  const auto rows = assemble_stream(frames);
  ASSERT_EQ(rows.size(), 1u);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 6; ++a) EXPECT_EQ(rows[0].values[static_cast<std::size_t>(s * 6 + a)], 0.25 * (s + 1));
  EXPECT_FALSE(rows[0].stale());
}

TEST(Assembler, LinearInterpolationMidpoint) {
  // Sensor 0 reports at 48 Hz; a 96 Hz grid puts a tick halfway between its frames.
  AssemblerConfig cfg;
  cfg.layout.num_sensors = 1;
  cfg.layout.sample_rate_hz = 96.0;
  const double p = 1000.0 / 48.0;
  const auto rows = assemble_stream(std::vector<SensorFrame>{frame(0, 0.0, 0.0), frame(0, p, 1.0)}, cfg);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[1].t_ms, 10.41666, 1e-4);
  EXPECT_DOUBLE_EQ(rows[1].values[0], 0.5);
  EXPECT_DOUBLE_EQ(rows[2].values[0], 1.0);
}

TEST(Assembler, SilentSensorHoldsValueAndFlagsStale) {
  const double p = 1000.0 / 48.0;
  std::vector<SensorFrame> frames;
  for (int k = 0; k <= 30; ++k)
    for (int s = 0; s < 4; ++s) {
      if (s == 2 && k > 0 && k * p < 300.0) {
        continue;  // sensor 2 quiet for ~300 ms
      }
      frames.push_back(frame(s, k * p, s == 2 ? 7.0 + k : 1.0));
    }
  const auto rows = assemble_stream(frames);
  ASSERT_EQ(rows.size(), 31u);
  bool saw_stale = false;
  for (const auto& r : rows) {
    const bool stale2 = (r.stale_mask & (1u << 2)) != 0;
    EXPECT_EQ(r.stale_mask & ~(1u << 2), 0u);
    if (r.t_ms > 250.0 && r.t_ms < 14 * p + 1e-9) {
      EXPECT_TRUE(stale2) << r.t_ms;
      EXPECT_EQ(r.values[12], 7.0) << "held value at " << r.t_ms;
      saw_stale = true;
    }
    if (r.t_ms <= 250.0) {
      EXPECT_FALSE(stale2) << r.t_ms;
    }
  }
  EXPECT_TRUE(saw_stale);
}

TEST(Assembler, GridHasNoGapsOrDuplicates) {
  Rng rng(11);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0);
  const double p = 1000.0 / 48.0;
  std::vector<SensorFrame> frames;
  for (int k = 0; k < 200; ++k)
    for (int s = 0; s < 4; ++s) frames.push_back(frame(s, 5.0 + k * p + (k ? jitter(rng) : 0.0), std::sin(k * 0.1)));
  std::stable_sort(frames.begin(), frames.end(), [](auto& a, auto& b) { return a.t_ms < b.t_ms; });
  const auto rows = assemble_stream(frames);
  ASSERT_GT(rows.size(), 190u);
  for (std::size_t k = 0; k < rows.size(); ++k) EXPECT_DOUBLE_EQ(rows[k].t_ms, 5.0 + static_cast<double>(k) * p);
}

TEST(Assembler, RejectsUnknownSensorAndNonFinite) {
  StreamAssembler a;
  std::vector<StreamRow> out;
  EXPECT_FALSE(a.push(frame(4, 0.0, 1.0), out));
  EXPECT_FALSE(a.push(frame(-1, 0.0, 1.0), out));
  EXPECT_FALSE(a.push(frame(0, 0.0, std::nan("")), out));
  EXPECT_EQ(a.stats().rejected_sensor, 2u);
  EXPECT_EQ(a.stats().rejected_nonfinite, 1u);
  EXPECT_TRUE(a.push(frame(0, 0.0, 1.0), out));
}

TEST(Assembler, ToleratesReorderingWithinWindow) {
  const double p = 1000.0 / 48.0;
  std::vector<SensorFrame> ordered;
  for (int k = 0; k < 40; ++k)
    for (int s = 0; s < 4; ++s) ordered.push_back(frame(s, k * p, k + 0.1 * s));
  auto shuffled = ordered;
  // Swap neighbouring ticks of sensor 1 (about 21 ms apart).
  for (std::size_t i = 0; i + 4 < shuffled.size(); i += 8) std::swap(shuffled[i + 1], shuffled[i + 5]);
  EXPECT_EQ(assemble_stream(ordered), assemble_stream(shuffled));
}

TEST(Segment, Counts) {
  EXPECT_EQ(segment(rows_of(480), 24, 96, 96).size(), 5u);
  EXPECT_EQ(segment(rows_of(480), 24, 96, 48).size(), 9u);
  EXPECT_EQ(segment(rows_of(95), 24, 96, 96).size(), 0u);
  EXPECT_THROW(segment(rows_of(10), 24, 96, 0), std::invalid_argument);
  EXPECT_THROW(segment(rows_of(10), 24, 96, 385), std::invalid_argument);
}

TEST(Segment, NonOverlappingExhaustiveCoverage) {
  for (int n : {0, 95, 96, 191, 192, 500}) {
    const auto w = segment(rows_of(n), 24, 96, 96);
    ASSERT_EQ(w.size(), static_cast<std::size_t>(n / 96));
    for (std::size_t i = 0; i < w.size(); ++i)
      for (int t = 0; t < 96; ++t) EXPECT_EQ(w[i].at(0, t), static_cast<double>(i * 96 + t));
  }
}

TEST(WindowSlicer, MatchesSegment) {
  const auto rows = rows_of(700, 3);
  for (int hop : {1, 17, 48, 96, 150, 384}) {
    const auto expected = segment(rows, 3, 96, hop);
    WindowSlicer slicer(3, 96, hop);
    std::vector<MotionWindow> got;
    for (const auto& r : rows)
      if (auto w = slicer.push(r)) got.push_back(w->window);
    EXPECT_EQ(got, expected) << "hop " << hop;
  }
}
