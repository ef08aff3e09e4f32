#pragma once

// Nearest-rank percentiles and the latency log written by the server.
//
// Log line: {"t_ms": .., "label": .., "latency_ms": .., "infer_ms": .., "stale": .., "dropped": ..}

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionrocket/error.hpp"

namespace motionrocket {

/// Smallest value with at least p% of the sample at or below it.
inline double nearest_rank(std::vector<double> values, double percentile) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (percentile < 0.0 || percentile > 100.0) throw std::invalid_argument("percentile must be within [0, 100]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(percentile / 100.0 * n)));
  return values[rank - 1];
}

struct PercentileSummary {
  std::size_t count = 0;
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

inline PercentileSummary summarize(std::span<const double> values) {
  PercentileSummary s;
  std::vector<double> v(values.begin(), values.end());
  s.count = v.size();
  s.p50 = nearest_rank(v, 50.0);
  s.p95 = nearest_rank(v, 95.0);
  s.max = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  return s;
}

inline nlohmann::json to_json(const PercentileSummary& s) {
  return {{"count", s.count}, {"p50", s.p50}, {"p95", s.p95}, {"max", s.max}, {"mean", s.mean}};
}

struct LatencyRecord {
  double t_ms = 0.0;
  int label = 0;
  double latency_ms = 0.0;
  double infer_ms = 0.0;
  bool stale = false;
  std::uint64_t dropped = 0;
};

inline nlohmann::json to_json(const LatencyRecord& r) {
  return {{"t_ms", r.t_ms},           {"label", r.label}, {"latency_ms", r.latency_ms},
          {"infer_ms", r.infer_ms},   {"stale", r.stale}, {"dropped", r.dropped}};
}

struct LatencySummary {
  PercentileSummary end_to_end_ms;
  PercentileSummary inference_ms;
};

inline nlohmann::json to_json(const LatencySummary& s) {
  const auto& e = s.end_to_end_ms;
  const auto& i = s.inference_ms;
  return {{"events", e.count},
          {"end_to_end_ms", {{"p50", e.p50}, {"p95", e.p95}, {"max", e.max}}},
          {"inference_ms", {{"p50", i.p50}, {"p95", i.p95}}}};
}

inline LatencySummary summarize_latency(std::span<const LatencyRecord> records) {
  if (records.empty()) throw DataError("latency log is empty");
  std::vector<double> e2e;
  std::vector<double> infer;
  for (const auto& r : records) {
    e2e.push_back(r.latency_ms);
    infer.push_back(r.infer_ms);
  }
  return {summarize(e2e), summarize(infer)};
}

inline std::vector<LatencyRecord> load_latency_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open latency log " + path);
  std::vector<LatencyRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LatencyRecord r;
      r.latency_ms = j.at("latency_ms").get<double>();
      r.infer_ms = j.value("infer_ms", 0.0);
      r.t_ms = j.value("t_ms", 0.0);
      r.label = j.value("label", 0);
      r.stale = j.value("stale", false);
      r.dropped = j.value("dropped", std::uint64_t{0});
      out.push_back(r);
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

/// p50/p95/max of frame-to-emit latency and p50/p95 of inference time.
inline LatencySummary measure_latency(const std::string& log_path) {
  return summarize_latency(load_latency_log(log_path));
}

}  // namespace motionrocket
