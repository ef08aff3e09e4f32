#pragma once

// Labeled window datasets and raw frame recordings, both stored as NDJSON.
//
// Dataset line:   {"label": 3, "t_start_ms": 0.0, "window": [[...96 values...], ...24 channels...]}
//                  plus an optional "class" name; names are stored per line, so a class with no windows loses its name.
// Recording line: {"seq": 0, "t_ms": 0.0, "sensor": 2, "ax": .., "ay": .., "az": .., "gx": .., "gy": .., "gz": ..}
//
// Doubles are written in shortest round-trip form, so load(save(ds)) is exact.

#include <array>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionrocket/error.hpp"
#include "motionrocket/signal.hpp"

namespace motionrocket {

struct LabeledDataset {
  std::vector<MotionWindow> windows;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }

  void add(MotionWindow w, int label) {
    windows.push_back(std::move(w));
    labels.push_back(label);
  }

  /// Throws DataError on any violated invariant.
  void validate() const {
    if (windows.size() != labels.size()) throw DataError("dataset has mismatched window and label counts");
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= kNumClasses)
        throw DataError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) + " outside 0.." +
                        std::to_string(kNumClasses - 1));
      if (windows[i].channels() != windows[0].channels() || windows[i].length() != windows[0].length())
        throw DataError("window " + std::to_string(i) + " shape differs from window 0");
      if (!windows[i].all_finite()) throw DataError("window " + std::to_string(i) + " has non-finite values");
    }
  }

  std::map<int, std::size_t> class_counts() const {
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    return counts;
  }

  LabeledDataset subset(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.class_names = class_names;
    out.windows.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (auto i : indices) out.add(windows[i], labels[i]);
    return out;
  }

  bool operator==(const LabeledDataset&) const = default;
};

namespace detail {

inline nlohmann::json window_to_json(const MotionWindow& w, int label, const std::string* class_name = nullptr) {
  nlohmann::json channels = nlohmann::json::array();
  for (int c = 0; c < w.channels(); ++c) {
    auto ch = w.channel(c);
    channels.push_back(std::vector<double>(ch.begin(), ch.end()));
  }
  nlohmann::json j{{"label", label}, {"t_start_ms", w.t_start_ms()}, {"window", std::move(channels)}};
  if (class_name) j["class"] = *class_name;
  return j;
}

inline std::pair<MotionWindow, int> window_from_json(const nlohmann::json& j) {
  const int label = j.at("label").get<int>();
  const double t = j.contains("t_start_ms") ? j.at("t_start_ms").get<double>() : 0.0;
  const auto& chans = j.at("window");
  if (!chans.is_array() || chans.empty()) throw DataError("\"window\" must be a non-empty array of channels");
  const int channels = static_cast<int>(chans.size());
  const int length = static_cast<int>(chans[0].size());
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(channels) * static_cast<std::size_t>(length));
  for (const auto& ch : chans) {
    if (!ch.is_array() || static_cast<int>(ch.size()) != length) throw DataError("ragged window channels");
    for (const auto& v : ch) data.push_back(v.get<double>());
  }
  return {MotionWindow(channels, length, std::move(data), t), label};
}

}  // namespace detail

inline void save_dataset(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto label = static_cast<std::size_t>(ds.labels[i]);
    const std::string* name = label < ds.class_names.size() ? &ds.class_names[label] : nullptr;
    out << detail::window_to_json(ds.windows[i], ds.labels[i], name).dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path);
  LabeledDataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto [w, label] = detail::window_from_json(j);
      if (label < 0 || label >= kNumClasses)
        throw DataError("label " + std::to_string(label) + " outside 0.." + std::to_string(kNumClasses - 1));
      if (j.contains("class")) {
        const auto name = j.at("class").get<std::string>();
        if (ds.class_names.empty()) ds.class_names.assign(kNumClasses, "");
        auto& slot = ds.class_names[static_cast<std::size_t>(label)];
        if (!slot.empty() && slot != name)
          throw DataError("class name \"" + name + "\" conflicts with \"" + slot + "\" for label " + std::to_string(label));
        slot = name;
      }
      if (!ds.empty() && (w.channels() != ds.windows[0].channels() || w.length() != ds.windows[0].length()))
        throw DataError("window shape differs from first line");
      ds.add(std::move(w), label);
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  ds.validate();
  return ds;
}

// --- frames -----------------------------------------------------------------

inline nlohmann::json frame_to_json(const SensorFrame& f) {
  return {{"seq", f.seq},         {"t_ms", f.t_ms},        {"sensor", f.sensor_id},
          {"ax", f.accel[0]},     {"ay", f.accel[1]},      {"az", f.accel[2]},
          {"gx", f.gyro[0]},      {"gy", f.gyro[1]},       {"gz", f.gyro[2]}};
}

/// Parses one ingest line. Throws DataError on malformed input.
inline SensorFrame parse_frame(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed frame: ") + e.what());
  }
  try {
    SensorFrame f;
    f.seq = j.at("seq").get<std::uint64_t>();
    f.t_ms = j.at("t_ms").get<double>();
    f.sensor_id = j.at("sensor").get<int>();
    f.accel = {j.at("ax").get<double>(), j.at("ay").get<double>(), j.at("az").get<double>()};
    f.gyro = {j.at("gx").get<double>(), j.at("gy").get<double>(), j.at("gz").get<double>()};
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed frame: ") + e.what());
  }
}

inline void save_recording(std::span<const SensorFrame> frames, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& f : frames) out << frame_to_json(f).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<SensorFrame> load_recording(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open recording " + path);
  std::vector<SensorFrame> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      frames.push_back(parse_frame(line));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return frames;
}

}  // namespace motionrocket
