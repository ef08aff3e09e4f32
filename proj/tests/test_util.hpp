#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "motionrocket.hpp"

namespace mrtest {

inline motionrocket::MotionWindow random_window(int channels, int length, std::uint64_t seed, double scale = 1.0) {
  motionrocket::Rng rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  motionrocket::MotionWindow w(channels, length);
  for (auto& v : w.values()) v = n(rng);
  return w;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("motionrocket-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline motionrocket::SensorFrame frame(int sensor, double t_ms, double value, std::uint64_t seq = 0) {
  motionrocket::SensorFrame f;
  f.seq = seq;
  f.t_ms = t_ms;
  f.sensor_id = sensor;
  f.accel = {value, value, value};
  f.gyro = {value, value, value};
  return f;
}

}  // namespace mrtest
