#pragma once

// Binary model file (.mrmd). All integers and floats little-endian.
//
//   char[4]  magic "MRMD"
//   u16      version (1)
//   -- rocket params
//   u32      channels
//   u32      window length
//   u64      seed
//   u32      D, then D x (u32 dilation, u32 features for that dilation)
//   u32      G (= 84 * D), then G x (u8 padded, u32 s, s x u32 channel)
//   u64      F, then F x f64 bias
//   -- ridge
//   u32      K, then K x i32 class label
//   f64      alpha
//   u64      P, then P x f64 mean, P x f64 std
//   P*K x f64 weights, feature-major (weights[f*K + k])
//   K x f64  intercepts
//   char[4]  end marker "DMRM"
//
// The loader decodes into a temporary and validates before returning, so a
// failed load never yields a partial model.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "motionrocket/error.hpp"
#include "motionrocket/ridge.hpp"

namespace motionrocket {

inline constexpr char kModelMagic[4] = {'M', 'R', 'M', 'D'};
inline constexpr char kModelEnd[4] = {'D', 'M', 'R', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    bytes_.insert(bytes_.end(), raw, raw + sizeof(T));
  }
  void put_raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }

  void get_raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }

  // Guards count fields against absurd allocations in corrupt files.
  std::size_t count(std::uint64_t n, std::size_t element_size) const {
    if (n > (bytes_.size() - pos_) / std::max<std::size_t>(element_size, 1))
      throw ModelFormatError("model file truncated or corrupt (count " + std::to_string(n) + " exceeds remaining bytes)");
    return static_cast<std::size_t>(n);
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ModelFormatError("model file truncated");
  }

  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> encode_model(const RidgeModel& m) {
  m.validate();
  m.rocket.validate();
  detail::ByteWriter w;
  w.put_raw(kModelMagic, 4);
  w.put<std::uint16_t>(kModelVersion);

  const auto& r = m.rocket;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.channels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.length));
  w.put<std::uint64_t>(r.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.dilations.size()));
  for (std::size_t i = 0; i < r.dilations.size(); ++i) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.dilations[i]));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.features_per_dilation[i]));
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.num_groups()));
  for (std::size_t g = 0; g < r.num_groups(); ++g) {
    w.put<std::uint8_t>(r.paddings[g]);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.channel_combos[g].size()));
    for (int c : r.channel_combos[g]) w.put<std::uint32_t>(static_cast<std::uint32_t>(c));
  }
  w.put<std::uint64_t>(r.biases.size());
  for (double b : r.biases) w.put<double>(b);

  const auto k = static_cast<Eigen::Index>(m.classes.size());
  const auto p = m.weights.rows();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(k));
  for (int c : m.classes) w.put<std::int32_t>(c);
  w.put<double>(m.alpha);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) w.put<double>(m.feature_means[i]);
  for (Eigen::Index i = 0; i < p; ++i) w.put<double>(m.feature_stds[i]);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index c = 0; c < k; ++c) w.put<double>(m.weights(i, c));
  for (Eigen::Index c = 0; c < k; ++c) w.put<double>(m.intercepts[c]);
  w.put_raw(kModelEnd, 4);
  return w.bytes();
}

inline RidgeModel decode_model(std::vector<unsigned char> bytes) {
  detail::ByteReader r(std::move(bytes));
  char magic[4];
  r.get_raw(magic, 4);
  if (std::memcmp(magic, kModelMagic, 4) != 0) throw ModelFormatError("not a model file (bad magic, expected \"MRMD\")");
  const auto version = r.get<std::uint16_t>();
  if (version != kModelVersion)
    throw ModelFormatError("unsupported model version " + std::to_string(version) + " (expected version " +
                           std::to_string(kModelVersion) + ")");

  RidgeModel m;
  auto& rp = m.rocket;
  rp.channels = static_cast<int>(r.get<std::uint32_t>());
  rp.length = static_cast<int>(r.get<std::uint32_t>());
  rp.seed = r.get<std::uint64_t>();
  const auto d = r.count(r.get<std::uint32_t>(), 8);
  for (std::size_t i = 0; i < d; ++i) {
    rp.dilations.push_back(static_cast<int>(r.get<std::uint32_t>()));
    rp.features_per_dilation.push_back(static_cast<int>(r.get<std::uint32_t>()));
  }
  const auto g = r.count(r.get<std::uint32_t>(), 5);
  for (std::size_t i = 0; i < g; ++i) {
    rp.paddings.push_back(r.get<std::uint8_t>());
    const auto s = r.count(r.get<std::uint32_t>(), 4);
    std::vector<int> combo;
    for (std::size_t j = 0; j < s; ++j) combo.push_back(static_cast<int>(r.get<std::uint32_t>()));
    rp.channel_combos.push_back(std::move(combo));
  }
  const auto f = r.count(r.get<std::uint64_t>(), 8);
  rp.biases.resize(f);
  for (auto& b : rp.biases) b = r.get<double>();

  const auto k = r.count(r.get<std::uint32_t>(), 4);
  for (std::size_t i = 0; i < k; ++i) m.classes.push_back(r.get<std::int32_t>());
  m.alpha = r.get<double>();
  const auto p = static_cast<Eigen::Index>(r.count(r.get<std::uint64_t>(), 16));
  const auto kk = static_cast<Eigen::Index>(k);
  m.feature_means.resize(p);
  m.feature_stds.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) m.feature_means[i] = r.get<double>();
  for (Eigen::Index i = 0; i < p; ++i) m.feature_stds[i] = r.get<double>();
  r.count(static_cast<std::uint64_t>(p) * k, 8);
  m.weights.resize(p, kk);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index c = 0; c < kk; ++c) m.weights(i, c) = r.get<double>();
  m.intercepts.resize(kk);
  for (Eigen::Index c = 0; c < kk; ++c) m.intercepts[c] = r.get<double>();
  char end[4];
  r.get_raw(end, 4);
  if (std::memcmp(end, kModelEnd, 4) != 0 || !r.at_end()) throw ModelFormatError("model file has a corrupt trailer");

  try {
    rp.validate();
    m.validate();
  } catch (const ShapeError& e) {
    throw ModelFormatError(std::string("model file is inconsistent: ") + e.what());
  }
  return m;
}

inline void save_model(const RidgeModel& m, const std::string& path) {
  const auto bytes = encode_model(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline RidgeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_model(std::move(bytes));
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(path + ": " + e.what());
  }
}

}  // namespace motionrocket
