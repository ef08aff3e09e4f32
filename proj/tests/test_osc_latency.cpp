#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"

using namespace motionrocket;

TEST(Osc, GoldenBytes) {
  const std::vector<std::uint8_t> expected{0x2F, 0x6D, 0x6F, 0x74, 0x69, 0x6F, 0x6E, 0x00, 0x2C, 0x69,
                                           0x66, 0x00, 0x00, 0x00, 0x00, 0x03, 0x3F, 0x60, 0x00, 0x00};
  EXPECT_EQ(osc::encode_message("/motion", 3, 0.875f), expected);
  const std::vector<std::uint8_t> short_addr{0x2F, 0x6D, 0x00, 0x00, 0x2C, 0x69, 0x66, 0x00,
                                             0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
  EXPECT_EQ(osc::encode_message("/m", 0, 0.0f), short_addr);
}

TEST(Osc, AlwaysFourByteAligned) {
  std::string addr = "/";
  for (int len = 1; len < 20; ++len, addr += 'a') {
    const auto bytes = osc::encode_message(addr, -len, 0.5f);
    EXPECT_EQ(bytes.size() % 4, 0u);
    EXPECT_EQ(bytes[addr.size()], 0u) << "address must be NUL-terminated";
  }
}

TEST(Osc, RejectsBadAddresses) {
  EXPECT_THROW(osc::encode_message("motion", 1, 0.5f), std::invalid_argument);
  EXPECT_THROW(osc::encode_message("", 1, 0.5f), std::invalid_argument);
  EXPECT_THROW(osc::encode_message(std::string_view("/a\0b", 4), 1, 0.5f), std::invalid_argument);
}

TEST(Latency, NearestRank) {
  const std::vector<double> v{30, 10, 20};
  EXPECT_EQ(nearest_rank(v, 50), 20.0);
  EXPECT_EQ(nearest_rank(v, 95), 30.0);
  EXPECT_EQ(nearest_rank(v, 0), 10.0);
  EXPECT_EQ(nearest_rank(std::vector<double>{4.0}, 95), 4.0);
  std::vector<double> hundred;
  for (int i = 1; i <= 100; ++i) hundred.push_back(i);
  EXPECT_EQ(nearest_rank(hundred, 95), 95.0);
  EXPECT_THROW(nearest_rank({}, 50), std::invalid_argument);
}

TEST(Latency, MeasureFromLog) {
  mrtest::TempDir dir("lat");
  {
    std::ofstream out(dir.file("lat.ndjson"));
    for (double ms : {10.0, 20.0, 30.0})
      out << to_json(LatencyRecord{0.0, 1, ms, ms / 10.0, false, 0}).dump() << '\n';
  }
  const auto s = measure_latency(dir.file("lat.ndjson"));
  EXPECT_EQ(s.end_to_end_ms.p50, 20.0);
  EXPECT_EQ(s.end_to_end_ms.p95, 30.0);
  EXPECT_EQ(s.end_to_end_ms.max, 30.0);
  EXPECT_EQ(s.inference_ms.p50, 2.0);
  EXPECT_EQ(to_json(s)["events"], 3);

  std::ofstream(dir.file("empty.ndjson")).flush();
  try {
    measure_latency(dir.file("empty.ndjson"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "latency log is empty");
  }
}
