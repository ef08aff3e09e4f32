#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"

using namespace motionrocket;

TEST(Dataset, EmptyFileLoadsEmpty) {
  mrtest::TempDir dir("ds");
  std::ofstream(dir.file("empty.ndjson")).flush();
  EXPECT_TRUE(load_dataset(dir.file("empty.ndjson")).empty());
}

TEST(Dataset, RoundTripIsBitExact) {
  mrtest::TempDir dir("ds");
  LabeledDataset ds;
  for (int i = 0; i < 7; ++i) {
    auto w = mrtest::random_window(24, 96, 100 + i, 1e3);
    w.at(0, 0) = 0.1;
    w.at(1, 1) = -1e-300;
    w.at(2, 2) = 5e-324;
    w.set_t_start_ms(i * 2000.0 + 0.125);
    ds.add(std::move(w), i);
  }
  save_dataset(ds, dir.file("d.ndjson"));
  const auto back = load_dataset(dir.file("d.ndjson"));
  back.validate();
  EXPECT_EQ(back.windows, ds.windows);
  EXPECT_EQ(back.labels, ds.labels);
}

TEST(Dataset, ClassNamesRoundTrip) {
  mrtest::TempDir dir("names");
  LabeledDataset ds;
  ds.class_names = {"idle", "a", "b", "c", "d", "e", "f"};
  for (int i = 0; i < 7; ++i) ds.add(mrtest::random_window(2, 8, static_cast<std::uint64_t>(i)), i);
  save_dataset(ds, dir.file("d.ndjson"));
  EXPECT_EQ(load_dataset(dir.file("d.ndjson")), ds);
  {
    std::ofstream out(dir.file("clash.ndjson"));
    out << R"({"label": 1, "class": "a", "window": [[1]]})" << '\n' << R"({"label": 1, "class": "z", "window": [[1]]})" << '\n';
  }
  try {
    load_dataset(dir.file("clash.ndjson"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(Dataset, RejectsOutOfRangeLabelWithLineNumber) {
  mrtest::TempDir dir("ds");
  LabeledDataset ds;
  ds.add(MotionWindow(2, 3), 1);
  save_dataset(ds, dir.file("d.ndjson"));
  {
    std::ofstream out(dir.file("d.ndjson"), std::ios::app);
    out << R"({"label": 7, "t_start_ms": 0, "window": [[0,0,0],[0,0,0]]})" << '\n';
  }
  try {
    load_dataset(dir.file("d.ndjson"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(Dataset, MalformedLineNamesLine) {
  mrtest::TempDir dir("ds");
  {
    std::ofstream out(dir.file("bad.ndjson"));
    out << R"({"label": 0, "window": [[1,2],[3,4]]})" << '\n' << "\n" << "{not json" << '\n';
  }
  try {
    load_dataset(dir.file("bad.ndjson"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Dataset, RaggedAndMixedShapesRejected) {
  mrtest::TempDir dir("ds");
  {
    std::ofstream out(dir.file("ragged.ndjson"));
    out << R"({"label": 0, "window": [[1,2],[3]]})" << '\n';
  }
  EXPECT_THROW(load_dataset(dir.file("ragged.ndjson")), DataError);
  {
    std::ofstream out(dir.file("mixed.ndjson"));
    out << R"({"label": 0, "window": [[1,2],[3,4]]})" << '\n' << R"({"label": 0, "window": [[1,2,3],[3,4,5]]})" << '\n';
  }
  EXPECT_THROW(load_dataset(dir.file("mixed.ndjson")), DataError);
}

TEST(Dataset, ValidateCatchesInvariantViolations) {
  LabeledDataset ds;
  ds.add(MotionWindow(2, 3), 0);
  ds.labels.push_back(1);
  EXPECT_THROW(ds.validate(), DataError);
  ds.labels.pop_back();
  ds.windows[0].at(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(ds.validate(), DataError);
}

TEST(Recording, FrameRoundTrip) {
  mrtest::TempDir dir("rec");
  std::vector<SensorFrame> frames;
  for (int i = 0; i < 10; ++i) {
    auto f = mrtest::frame(i % 4, i * 20.833333333333332, i * 0.1, static_cast<std::uint64_t>(i));
    f.gyro[2] = -i * 3.7;
    frames.push_back(f);
  }
  save_recording(frames, dir.file("r.ndjson"));
  EXPECT_EQ(load_recording(dir.file("r.ndjson")), frames);
}

TEST(Recording, ParseFrameErrors) {
  EXPECT_THROW(parse_frame("{"), DataError);
  EXPECT_THROW(parse_frame(R"({"seq":0,"t_ms":0,"sensor":0,"ax":1})"), DataError);
  EXPECT_THROW(parse_frame(R"({"seq":0,"t_ms":"x","sensor":0,"ax":1,"ay":1,"az":1,"gx":1,"gy":1,"gz":1})"), DataError);
  const auto f = parse_frame(R"({"seq":5,"t_ms":1.5,"sensor":3,"ax":1,"ay":2,"az":3,"gx":4,"gy":5,"gz":6})");
  EXPECT_EQ(f.seq, 5u);
  EXPECT_EQ(f.sensor_id, 3);
  EXPECT_EQ(f.axis(4), 5.0);
}
