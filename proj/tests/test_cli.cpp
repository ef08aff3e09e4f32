#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "test_util.hpp"

using namespace motionrocket;
using nlohmann::json;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

RunResult run(const mrtest::TempDir& dir, const std::string& args) {
  const auto out = dir.file("stdout.txt");
  const auto err = dir.file("stderr.txt");
  const std::string cmd = "cd '" + dir.path().string() + "' && '" MOTIONROCKET_CLI "' " + args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new mrtest::TempDir("cli");
    ASSERT_EQ(run(*dir_, "gen --per-class 8 --seed 7 --out small.ndjson --recording small_rec.ndjson").code, 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static mrtest::TempDir* dir_;
};

mrtest::TempDir* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, GenWritesRequestedCounts) {
  const auto ds = load_dataset(dir_->file("small.ndjson"));
  EXPECT_EQ(ds.size(), 56u);
  const auto r = run(*dir_, "gen --total 648 --out full.ndjson");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_dataset(dir_->file("full.ndjson")), synth::generate(synth::SynthSpec{}));
}

TEST_F(Cli, TrainIsDeterministicAndSummarized) {
  const std::string args = "train --dataset small.ndjson --features 840 --augment.copies 1 --seed 3 ";
  auto a = run(*dir_, args + "--out a.mrmd --summary a.json");
  ASSERT_EQ(a.code, 0) << a.err;
  auto b = run(*dir_, args + "--out b.mrmd --summary b.json");
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(dir_->file("a.mrmd")), slurp(dir_->file("b.mrmd")));
  const auto summary = json::parse(slurp(dir_->file("a.json")));
  EXPECT_EQ(summary.at("num_features"), 840);
  EXPECT_TRUE(summary.contains("alpha"));
  EXPECT_TRUE(summary.contains("wall_time_s"));
  EXPECT_EQ(summary.at("training_windows"), 112);
  EXPECT_NE(a.err.find("resolved configuration"), std::string::npos);
  EXPECT_NO_THROW(load_model(dir_->file("a.mrmd")));
}

TEST_F(Cli, DegenerateLabelsExitWithDataCode) {
  LabeledDataset one;
  for (int i = 0; i < 4; ++i) one.add(mrtest::random_window(24, 96, static_cast<std::uint64_t>(i)), 2);
  save_dataset(one, dir_->file("one.ndjson"));
  const auto r = run(*dir_, "train --dataset one.ndjson --out x.mrmd --features 840");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("degenerate labels"), std::string::npos) << r.err;
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(*dir_, "").code, 1);
  EXPECT_EQ(run(*dir_, "train --dataset small.ndjson --out x.mrmd --bogus 1").code, 1);
  EXPECT_EQ(run(*dir_, "frobnicate").code, 1);
  EXPECT_EQ(run(*dir_, "--help").code, 0);
  {
    std::ofstream bad(dir_->file("bad.ndjson"));
    bad << "{\"label\": 9, \"window\": [[1]]}\n";
  }
  EXPECT_EQ(run(*dir_, "train --dataset bad.ndjson --out x.mrmd").code, 2);
  {
    std::ofstream bad(dir_->file("bad.mrmd"));
    bad << "MRMD";
  }
  EXPECT_EQ(run(*dir_, "bench --model bad.mrmd").code, 2);
  EXPECT_EQ(run(*dir_, "replay --recording small_rec.ndjson --target 127.0.0.1:1").code, 3);
}

TEST_F(Cli, ConfigFileMergesUnderFlags) {
  {
    std::ofstream cfg(dir_->file("cfg.json"));
    cfg << R"({"features": 168, "augment": {"copies": 0}})";
  }
  auto r = run(*dir_, "train --config cfg.json --dataset small.ndjson --out c.mrmd --summary c.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(dir_->file("c.json"))).at("num_features"), 168);
  EXPECT_EQ(json::parse(slurp(dir_->file("c.json"))).at("training_windows"), 56);
  r = run(*dir_, "train --config cfg.json --dataset small.ndjson --out c.mrmd --summary c.json --features 252");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(dir_->file("c.json"))).at("num_features"), 252);

  {
    std::ofstream cfg(dir_->file("unknown.json"));
    cfg << R"({"featurez": 168})";
  }
  r = run(*dir_, "train --config unknown.json --dataset small.ndjson --out c.mrmd");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("featurez"), std::string::npos) << r.err;
}

TEST_F(Cli, EvalWritesReportAndPlot) {
  const auto r = run(*dir_,
                     "eval --dataset small.ndjson --folds 4 --seed 42 --features 840 --augment.copies 0 "
                     "--report eval.json --plot eval.svg --csv eval.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = load_report(dir_->file("eval.json"));
  EXPECT_EQ(report.folds, 4);
  EXPECT_EQ(report.confusion.size(), 7u);
  EXPECT_NE(slurp(dir_->file("eval.svg")).find("<svg"), std::string::npos);
  ASSERT_EQ(run(*dir_,
                "eval --dataset small.ndjson --folds 4 --seed 42 --features 840 --augment.copies 0 --report eval2.json")
                .code,
            0);
  EXPECT_EQ(slurp(dir_->file("eval.json")), slurp(dir_->file("eval2.json")));
}

TEST_F(Cli, BenchSingleIteration) {
  ASSERT_EQ(run(*dir_, "train --dataset small.ndjson --features 840 --out bench.mrmd --summary s.json").code, 0);
  const auto r = run(*dir_, "bench --model bench.mrmd --iterations 1 --out bench.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(dir_->file("bench.json")));
  EXPECT_EQ(j.at("iterations"), 1);
  EXPECT_EQ(j.at("transform_predict_ms").at("count"), 1);
  for (const char* key : {"p50", "p95", "max", "mean"}) EXPECT_TRUE(j.at("transform_predict_ms").at(key).is_number());
  EXPECT_TRUE(j.at("machine").at("cpu").is_string());
  EXPECT_EQ(j.at("num_features"), 840);
}

TEST_F(Cli, ServeReplayLatencyRoundTrip) {
  ASSERT_EQ(run(*dir_, "train --dataset small.ndjson --features 840 --out live.mrmd --summary s.json").code, 0);
  const int port = [] {
    auto probe = net::listen_tcp({"127.0.0.1", 0});
    return net::local_port(probe);
  }();
  const std::string serve_cmd = "cd '" + dir_->path().string() + "' && exec '" MOTIONROCKET_CLI "' serve --listen 127.0.0.1:" +
                                std::to_string(port) + " --model live.mrmd --osc 127.0.0.1:9 --latency-log lat.ndjson --lossless";
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    ::execl("/bin/sh", "sh", "-c", serve_cmd.c_str(), static_cast<char*>(nullptr));
    std::_Exit(127);
  }
  const auto r = run(*dir_, "replay --recording small_rec.ndjson --speed inf --events ev.ndjson --target 127.0.0.1:" +
                                std::to_string(port));
  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0) << status;
  std::ifstream ev(dir_->file("ev.ndjson"));
  std::string line;
  int events = 0;
  while (std::getline(ev, line)) {
    const auto j = json::parse(line);
    EXPECT_EQ(j.at("probs").size(), 7u);
    ++events;
  }
  EXPECT_EQ(events, 56);
  const auto lat = run(*dir_, "latency --log lat.ndjson --out lat.json");
  ASSERT_EQ(lat.code, 0) << lat.err;
  EXPECT_EQ(json::parse(slurp(dir_->file("lat.json"))).at("events"), 56);
}

TEST_F(Cli, ReproduceWritesReportAndIsDeterministic) {
  const std::string args =
      "reproduce --features 840 --augment.copies 0 --folds 3 --replay-per-class 1 --replay-speed 16 "
      "--bench-iterations 20 --out-dir ";
  auto r = run(*dir_, args + "repro1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto md = slurp(dir_->file("repro1/REPORT.md"));
  for (const char* needle : {"mean accuracy", "accuracy std", "macro F1", "AUC", "end-to-end p95", "inference p95",
                             "labels identical to offline pipeline | yes"})
    EXPECT_NE(md.find(needle), std::string::npos) << needle;
  ASSERT_EQ(run(*dir_, args + "repro2").code, 0);
  EXPECT_EQ(slurp(dir_->file("repro1/eval.json")), slurp(dir_->file("repro2/eval.json")));
  EXPECT_EQ(slurp(dir_->file("repro1/model.mrmd")), slurp(dir_->file("repro2/model.mrmd")));
}
