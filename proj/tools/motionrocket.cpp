// motionrocket: generate data, train, evaluate, serve, replay, benchmark, reproduce.
//
// Exit codes: 0 ok, 1 usage, 2 bad data or model file, 3 runtime failure.

#include <csignal>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "motionrocket.hpp"
#include "motionrocket/log.hpp"

namespace mr = motionrocket;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what, int code)
      : std::runtime_error("stage '" + stage + "' failed: " + what), exit_code(code) {}
  int exit_code;
};

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(colon + 2);
    }
  return "unknown";
}

json machine_info() {
  return {{"cpu", cpu_model()},
          {"hardware_threads", std::thread::hardware_concurrency()},
          {"compiler", __VERSION__},
#ifdef NDEBUG
          {"assertions", false}
#else
          {"assertions", true}
#endif
  };
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// --- option groups -------------------------------------------------------------

struct TrainFlags {
  int features = 10000;
  std::uint64_t seed = 0;
  int copies = 1;
  double jitter_sigma = 0.03;
  int warp_knots = 4;
  double warp_sigma = 0.2;

  void add(CLI::App* app, bool with_seed = true) {
    app->add_option("--features", features, "Requested MiniRocket features (rounded down to a multiple of 84)")
        ->check(CLI::Range(84, 1000000));
    if (with_seed) app->add_option("--seed", seed, "Seed for augmentation and feature fitting");
    app->add_option("--augment.copies", copies, "Augmented copies per training window")->check(CLI::NonNegativeNumber);
    app->add_option("--augment.jitter_sigma", jitter_sigma, "Jitter std as a multiple of channel std")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--augment.warp_knots", warp_knots, "Interior knots of the time-warp speed curve")
        ->check(CLI::Range(2, 64));
    app->add_option("--augment.warp_sigma", warp_sigma, "Std of the time-warp knot speeds")->check(CLI::NonNegativeNumber);
  }

  mr::TrainConfig config() const {
    mr::TrainConfig cfg;
    cfg.num_features = features;
    cfg.seed = seed;
    cfg.augment.copies = copies;
    cfg.augment.jitter_sigma = jitter_sigma;
    cfg.augment.warp_knots = warp_knots;
    cfg.augment.warp_sigma = warp_sigma;
    return cfg;
  }
};

json train_config_json(const mr::TrainConfig& c) {
  return {{"features", c.num_features},
          {"seed", c.seed},
          {"augment", {{"copies", c.augment.copies}, {"jitter_sigma", c.augment.jitter_sigma},
                       {"warp_knots", c.augment.warp_knots}, {"warp_sigma", c.augment.warp_sigma}}}};
}

// --- subcommands -----------------------------------------------------------------

struct GenFlags {
  int per_class = 0;
  int total = 648;
  std::uint64_t seed = 7;
  double noise = 0.05;
  std::string out;
  std::string recording;
  double crossfade = 0.0;
};

int run_gen(const GenFlags& f) {
  mr::synth::SynthSpec spec;
  spec.seed = f.seed;
  spec.noise_std = f.noise;
  spec.samples_per_class = f.per_class > 0 ? std::vector<int>(mr::kNumClasses, f.per_class) : mr::synth::counts_for_total(f.total);
  const auto ds = mr::synth::generate(spec);
  mr::save_dataset(ds, f.out);
  spdlog::info("wrote {} windows to {}", ds.size(), f.out);
  if (!f.recording.empty()) {
    const auto rec = mr::synth::inject_transitions(ds, f.crossfade);
    mr::save_recording(rec.frames, f.recording);
    spdlog::info("wrote {} frames to {}", rec.frames.size(), f.recording);
  }
  return 0;
}

struct TrainCmd {
  std::string dataset;
  std::string out;
  std::string summary;
  TrainFlags flags;
};

int run_train(const TrainCmd& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto ds = mr::load_dataset(c.dataset);
  const auto cfg = c.flags.config();
  mr::RidgeDiagnostics diag;
  const auto model = mr::train_model(ds, cfg, &diag);
  mr::save_model(model, c.out);
  json summary = {{"dataset", c.dataset},
                  {"model", c.out},
                  {"windows", ds.size()},
                  {"training_windows", ds.size() * static_cast<std::size_t>(1 + cfg.augment.copies)},
                  {"classes", model.classes},
                  {"num_features", model.num_features()},
                  {"dilations", model.rocket.dilations},
                  {"alpha", model.alpha},
                  {"alpha_grid", diag.alpha_grid},
                  {"loo_mse", diag.loo_mse},
                  {"solver", diag.dual ? "dual" : "primal"},
                  {"config", train_config_json(cfg)},
                  {"wall_time_s", seconds_since(start)}};
  write_json(summary, c.summary);
  spdlog::info("trained {} features, alpha {}, saved {}", model.num_features(), model.alpha, c.out);
  return 0;
}

struct EvalCmd {
  std::string dataset;
  int folds = 10;
  std::uint64_t seed = 42;
  std::string report;
  std::string plot;
  std::string csv;
  int threads = 0;
  TrainFlags flags;
};

mr::EvalReport evaluate(const mr::LabeledDataset& ds, const EvalCmd& c) {
  mr::CvOptions opts;
  opts.threads = c.threads;
  auto cfg = c.flags.config();
  cfg.seed = c.seed;
  return mr::cross_validate(ds, c.folds, c.seed, cfg, opts);
}

int run_eval(const EvalCmd& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto ds = mr::load_dataset(c.dataset);
  const auto report = evaluate(ds, c);
  mr::emit_report(report, c.report, "json");
  if (!c.plot.empty()) mr::emit_report(report, c.plot, "svg");
  if (!c.csv.empty()) mr::emit_report(report, c.csv, "csv");
  spdlog::info("{}-fold CV: accuracy {:.4f} +/- {:.4f}, macro-F1 {:.4f}, macro AUC {:.4f} ({:.1f} s)", c.folds,
               report.mean_accuracy, report.std_accuracy, report.macro_f1, report.macro_auc, seconds_since(start));
  return 0;
}

struct ServeCmd {
  std::string listen = "0.0.0.0:7400";
  std::string osc = "127.0.0.1:57120";
  std::string osc_address = "/motion";
  std::string model;
  double window = 2.0;
  double hop = 2.0;
  double floor = 0.0;
  double gap_tolerance = 250.0;
  std::string latency_log;
  bool lossless = false;
};

mr::InferenceServer* g_server = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(const ServeCmd& c) {
  mr::ServerConfig cfg;
  cfg.listen = c.listen;
  cfg.osc_target = c.osc;
  cfg.osc_address = c.osc_address;
  cfg.model_path = c.model;
  cfg.window_seconds = c.window;
  cfg.hop_seconds = c.hop;
  cfg.probability_floor = c.floor;
  cfg.latency_log = c.latency_log;
  cfg.lossless = c.lossless;
  cfg.assembler.gap_tolerance_ms = c.gap_tolerance;
  mr::InferenceServer server(cfg, mr::load_model(c.model));
  g_server = &server;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  server.run();
  g_server = nullptr;
  return 0;
}

struct ReplayCmd {
  std::string recording;
  std::string target = "127.0.0.1:7400";
  std::string speed = "1";
  std::string events;
};

double parse_speed(const std::string& s) {
  if (s == "inf" || s == "max") return std::numeric_limits<double>::infinity();
  const double v = std::stod(s);
  if (!(v > 0.0)) throw CLI::ValidationError("--speed", "must be positive or 'inf'");
  return v;
}

int run_replay(const ReplayCmd& c) {
  const auto frames = mr::load_recording(c.recording);
  mr::ReplayOptions opts;
  opts.target = c.target;
  opts.speed = parse_speed(c.speed);
  const auto result = mr::replay(frames, opts);
  std::ofstream file;
  if (!c.events.empty()) file.open(c.events);
  std::ostream& out = c.events.empty() ? std::cout : file;
  for (const auto& e : result.events) out << e.dump() << '\n';
  spdlog::info("sent {} frames in {:.2f} s, received {} events, max pacing error {:.3f} ms", result.frames_sent,
               result.send_seconds, result.events.size(), result.max_pacing_error_ms);
  return 0;
}

struct BenchCmd {
  std::string model;
  int iterations = 1000;
  std::string out;
  std::uint64_t seed = 1;
};

json bench_model(const mr::RidgeModel& model, int iterations, std::uint64_t seed) {
  mr::synth::SynthSpec spec;
  spec.seed = seed;
  spec.samples_per_class = std::vector<int>(mr::kNumClasses, 1);
  spec.window_seconds = static_cast<double>(model.rocket.length) / spec.layout.sample_rate_hz;
  const auto windows = mr::synth::generate(spec).windows;
  mr::Classifier clf(model);
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    const auto& w = windows[static_cast<std::size_t>(i) % windows.size()];
    const auto t0 = std::chrono::steady_clock::now();
    const auto pred = clf.classify(w);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    if (pred.probabilities.empty()) throw std::runtime_error("empty prediction");
  }
  const auto s = mr::summarize(ms);
  return {{"iterations", iterations},
          {"num_features", model.num_features()},
          {"window", {{"channels", model.rocket.channels}, {"length", model.rocket.length}}},
          {"transform_predict_ms", mr::to_json(s)},
          {"machine", machine_info()}};
}

int run_bench(const BenchCmd& c) {
  const auto model = mr::load_model(c.model);
  const auto report = bench_model(model, c.iterations, c.seed);
  write_json(report, c.out);
  spdlog::info("transform+predict p50 {:.3f} ms, p95 {:.3f} ms over {} iterations",
               report["transform_predict_ms"]["p50"].get<double>(), report["transform_predict_ms"]["p95"].get<double>(),
               c.iterations);
  return 0;
}

struct LatencyCmd {
  std::string log;
  std::string out;
};

int run_latency(const LatencyCmd& c) {
  write_json(mr::to_json(mr::measure_latency(c.log)), c.out);
  return 0;
}

// --- reproduce -----------------------------------------------------------------

struct ReproduceCmd {
  std::string out_dir = "reproduction";
  std::uint64_t data_seed = 7;
  std::uint64_t cv_seed = 42;
  int folds = 10;
  int threads = 0;
  double replay_speed = 4.0;
  int replay_per_class = 4;
  double crossfade = 0.5;
  int bench_iterations = 1000;
  TrainFlags flags;
};

template <typename F>
auto stage(const std::string& name, F&& fn) {
  spdlog::info("== {}", name);
  try {
    return fn();
  } catch (const mr::DataError& e) {
    throw StageError(name, e.what(), kExitData);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), kExitRuntime);
  }
}

std::string fmt_pct(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << 100.0 * v << "%";
  return s.str();
}

std::string fmt_ms(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v << " ms";
  return s.str();
}

int run_reproduce(const ReproduceCmd& c) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(c.out_dir);
  const auto path = [&](const std::string& name) { return (fs::path(c.out_dir) / name).string(); };

  const auto ds = stage("gen", [&] {
    mr::synth::SynthSpec spec;
    spec.seed = c.data_seed;
    auto d = mr::synth::generate(spec);
    mr::save_dataset(d, path("synth.ndjson"));
    return d;
  });

  const auto report = stage("eval", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    mr::CvOptions opts;
    opts.threads = c.threads;
    auto r = mr::cross_validate(ds, c.folds, c.cv_seed, c.flags.config(), opts);
    mr::emit_report(r, path("eval.json"), "json");
    mr::emit_report(r, path("eval.svg"), "svg");
    mr::emit_report(r, path("confusion.csv"), "csv");
    spdlog::info("cross-validation took {:.1f} s", seconds_since(t0));
    return r;
  });

  const auto model = stage("train", [&] {
    auto m = mr::train_model(ds, c.flags.config());
    mr::save_model(m, path("model.mrmd"));
    return m;
  });

  struct LiveResult {
    mr::LatencySummary latency;
    std::size_t events = 0;
    std::size_t frames = 0;
    std::uint64_t dropped = 0;
    bool offline_match = false;
  };
  const auto live = stage("replay", [&] {
    mr::synth::SynthSpec spec;
    spec.seed = c.data_seed + 1000;
    spec.samples_per_class = std::vector<int>(mr::kNumClasses, c.replay_per_class);
    const auto rec = mr::synth::inject_transitions(mr::synth::generate(spec), c.crossfade);
    mr::save_recording(rec.frames, path("recording.ndjson"));

    mr::ServerConfig cfg;
    cfg.listen = "127.0.0.1:0";
    cfg.osc_target = "127.0.0.1:9";
    cfg.latency_log = path("latency.ndjson");
    mr::InferenceServer server(cfg, model);
    std::jthread runner([&] { server.run(); });
    mr::ReplayOptions opts;
    opts.target = "127.0.0.1:" + std::to_string(server.port());
    opts.speed = c.replay_speed;
    const auto result = mr::replay(rec.frames, opts);
    server.stop();
    runner.join();

    LiveResult out;
    out.events = result.events.size();
    out.frames = result.frames_sent;
    out.dropped = server.stats().dropped_windows;
    const auto rows = mr::assemble_stream(rec.frames);
    const auto windows = mr::segment(rows, 24, model.rocket.length, model.rocket.length);
    mr::Classifier clf(model);
    out.offline_match = windows.size() == result.events.size();
    for (std::size_t i = 0; out.offline_match && i < windows.size(); ++i)
      out.offline_match = clf.classify(windows[i]).label == result.events[i]["label"].get<int>();
    return out;
  });

  const auto latency = stage("measure_latency", [&] { return mr::measure_latency(path("latency.ndjson")); });

  const auto bench = stage("bench", [&] {
    auto b = bench_model(model, c.bench_iterations, c.data_seed);
    write_json(b, path("bench.json"));
    return b;
  });

  stage("report", [&] {
    std::ofstream md(path("REPORT.md"));
    md << "# Reproduction report\n\n";
    md << "Synthetic dataset: " << ds.size() << " windows, " << mr::kNumClasses << " classes, seed " << c.data_seed
       << ". Features requested: " << c.flags.features << " (" << model.num_features() << " used). Augmented copies per "
       << "training window: " << c.flags.copies << ".\n\n";
    md << "## Cross-validation (" << c.folds << "-fold stratified, seed " << c.cv_seed << ")\n\n";
    md << "| metric | value |\n|---|---|\n";
    md << "| mean accuracy | " << fmt_pct(report.mean_accuracy) << " |\n";
    md << "| accuracy std | " << fmt_pct(report.std_accuracy) << " |\n";
    md << "| macro F1 | " << fmt_pct(report.macro_f1) << " |\n";
    md << "| macro AUC | " << report.macro_auc << " |\n\n";
    md << "Per-class one-vs-rest AUC:\n\n| class | AUC |\n|---|---|\n";
    for (std::size_t k = 0; k < report.class_auc.size(); ++k)
      md << "| " << k << " | " << (report.class_auc[k] ? std::to_string(*report.class_auc[k]) : "n/a") << " |\n";
    md << "\nConfusion matrix (rows = true class, summed over folds):\n\n```\n" << mr::report_csv(report) << "```\n\n";
    md << "## Live loop (loopback replay at " << c.replay_speed << "x)\n\n";
    md << "| metric | value |\n|---|---|\n";
    md << "| frames sent | " << live.frames << " |\n";
    md << "| trigger events | " << live.events << " |\n";
    md << "| dropped windows | " << live.dropped << " |\n";
    md << "| labels identical to offline pipeline | " << (live.offline_match ? "yes" : "no") << " |\n";
    md << "| end-to-end p50 | " << fmt_ms(latency.end_to_end_ms.p50) << " |\n";
    md << "| end-to-end p95 | " << fmt_ms(latency.end_to_end_ms.p95) << " |\n";
    md << "| end-to-end max | " << fmt_ms(latency.end_to_end_ms.max) << " |\n";
    md << "| inference p50 | " << fmt_ms(latency.inference_ms.p50) << " |\n";
    md << "| inference p95 | " << fmt_ms(latency.inference_ms.p95) << " |\n\n";
    md << "## Inference benchmark (" << c.bench_iterations << " iterations)\n\n";
    md << "| metric | value |\n|---|---|\n";
    md << "| transform+predict p50 | " << fmt_ms(bench["transform_predict_ms"]["p50"].get<double>()) << " |\n";
    md << "| transform+predict p95 | " << fmt_ms(bench["transform_predict_ms"]["p95"].get<double>()) << " |\n";
    md << "| CPU | " << bench["machine"]["cpu"].get<std::string>() << " |\n\n";
    md << "Total wall time: " << seconds_since(start) << " s\n";
    return 0;
  });
  spdlog::info("reproduction artifacts in {}", c.out_dir);
  return 0;
}

// --- config file ---------------------------------------------------------------

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      flatten(*it, key, out);
    else
      out.emplace_back(key, *it);
  }
}

std::string scalar_to_arg(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

/// Expands `--config file.json` into flags; flags already on the command line win.
std::vector<std::string> merge_config(std::vector<std::string> args, const CLI::App& app) {
  std::string config_path;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (config_path.empty()) return kept;
  std::ifstream in(config_path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "top level must be an object");
  std::vector<std::pair<std::string, json>> items;
  flatten(cfg, "", items);
  const CLI::App* sub = nullptr;
  for (const auto& a : kept)
    if (a.empty() || a[0] != '-') {
      sub = app.get_subcommand_no_throw(a);
      break;
    }
  if (!sub) throw CLI::ValidationError("--config", "a subcommand is required");
  for (const auto& [key, value] : items)
    if (!sub->get_option_no_throw("--" + key))
      throw CLI::ValidationError("--config", "unknown key \"" + key + "\" for " + sub->get_name());
  for (const auto& [key, value] : items) {
    const std::string flag = "--" + key;
    bool present = false;
    for (const auto& a : kept) present = present || a == flag || a.rfind(flag + "=", 0) == 0;
    if (present) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) kept.push_back(flag);
    } else if (value.is_array()) {
      kept.push_back(flag);
      for (const auto& v : value) kept.push_back(scalar_to_arg(v));
    } else {
      kept.push_back(flag);
      kept.push_back(scalar_to_arg(value));
    }
  }
  return kept;
}

}  // namespace

int main(int argc, char** argv) {
  mr::init_logging();

  CLI::App app{"MiniRocket motion recognition: training, evaluation and live inference"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_help_all_flag("--help-all");
  app.add_option("--config", "JSON file of flag values; explicit flags take precedence");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate the synthetic seven-class dataset");
  auto* per_class = gen_cmd->add_option("--per-class", gen.per_class, "Windows per class")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--total", gen.total, "Total windows, remainder dealt to the lowest classes")
      ->check(CLI::Range(7, 10000000))
      ->excludes(per_class);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--noise", gen.noise, "Additive noise std")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--out", gen.out, "Output dataset (NDJSON)")->required();
  gen_cmd->add_option("--recording", gen.recording, "Also write a raw frame recording of the windows back to back");
  gen_cmd->add_option("--crossfade", gen.crossfade, "Crossfade between recorded windows, seconds")
      ->check(CLI::NonNegativeNumber);

  TrainCmd train;
  auto* train_cmd = app.add_subcommand("train", "Train MiniRocket + ridge on a dataset");
  train_cmd->add_option("--dataset", train.dataset, "Dataset NDJSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Model file to write")->required();
  train_cmd->add_option("--summary", train.summary, "Training summary JSON (default stdout)");
  train.flags.add(train_cmd);

  EvalCmd eval;
  auto* eval_cmd = app.add_subcommand("eval", "Stratified k-fold cross-validation");
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset NDJSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--folds", eval.folds, "Number of folds")->check(CLI::Range(2, 1000000));
  eval_cmd->add_option("--seed", eval.seed, "Fold assignment seed");
  eval_cmd->add_option("--report", eval.report, "Report JSON")->required();
  eval_cmd->add_option("--plot", eval.plot, "SVG with confusion heatmap and ROC curves");
  eval_cmd->add_option("--csv", eval.csv, "Confusion matrix CSV");
  eval_cmd->add_option("--threads", eval.threads, "Folds evaluated in parallel (0 = all cores)");
  // --seed drives both the fold plan and the per-fold training seeds.
  eval.flags.add(eval_cmd, false);

  ServeCmd serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the live inference server");
  serve_cmd->add_option("--listen", serve.listen, "Ingest TCP address host:port");
  serve_cmd->add_option("--osc", serve.osc, "OSC UDP target host:port");
  serve_cmd->add_option("--osc-address", serve.osc_address, "OSC address pattern");
  serve_cmd->add_option("--model", serve.model, "Model file")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--window", serve.window, "Window length, seconds")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--hop", serve.hop, "Hop between windows, seconds")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--floor", serve.floor, "Minimum probability to emit a trigger")->check(CLI::Range(0.0, 1.0));
  serve_cmd->add_option("--gap-tolerance", serve.gap_tolerance, "Sensor silence before holding values, ms")
      ->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--latency-log", serve.latency_log, "NDJSON latency log");
  serve_cmd->add_flag("--lossless", serve.lossless, "Block ingest instead of dropping windows (offline replays)");

  ReplayCmd replay;
  auto* replay_cmd = app.add_subcommand("replay", "Stream a recording to a server");
  replay_cmd->add_option("--recording", replay.recording, "Frame recording NDJSON")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--target", replay.target, "Server host:port");
  replay_cmd->add_option("--speed", replay.speed, "Speed multiplier or 'inf'");
  replay_cmd->add_option("--events", replay.events, "Write received events here (default stdout)");

  BenchCmd bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time transform+predict on single windows");
  bench_cmd->add_option("--model", bench.model, "Model file")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--iterations", bench.iterations, "Timed iterations")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench.out, "Report JSON (default stdout)");
  bench_cmd->add_option("--seed", bench.seed, "Seed for the benchmark windows");

  LatencyCmd latency;
  auto* latency_cmd = app.add_subcommand("latency", "Summarize a server latency log");
  latency_cmd->add_option("--log", latency.log, "Latency log NDJSON")->required()->check(CLI::ExistingFile);
  latency_cmd->add_option("--out", latency.out, "Summary JSON (default stdout)");

  ReproduceCmd repro;
  auto* repro_cmd = app.add_subcommand("reproduce", "gen -> eval -> train -> replay -> latency -> bench, with a Markdown report");
  repro_cmd->add_option("--out-dir", repro.out_dir, "Directory for all artifacts");
  repro_cmd->add_option("--data-seed", repro.data_seed, "Synthetic data seed");
  repro_cmd->add_option("--cv-seed", repro.cv_seed, "Fold assignment seed");
  repro_cmd->add_option("--folds", repro.folds, "Number of folds")->check(CLI::Range(2, 1000));
  repro_cmd->add_option("--threads", repro.threads, "Folds evaluated in parallel (0 = all cores)");
  repro_cmd->add_option("--replay-speed", repro.replay_speed, "Replay speed multiplier")->check(CLI::PositiveNumber);
  repro_cmd->add_option("--replay-per-class", repro.replay_per_class, "Windows per class in the replayed recording")
      ->check(CLI::PositiveNumber);
  repro_cmd->add_option("--crossfade", repro.crossfade, "Crossfade between replayed windows, seconds");
  repro_cmd->add_option("--bench-iterations", repro.bench_iterations, "Benchmark iterations")->check(CLI::PositiveNumber);
  repro.flags.add(repro_cmd);

  std::vector<std::string> args;
  try {
    args = merge_config(std::vector<std::string>(argv + 1, argv + argc), app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (const auto* sub : app.get_subcommands())
    spdlog::info("resolved configuration:\n{}", sub->config_to_str(true, false));

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_eval(eval);
    if (*serve_cmd) return run_serve(serve);
    if (*replay_cmd) return run_replay(replay);
    if (*bench_cmd) return run_bench(bench);
    if (*latency_cmd) return run_latency(latency);
    if (*repro_cmd) return run_reproduce(repro);
  } catch (const CLI::ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const StageError& e) {
    spdlog::error("{}", e.what());
    return e.exit_code;
  } catch (const mr::DataError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const mr::ShapeError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
