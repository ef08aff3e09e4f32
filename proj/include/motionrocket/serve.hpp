#pragma once

// Live inference service and its replay client.
//
// One TCP connection carries newline-delimited sensor frames in and trigger
// events out. Inside the server three stages run concurrently:
//
//   reader      socket -> StreamAssembler -> WindowSlicer -> window queue
//   classifier  window queue -> MiniRocket + ridge -> event queue
//   emitter     event queue -> OSC datagram, NDJSON event, latency log
//
// The window queue holds at most `window_queue_capacity` windows. When the
// classifier falls behind, the oldest pending window is discarded and counted,
// so the reader never waits on inference.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "motionrocket/dataset.hpp"
#include "motionrocket/latency.hpp"
#include "motionrocket/net.hpp"
#include "motionrocket/osc.hpp"
#include "motionrocket/pipeline.hpp"
#include "motionrocket/signal.hpp"

namespace motionrocket {

using SteadyClock = std::chrono::steady_clock;

struct ServerConfig {
  std::string listen = "0.0.0.0:7400";
  std::string osc_target = "127.0.0.1:57120";
  std::string osc_address = "/motion";
  std::string model_path;
  double window_seconds = 2.0;
  double hop_seconds = 2.0;
  double probability_floor = 0.0;
  std::string latency_log;
  AssemblerConfig assembler{};
  std::size_t window_queue_capacity = 8;
  // Block the reader instead of dropping windows. For offline throughput
  // replays only; a live performance wants drop-oldest.
  bool lossless = false;

  void validate() const {
    if (!(window_seconds > 0.0)) throw std::invalid_argument("window_seconds must be positive");
    if (!(hop_seconds > 0.0) || hop_seconds > 4.0 * window_seconds)
      throw std::invalid_argument("hop_seconds must be in (0, 4 * window_seconds]");
    if (!(probability_floor >= 0.0 && probability_floor <= 1.0))
      throw std::invalid_argument("probability_floor must be within [0, 1]");
    if (window_queue_capacity < 1) throw std::invalid_argument("window queue capacity must be >= 1");
  }
};

struct TriggerEvent {
  double t_window_end_ms = 0.0;
  int label = 0;
  double probability = 0.0;
  std::vector<double> probs;  // kNumClasses entries, indexed by label
  double latency_ms = 0.0;
  double infer_ms = 0.0;
  bool stale = false;
};

/// Server -> client event line.
inline nlohmann::json event_json(const TriggerEvent& e) {
  return {{"t_ms", e.t_window_end_ms}, {"label", e.label}, {"probs", e.probs}, {"latency_ms", e.latency_ms},
          {"stale", e.stale}};
}

struct ServerStats {
  std::uint64_t connections = 0;
  std::uint64_t frames = 0;
  std::uint64_t malformed_lines = 0;
  std::uint64_t rejected_frames = 0;
  std::uint64_t windows = 0;
  std::uint64_t dropped_windows = 0;
  std::uint64_t events = 0;
  std::uint64_t suppressed = 0;
};

/// Fixed-capacity FIFO. Full pushes either evict the oldest item or block.
template <typename T>
class BoundedQueue {
 public:
  BoundedQueue(std::size_t capacity, bool drop_oldest) : capacity_(capacity), drop_oldest_(drop_oldest) {}

  /// Returns true when an older item was evicted to make room.
  bool push(T item) {
    std::unique_lock lock(mu_);
    bool dropped = false;
    if (items_.size() >= capacity_) {
      if (drop_oldest_) {
        items_.pop_front();
        dropped = true;
      } else {
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
        if (closed_) return false;
      }
    }
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return dropped;
  }

  /// Blocks until an item is available; nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  std::size_t capacity_;
  bool drop_oldest_;
  bool closed_ = false;
};

class InferenceServer {
 public:
  /// Validates the model against the configured window shape and binds the
  /// listener; both failures surface here rather than mid-stream.
  InferenceServer(ServerConfig cfg, RidgeModel model)
      : cfg_(std::move(cfg)), model_(std::move(model)), udp_(net::parse_endpoint(cfg_.osc_target)) {
    cfg_.validate();
    cfg_.assembler.layout.validate();
    model_.validate();
    model_.rocket.validate();
    const auto& layout = cfg_.assembler.layout;
    window_len_ = layout.samples_for(cfg_.window_seconds);
    hop_ = layout.samples_for(cfg_.hop_seconds);
    if (hop_ < 1) throw std::invalid_argument("hop shorter than one sample");
    if (model_.rocket.channels != layout.channels() || model_.rocket.length != window_len_)
      throw ShapeError("model expects " + std::to_string(model_.rocket.channels) + "x" + std::to_string(model_.rocket.length) +
                       " windows but the server produces " + std::to_string(layout.channels()) + "x" +
                       std::to_string(window_len_));
    (void)osc::encode_message(cfg_.osc_address, 0, 0.0f);
    listener_ = net::listen_tcp(net::parse_endpoint(cfg_.listen));
    port_ = net::local_port(listener_);
    if (!cfg_.latency_log.empty()) {
      log_.open(cfg_.latency_log, std::ios::out | std::ios::trunc);
      if (!log_) throw std::runtime_error("cannot open latency log " + cfg_.latency_log);
    }
  }

  int port() const { return port_; }
  const ServerConfig& config() const { return cfg_; }

  /// Accepts and serves connections one at a time until stop().
  void run() {
    spdlog::info("serving on port {} (window {} samples, hop {} samples), OSC -> {}", port_, window_len_, hop_,
                 cfg_.osc_target);
    while (!stop_.load()) {
      if (!net::wait_readable(listener_, 100)) continue;
      net::Fd conn(::accept4(listener_.get(), nullptr, nullptr, SOCK_CLOEXEC));
      if (!conn.valid()) continue;
      {
        std::lock_guard lock(stats_mu_);
        ++stats_.connections;
      }
      handle_connection(std::move(conn));
    }
    spdlog::info("server stopped");
  }

  /// Safe to call from a signal handler or any thread.
  void stop() noexcept { stop_.store(true); }

  ServerStats stats() const {
    std::lock_guard lock(stats_mu_);
    return stats_;
  }

  std::vector<LatencyRecord> latency_records() const {
    std::lock_guard lock(stats_mu_);
    return records_;
  }

 private:
  struct PendingWindow {
    SlicedWindow window;
    SteadyClock::time_point receipt;
  };

  struct PendingEvent {
    TriggerEvent event;
    SteadyClock::time_point receipt;
    std::uint64_t dropped;
  };

  void handle_connection(net::Fd conn) {
    net::set_nodelay(conn);
    const auto& layout = cfg_.assembler.layout;
    StreamAssembler assembler(cfg_.assembler);
    WindowSlicer slicer(layout.channels(), window_len_, hop_);
    BoundedQueue<PendingWindow> windows(cfg_.window_queue_capacity, !cfg_.lossless);
    BoundedQueue<PendingEvent> events(64, !cfg_.lossless);
    std::atomic<std::uint64_t> dropped{0};
    spdlog::info("ingest connection opened");

    std::jthread classifier([&] {
      Classifier clf(model_);
      while (auto w = windows.pop()) {
        const auto pred = clf.classify(w->window.window);
        TriggerEvent ev;
        ev.t_window_end_ms = w->window.t_end_ms;
        ev.label = pred.label;
        ev.probability = pred.max_probability();
        ev.probs.assign(kNumClasses, 0.0);
        for (std::size_t c = 0; c < model_.classes.size(); ++c) {
          const int lab = model_.classes[c];
          if (lab >= 0 && lab < kNumClasses) ev.probs[static_cast<std::size_t>(lab)] = pred.probabilities[c];
        }
        ev.infer_ms = pred.infer_micros / 1000.0;
        ev.stale = w->window.stale;
        events.push({std::move(ev), w->receipt, dropped.load()});
      }
      events.close();
    });

    std::jthread emitter([&] {
      bool client_open = true;
      while (auto pe = events.pop()) emit(*pe, conn, client_open);
    });

    std::vector<StreamRow> rows;
    auto feed_rows = [&](SteadyClock::time_point receipt) {
      for (const auto& row : rows) {
        if (auto w = slicer.push(row)) {
          {
            std::lock_guard lock(stats_mu_);
            ++stats_.windows;
          }
          if (windows.push({std::move(*w), receipt})) {
            ++dropped;
            std::lock_guard lock(stats_mu_);
            ++stats_.dropped_windows;
          }
        }
      }
      rows.clear();
    };

    std::string buffer;
    char chunk[16384];
    bool eof = false;
    while (!stop_.load()) {
      if (!net::wait_readable(conn, 100)) continue;
      const auto n = ::recv(conn.get(), chunk, sizeof chunk, 0);
      if (n == 0) {
        eof = true;
        break;
      }
      if (n < 0) {
        if (errno == EINTR) continue;
        spdlog::warn("ingest read failed: {}", std::strerror(errno));
        break;
      }
      const auto receipt = SteadyClock::now();
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
        const std::string_view line(buffer.data() + start, nl - start);
        start = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        ingest_line(line, assembler, rows);
      }
      buffer.erase(0, start);
      feed_rows(receipt);
    }
    if (eof) {
      // A final unterminated line still counts as a frame.
      if (!buffer.empty()) ingest_line(buffer, assembler, rows);
      assembler.flush(rows);
      feed_rows(SteadyClock::now());
    }
    windows.close();
    classifier.join();
    emitter.join();
    ::shutdown(conn.get(), SHUT_RDWR);
    const auto s = stats();
    spdlog::info("ingest connection closed: {} frames, {} malformed, {} rejected, {} windows, {} dropped, {} events",
                 s.frames, s.malformed_lines, s.rejected_frames, s.windows, s.dropped_windows, s.events);
  }

  void ingest_line(std::string_view line, StreamAssembler& assembler, std::vector<StreamRow>& rows) {
    SensorFrame f;
    try {
      f = parse_frame(line);
    } catch (const DataError& e) {
      spdlog::debug("skipping malformed ingest line: {}", e.what());
      std::lock_guard lock(stats_mu_);
      ++stats_.malformed_lines;
      return;
    }
    const bool accepted = assembler.push(f, rows);
    std::lock_guard lock(stats_mu_);
    ++stats_.frames;
    if (!accepted) ++stats_.rejected_frames;
  }

  void emit(PendingEvent& pe, const net::Fd& conn, bool& client_open) {
    auto& ev = pe.event;
    if (ev.probability < cfg_.probability_floor) {
      std::lock_guard lock(stats_mu_);
      ++stats_.suppressed;
      return;
    }
    const auto datagram = osc::encode_message(cfg_.osc_address, ev.label, static_cast<float>(ev.probability));
    udp_.send(datagram);
    ev.latency_ms = std::chrono::duration<double, std::milli>(SteadyClock::now() - pe.receipt).count();
    if (client_open) {
      try {
        net::send_all(conn, event_json(ev).dump() + "\n");
      } catch (const std::system_error& e) {
        spdlog::warn("event write failed, client gone: {}", e.what());
        client_open = false;
      }
    }
    LatencyRecord rec{ev.t_window_end_ms, ev.label, ev.latency_ms, ev.infer_ms, ev.stale, pe.dropped};
    if (log_.is_open()) log_ << to_json(rec).dump() << '\n' << std::flush;
    std::lock_guard lock(stats_mu_);
    ++stats_.events;
    records_.push_back(rec);
  }

  ServerConfig cfg_;
  RidgeModel model_;
  net::UdpSender udp_;
  net::Fd listener_;
  int port_ = 0;
  int window_len_ = 0;
  int hop_ = 0;
  std::atomic<bool> stop_{false};
  std::ofstream log_;
  mutable std::mutex stats_mu_;
  ServerStats stats_{};
  std::vector<LatencyRecord> records_;
};

// --- replay client --------------------------------------------------------------

struct ReplayOptions {
  std::string target = "127.0.0.1:7400";
  // Playback speed multiplier; infinity sends as fast as the socket allows.
  double speed = 1.0;
  int connect_attempts = 3;
  std::chrono::milliseconds retry_delay{250};
  // Give up waiting for trailing events after this much silence.
  std::chrono::milliseconds drain_timeout{10000};
};

struct ReplayResult {
  std::size_t frames_sent = 0;
  std::vector<nlohmann::json> events;
  double send_seconds = 0.0;  // first frame to last frame written
  double wall_seconds = 0.0;
  double max_pacing_error_ms = 0.0;
};

/// Streams frames with their original spacing divided by `speed`, then
/// half-closes and collects every event the server sends back.
inline ReplayResult replay(std::span<const SensorFrame> frames, const ReplayOptions& opts) {
  if (!(opts.speed > 0.0)) throw std::invalid_argument("replay speed must be positive");
  ReplayResult result;
  if (frames.empty()) return result;

  const auto endpoint = net::parse_endpoint(opts.target);
  net::Fd conn;
  for (int attempt = 1;; ++attempt) {
    try {
      conn = net::connect_tcp(endpoint);
      break;
    } catch (const std::system_error& e) {
      if (attempt >= opts.connect_attempts)
        throw std::runtime_error("replay: " + std::string(e.what()) + " (gave up after " + std::to_string(attempt) +
                                 " attempts)");
      spdlog::warn("replay: {} (attempt {}/{})", e.what(), attempt, opts.connect_attempts);
      std::this_thread::sleep_for(opts.retry_delay);
    }
  }
  net::set_nodelay(conn);

  std::jthread receiver([&] {
    std::string buffer;
    char chunk[8192];
    auto last_activity = SteadyClock::now();
    for (;;) {
      if (!net::wait_readable(conn, 100)) {
        if (SteadyClock::now() - last_activity > opts.drain_timeout) break;
        continue;
      }
      const auto n = ::recv(conn.get(), chunk, sizeof chunk, 0);
      if (n <= 0) {
        if (n < 0 && errno == EINTR) continue;
        break;
      }
      last_activity = SteadyClock::now();
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
        result.events.push_back(nlohmann::json::parse(buffer.begin() + static_cast<std::ptrdiff_t>(start),
                                                      buffer.begin() + static_cast<std::ptrdiff_t>(nl)));
        start = nl + 1;
      }
      buffer.erase(0, start);
    }
  });

  const bool paced = std::isfinite(opts.speed);
  const auto begin = SteadyClock::now();
  const double t_first = frames.front().t_ms;
  std::string batch;
  for (std::size_t i = 0; i < frames.size();) {
    const double t = frames[i].t_ms;
    batch.clear();
    for (; i < frames.size() && frames[i].t_ms == t; ++i) {
      batch += frame_to_json(frames[i]).dump();
      batch += '\n';
      ++result.frames_sent;
    }
    if (paced) {
      const auto due = begin + std::chrono::duration_cast<SteadyClock::duration>(
                                   std::chrono::duration<double, std::milli>((t - t_first) / opts.speed));
      // Coarse sleep, then yield-spin the last stretch to absorb scheduler wakeup jitter.
      std::this_thread::sleep_until(due - std::chrono::milliseconds(2));
      while (SteadyClock::now() < due) std::this_thread::yield();
      const double late = std::chrono::duration<double, std::milli>(SteadyClock::now() - due).count();
      result.max_pacing_error_ms = std::max(result.max_pacing_error_ms, std::abs(late));
    }
    net::send_all(conn, batch);
  }
  result.send_seconds = std::chrono::duration<double>(SteadyClock::now() - begin).count();
  ::shutdown(conn.get(), SHUT_WR);
  receiver.join();
  result.wall_seconds = std::chrono::duration<double>(SteadyClock::now() - begin).count();
  return result;
}

}  // namespace motionrocket
