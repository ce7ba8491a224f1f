#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mockshade/pipeline.hpp"
#include "mockshade/scene.hpp"

namespace mockshade {

/// The live editing session: one scene owner, a revision counter bumped on
/// every accepted edit, and renders cached by (revision, t).
class SessionState {
 public:
  struct Snapshot {
    std::shared_ptr<const MockScene> scene;
    std::int64_t revision = 0;
  };

  struct PatchOutcome {
    int status = 200;  // 200, 400 or 409
    std::int64_t revision = 0;
    nlohmann::json body;
  };

  SessionState(MockScene scene, std::filesystem::path base_dir);

  Snapshot snapshot() const;
  /// Applies a partial edit atomically. `expected` (If-Match or
  /// base_revision) must equal the current revision when given.
  PatchOutcome patch(const nlohmann::json& edit, std::optional<std::int64_t> expected);
  /// Render of the snapshot at t, computed at most once per (revision, t).
  std::shared_ptr<const Render> render(const Snapshot& snap, double t);

  /// Called with the new revision after every accepted edit.
  using Listener = std::function<void(std::int64_t)>;
  int subscribe(Listener listener);
  void unsubscribe(int id);

 private:
  mutable std::mutex mutex_;
  Snapshot current_;
  std::filesystem::path base_dir_;

  std::mutex cache_mutex_;
  std::map<std::pair<std::int64_t, double>, std::shared_ptr<const Render>> cache_;

  std::mutex listener_mutex_;
  std::map<int, Listener> listeners_;
  int next_listener_ = 0;
};

/// HTTP and WebSocket front end on one port:
///   GET /scene, PATCH /scene, POST /render?t=, GET /w?t=, WS /live.
class RenderServer {
 public:
  /// Port 0 picks a free port.
  RenderServer(SessionState& session, std::uint16_t port, std::string address = "127.0.0.1");
  ~RenderServer();
  RenderServer(const RenderServer&) = delete;
  RenderServer& operator=(const RenderServer&) = delete;

  std::uint16_t port() const;
  /// Serves on background threads until stop().
  void start();
  /// Serves on the calling thread until stop() is called elsewhere.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mockshade
