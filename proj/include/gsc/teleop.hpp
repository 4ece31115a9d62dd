#pragma once

// Live teleoperation session, independent of any transport. The WebSocket
// server owns one TeleopSession per connection and only ever calls handle()
// from network handlers and tick() from the session timer; the simulation is
// touched exclusively inside tick().

#include "gsc/io.hpp"
#include "gsc/simulation.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace gsc {

inline constexpr int kProtocolVersion = 1;
inline constexpr double kTickHz = 10.0;

enum class Direction { ClientToServer, ServerToClient };

/// Checks an envelope and its payload against the protocol schema. Returns
/// the error reason ("malformed", "unknown-type", "version-mismatch",
/// "out-of-range", ...) or an empty string when the message is valid.
std::string validate_message(const Json& msg, Direction direction);

/// Envelope helpers. `session_id` is omitted when empty.
Json make_message(const std::string& type, const std::string& session_id, Json payload);
Json make_error(const std::string& session_id, const std::string& reason, const std::string& detail);

/// Catalog listing shared by the scenario_list reply and GET /scenarios.
Json scenario_catalog_json();

class TeleopSession {
 public:
  explicit TeleopSession(std::string id);

  const std::string& id() const { return id_; }

  /// Network side. Validates `msg` and either answers it directly (hello,
  /// scenario_list), enqueues it for the next tick (start, operator_input,
  /// config_update, reset) with an acknowledgement, or returns an error. Never
  /// touches the simulation; safe to call from any thread.
  std::vector<Json> handle(const Json& msg);

  /// As handle(), for raw text frames; unparsable text yields an error reply.
  std::vector<Json> handle_text(const std::string& text);

  /// Loop side. Applies queued control messages in arrival order, then
  /// advances the simulation one step with the latest queued operator input.
  /// Returns the messages to broadcast: a state_snapshot per step and a
  /// run_ended once the run terminates.
  std::vector<Json> tick();

  bool started() const { return started_.load(); }
  bool ended() const { return ended_; }

 private:
  struct Pending {
    std::string type;
    Json payload;
    std::optional<ScenarioSpec> spec;  // start only, already resolved
  };

  void apply(const Pending& p, std::optional<Command>& input);
  void restart();
  Json snapshot(const TraceRecord& rec) const;

  std::string id_;
  std::mutex mailbox_mutex_;
  std::deque<Pending> mailbox_;
  std::atomic<bool> started_{false};

  // Loop-owned state.
  std::optional<Simulation> sim_;
  ScenarioSpec start_spec_;
  ControllerConfig start_controller_;
  std::uint64_t seed_ = 0;
  bool paused_ = false;
  bool ended_ = false;
};

}  // namespace gsc
