#pragma once

// The experiment loop. A Simulation advances one control step at a time so
// the same code drives batch runs (scripted operator) and live teleoperation
// (operator commands from a mailbox).

#include "gsc/scene.hpp"

#include <cstdint>
#include <deque>
#include <optional>

namespace gsc {

class Simulation {
 public:
  /// Throws "bad-scenario" / "bad-controller" on invalid configuration.
  Simulation(ScenarioSpec spec, ControllerConfig controller, std::uint64_t seed);

  /// Advances one step using the spec's scripted operator.
  const TraceRecord& step();

  /// Advances one step with an externally supplied operator command (none =
  /// the operator sent nothing this step).
  const TraceRecord& step(const std::optional<Command>& operator_command);

  bool finished() const { return finished_; }
  const WorldState& world() const { return world_; }
  const Trace& trace() const { return trace_; }
  const ScenarioSpec& spec() const { return spec_; }
  const ControllerConfig& controller() const { return controller_; }
  std::uint64_t seed() const { return seed_; }

  /// Scene model used for the most recent non-terminal step, if any.
  const std::optional<SceneModel>& last_scene() const { return last_scene_; }

  /// Swaps channel parameters between steps. Inputs already in flight keep
  /// the fate they were dealt when sent.
  void set_channel(const ChannelConfig& cfg);
  void set_controller(const ControllerConfig& cfg);
  const ChannelConfig& channel() const { return channel_; }

 private:
  const TraceRecord& advance(const std::optional<TimedInput>& input);
  bool terminal_now() const;

  ScenarioSpec spec_;
  ControllerConfig controller_;
  std::uint64_t seed_;
  ChannelConfig channel_;
  WorldState world_;
  ObservationLog log_;
  std::deque<Delivery> in_flight_;
  Trace trace_;
  std::optional<SceneModel> last_scene_;
  bool finished_ = false;
};

struct RunResult {
  Trace trace;
  Metrics metrics;
};

/// Runs to termination (goal, collision or max_steps) and scores the trace.
RunResult run_scenario(const ScenarioSpec& spec, const ControllerConfig& controller,
                       std::uint64_t seed);

Metrics compute_metrics(const Trace& trace, const ScenarioSpec& spec);

/// Most frequent non-empty operator/autonomy label over non-terminal records
/// (ties → first seen).
std::string dominant_operator_mode(const Trace& trace);
std::string dominant_autonomy_mode(const Trace& trace);

}  // namespace gsc
