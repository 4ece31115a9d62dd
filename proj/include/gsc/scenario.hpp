#pragma once

// Declarative scenario specs and scripted operators. Every catalog entry is a
// frozen, versioned spec; user-authored JSON specs go through the same
// validator.

#include "gsc/channel.hpp"
#include "gsc/controllers.hpp"
#include "gsc/gp.hpp"
#include "gsc/joint.hpp"
#include "gsc/world.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gsc {

inline constexpr int kScenarioSchemaVersion = 1;

enum class InputRule { HeadToWaypoint, SilentAfter, StartleAt, MergeCueAt };

std::string to_string(InputRule rule);
InputRule parse_input_rule(const std::string& name);

struct ScriptWaypoint {
  int step = 0;  // when the operator intends to be here
  Vec2 position = Vec2::Zero();
};

struct OperatorScript {
  std::string intent_mode;
  std::vector<ScriptWaypoint> waypoints;
  InputRule rule = InputRule::HeadToWaypoint;
  int rule_step = 0;
  Vec2 startle_command = Vec2::Zero();
  int startle_duration = 1;
  double speed = kDefaultSpeedLimit;
  double reach_radius = 0.5;

  /// Time-aligned intended position at `step` (linear between waypoints).
  Vec2 intent_at(int step) const;
};

/// A named route through the scene. Projected onto the current robot position
/// each step to produce a ModeHypothesis (via points plus goal).
struct RouteHypothesis {
  std::string label;
  double prior_weight = 1.0;
  std::vector<Vec2> waypoints;  // the last one is where the route ends
};

/// How observations are turned into per-agent trajectory distributions.
struct ModelParams {
  int history_steps = 3;        // robot positions fed to the autonomy GP
  int history_stride = 1;       // in simulation steps
  double evidence_span = 1.0;   // seconds an operator command is extrapolated back
  double route_speed = 2.0;     // nominal progress along routes, m/s
  double via_interval = 0.5;    // seconds between route pseudo-observations
  double route_lookahead = 2.0;  // metres along the route at which an off-route robot rejoins it
  double goal_noise_scale = 1.0;
  int environment_history_steps = 3;
  bool route_feasibility = true;  // autonomy down-weights routes blocked by visible obstacles
  double feasibility_strength = 0.999;
  double feasibility_scale = 0.6;
  double sensing_range = 0.0;  // metres; 0 = unlimited
  // Noise inflation applied to the robot's own history when weighing autonomy
  // routes (not when fitting them): the autonomy keeps its route preference
  // instead of chasing whatever the blended command just did.
  double autonomy_evidence_scale = 200.0;

  bool operator==(const ModelParams&) const = default;
};

struct ScenarioSpec {
  std::string id;
  int version = 1;
  std::string description;
  WorldState world;
  OperatorScript operator_script;
  std::vector<RouteHypothesis> operator_hypotheses;
  std::vector<RouteHypothesis> autonomy_hypotheses;
  ChannelConfig channel;
  KernelParams operator_kernel;
  KernelParams autonomy_kernel;
  KernelParams environment_kernel;
  InteractionParams interaction;
  ModelParams model;
  BlendGains gains;
  double safeguard_margin = 0.5;
  double staleness_tau = 1.0;
  std::size_t n_samples = 500;
  int max_steps = 600;
  double dt = kDefaultDt;
  int horizon_steps = kDefaultHorizonSteps;
  double speed_limit = kDefaultSpeedLimit;

  TimeGrid grid() const { return TimeGrid{dt, horizon_steps}; }

  /// Throws "bad-scenario" with the first violated rule.
  void validate() const;

  /// Controller config for `kind` using this spec's per-scenario overrides.
  ControllerConfig controller(ControllerKind kind) const;
};

const std::vector<std::string>& catalog_ids();

/// Throws "unknown-scenario" listing the catalog.
ScenarioSpec build_scenario(const std::string& id);

std::optional<TimedInput> scripted_operator_input(const OperatorScript& script,
                                                  const WorldState& world, int step,
                                                  double speed_limit = kDefaultSpeedLimit);

/// Point reached after travelling `arc` metres along the polyline, clamped to
/// its endpoints.
Vec2 point_along(const std::vector<Vec2>& polyline, double arc);

/// Arc-length coordinate of the point on the polyline closest to `p`.
double project_onto(const std::vector<Vec2>& polyline, const Vec2& p);

ModeHypothesis project_route(const RouteHypothesis& route, const Vec2& position,
                             const ModelParams& model, double horizon_end);

}  // namespace gsc
