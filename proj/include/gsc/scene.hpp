#pragma once

// Turns what the robot has observed so far into the per-agent trajectory
// distributions of the joint model. Every controller reads from the same
// SceneModel, so CSC and GSC see identical predictions.

#include "gsc/controllers.hpp"
#include "gsc/scenario.hpp"

#include <map>
#include <optional>
#include <vector>

namespace gsc {

/// Everything observed up to and including the current step.
struct ObservationLog {
  std::vector<Vec2> robot;  // index == step
  std::map<int, std::vector<std::pair<int, Vec2>>> obstacles;  // id -> (step, position), visible only
  std::optional<Delivery> latest;  // most recent delivered operator input

  void record(const WorldState& world);
};

struct SceneModel {
  JointModel joint;
  std::vector<ObstaclePrediction> predictions;  // constant-velocity, for the safeguard
  bool operator_degenerate = false;
  bool autonomy_degenerate = false;
};

/// Obstacles the robot can currently perceive: visible and, when the spec
/// sets a sensing range, within it.
std::vector<const Obstacle*> perceived_obstacles(const ScenarioSpec& spec, const WorldState& world);

SceneModel build_scene_model(const ScenarioSpec& spec, const WorldState& world,
                             const ObservationLog& log);

/// Route hypotheses actually used for an agent: the spec's list, or a single
/// implicit route to the goal when the list is empty.
std::vector<RouteHypothesis> effective_routes(const std::vector<RouteHypothesis>& routes,
                                              const Vec2& goal);

}  // namespace gsc
