#pragma once

// Deterministic planar world: single-integrator robot, scripted obstacles with
// occlusion, stepping and clearance.

#include "gsc/core.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gsc {

struct Rect {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

struct NamedRegion {
  std::string name;
  Rect area;
};

/// Piecewise-constant velocity: `velocity` applies from `start_step` until the
/// next segment starts.
struct VelocitySegment {
  int start_step = 0;
  Vec2 velocity = Vec2::Zero();
};

struct Obstacle {
  int id = 0;
  Vec2 position = Vec2::Zero();
  double radius = 0.5;
  Vec2 velocity = Vec2::Zero();
  bool visible = true;
  int reveal_step = 0;
  std::vector<VelocitySegment> script;

  /// Scripted velocity in force at `step` (zero before the first segment).
  Vec2 velocity_at(int step) const;
};

struct RobotState {
  Vec2 position = Vec2::Zero();
  double radius = 0.3;
};

struct WorldState {
  int time_step = 0;
  RobotState robot;
  std::vector<Obstacle> obstacles;
  Vec2 goal = Vec2::Zero();
  double goal_radius = 0.3;
  Rect bounds;
  std::vector<NamedRegion> regions;

  /// Applies the reveal rule and scripted velocities for the current step.
  void refresh();
  std::size_t visible_count() const;
  const NamedRegion* region(const std::string& name) const;
};

WorldState step_world(const WorldState& world, const Command& u_s, double dt,
                      double speed_limit = kDefaultSpeedLimit);

/// Minimum surface distance from robot to any obstacle, visible or not.
/// +infinity when there are no obstacles.
double collision_check(const WorldState& world);

struct ObstacleSnapshot {
  int id = 0;
  Vec2 position = Vec2::Zero();
  double radius = 0.5;
  bool visible = true;
};

struct TraceRecord {
  int step = 0;
  Vec2 robot = Vec2::Zero();
  double robot_radius = 0.3;
  std::vector<ObstacleSnapshot> obstacles;
  std::optional<Command> u_h_raw;
  std::optional<Command> u_h_delivered;
  Command u_r;
  Command u_s;
  std::string controller;
  bool overrode = false;
  bool terminal = false;
  std::string operator_mode;
  std::string autonomy_mode;
};

struct Trace {
  std::vector<TraceRecord> records;
};

struct Metrics {
  double min_clearance = kInfinity;
  bool collision = false;
  double path_length = 0.0;
  std::optional<int> steps_to_goal;
  double agreement_rms = 0.0;
  std::map<std::string, bool> region_hits;
  double max_accel = 0.0;
};

double snapshot_clearance(const TraceRecord& record);

}  // namespace gsc
