// Built-in scenario catalog. Coordinates are invented to reproduce each
// figure's topology; once tuned they are frozen and pinned by golden files
// under tests/golden/scenarios, so any edit here must bump `version`.

#include "gsc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace gsc {
namespace {

Obstacle disc(int id, Vec2 p, double r) {
  Obstacle o;
  o.id = id;
  o.position = p;
  o.radius = r;
  return o;
}

RouteHypothesis route(std::string label, double prior, std::vector<Vec2> pts) {
  return RouteHypothesis{std::move(label), prior, std::move(pts)};
}

// Waypoints along `pts` timed for travel at `speed`.
OperatorScript follow(std::string intent, const std::vector<Vec2>& pts, double speed, double dt,
                      int start_step = 0) {
  OperatorScript s;
  s.intent_mode = std::move(intent);
  s.speed = speed;
  double t = start_step * dt;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) t += (pts[i] - pts[i - 1]).norm() / speed;
    s.waypoints.push_back({static_cast<int>(std::lround(t / dt)), pts[i]});
  }
  return s;
}

ScenarioSpec base(std::string id, std::string description) {
  ScenarioSpec s;
  s.id = std::move(id);
  s.description = std::move(description);
  s.operator_kernel = KernelParams{2.5, 4.0, 0.01};
  s.autonomy_kernel = KernelParams{1.0, 25.0, 1e-4};
  s.environment_kernel = KernelParams{1.0, 25.0, 1e-4};
  s.interaction = InteractionParams{0.999, 0.7, 1.5, true, true};
  s.channel.noise_std = 0.05;
  s.channel.seed = 11;
  return s;
}

ScenarioSpec multimodal_corridor() {
  auto s = base("multimodal-corridor",
                "Two routes around a central obstacle band; the operator wants the left one, the "
                "autonomy slightly prefers the right one.");
  auto& w = s.world;
  w.robot.position = {0.0, 0.0};
  w.goal = {0.0, 20.0};
  w.bounds = {{-8.0, -2.0}, {8.0, 22.0}};
  int id = 0;
  for (double y : {7.0, 8.2, 9.4}) {
    for (double x : {-1.2, 0.0, 1.2}) w.obstacles.push_back(disc(id++, {x, y}, 0.6));
  }
  const std::vector<Vec2> left = {{0, 0}, {-3.5, 5}, {-3.5, 11}, {0, 16}, {0, 20}};
  const std::vector<Vec2> right = {{0, 0}, {3.5, 5}, {3.5, 11}, {0, 16}, {0, 20}};
  s.operator_hypotheses = {route("left", 0.6, left), route("right", 0.4, right)};
  s.autonomy_hypotheses = {route("left", 0.4, left), route("right", 0.6, right)};
  s.operator_script = follow("left", left, 2.0, s.dt);
  s.model.sensing_range = 8.0;
  return s;
}

ScenarioSpec lossy_surveillance() {
  auto s = base("lossy-surveillance",
                "The operator must sweep the surveillance area on the west side, then goes "
                "quiet; 70% of inputs are lost in transit.");
  auto& w = s.world;
  w.robot.position = {0.0, 0.0};
  w.goal = {0.0, 24.0};
  w.bounds = {{-8.0, -2.0}, {8.0, 26.0}};
  int id = 0;
  for (double y : {8.0, 11.0, 14.0, 17.0}) {
    for (double x : {-1.5, 0.0, 1.5}) w.obstacles.push_back(disc(id++, {x, y}, 0.6));
  }
  w.regions.push_back({"surveillance", {{-5.5, 10.0}, {-2.5, 14.0}}});
  const std::vector<Vec2> west = {{0, 0}, {-4, 5}, {-4, 19}, {0, 24}};
  const std::vector<Vec2> east = {{0, 0}, {4, 5}, {4, 19}, {0, 24}};
  s.operator_hypotheses = {route("west", 0.5, west), route("east", 0.5, east)};
  s.autonomy_hypotheses = {route("east", 0.7, east), route("west", 0.3, west)};
  s.operator_script = follow("west", west, 2.0, s.dt);
  s.operator_script.rule = InputRule::SilentAfter;
  s.operator_script.rule_step = 15;
  s.channel.drop_probability = 0.7;
  s.model.sensing_range = 8.0;
  return s;
}

ScenarioSpec laggy_occlusion() {
  auto s = base("laggy-occlusion",
                "The operator steers right around a passage that is about to close; inputs arrive "
                "one second late and the closing obstacles are occluded until step 30.");
  auto& w = s.world;
  w.robot.position = {0.0, 0.0};
  w.goal = {0.0, 20.0};
  w.bounds = {{-8.0, -2.0}, {8.0, 22.0}};
  const int reveal = 30;
  int id = 0;
  for (double y : {10.0, 11.4}) {
    for (double x_end : {-0.8, 0.8}) {
      Obstacle o = disc(id++, {x_end - 1.0 * reveal * s.dt, y}, 0.6);
      o.reveal_step = reveal;
      o.script = {{0, {1.0, 0.0}}, {reveal, {0.0, 0.0}}};
      w.obstacles.push_back(o);
    }
  }
  const std::vector<Vec2> center = {{0, 0}, {0, 20}};
  const std::vector<Vec2> right = {{0, 0}, {1.5, 4}, {4.5, 7}, {4.5, 13}, {0, 17}, {0, 20}};
  s.operator_hypotheses = {route("center", 0.3, center), route("right", 0.7, right)};
  s.autonomy_hypotheses = {route("center", 0.55, center), route("right", 0.45, right)};
  s.operator_script = follow("right", right, 2.0, s.dt);
  s.channel.lag_steps = 10;
  s.interaction.agreement_scale = 1.0;
  return s;
}

ScenarioSpec distracted_operator() {
  auto s = base("distracted-operator",
                "A distracted operator drives straight at an obstacle they do not see; the "
                "autonomy knows two ways around it.");
  auto& w = s.world;
  w.robot.position = {0.0, 0.0};
  w.goal = {0.0, 16.0};
  w.bounds = {{-8.0, -2.0}, {8.0, 18.0}};
  w.obstacles.push_back(disc(0, {0.0, 7.0}, 1.5));
  const std::vector<Vec2> straight = {{0, 0}, {0, 16}};
  const std::vector<Vec2> left = {{0, 0}, {0, 1}, {-3.0, 5}, {-3.0, 8.5}, {0, 12}, {0, 16}};
  const std::vector<Vec2> right = {{0, 0}, {0, 1}, {3.0, 5}, {3.0, 8.5}, {0, 12}, {0, 16}};
  s.operator_hypotheses = {route("straight", 0.8, straight), route("left", 0.1, left),
                           route("right", 0.1, right)};
  s.autonomy_hypotheses = {route("left", 0.25, left), route("right", 0.75, right)};
  s.operator_script = follow("straight", straight, 2.0, s.dt);
  return s;
}

ScenarioSpec elevator_crowd() {
  auto s = base("elevator-crowd",
                "A crowd waits in front of the service elevator; when the elevator is announced "
                "it parts towards the lobbies on both sides, leaving a narrow lane.");
  auto& w = s.world;
  w.robot.position = {0.0, 0.0};
  w.goal = {0.0, 13.0};
  w.bounds = {{-7.0, -2.0}, {7.0, 16.0}};
  const int disperse = 15;
  const int walk = 30;
  const std::vector<std::pair<Vec2, Vec2>> crowd = {
      {{-2.4, 7.0}, {-2.4, 11.0}}, {{-1.2, 7.0}, {-1.0, 11.0}}, {{0.0, 7.0}, {-1.7, 13.8}},
      {{1.2, 7.0}, {1.0, 11.0}},   {{2.4, 7.0}, {2.4, 11.0}},   {{-2.4, 8.0}, {-2.4, 12.4}},
      {{-1.2, 8.0}, {-1.0, 12.4}}, {{0.0, 8.0}, {1.7, 13.8}},   {{1.2, 8.0}, {1.0, 12.4}},
      {{2.4, 8.0}, {2.4, 12.4}}};
  int id = 0;
  for (const auto& [from, to] : crowd) {
    Obstacle o = disc(id++, from, 0.3);
    o.script = {{disperse, (to - from) / (walk * s.dt)}, {disperse + walk, Vec2::Zero()}};
    w.obstacles.push_back(o);
  }
  const std::vector<Vec2> direct = {{0, 0}, {0, 13}};
  const std::vector<Vec2> wall = {{0, 0}, {4.5, 4}, {4.5, 10.5}, {0, 13}};
  s.operator_hypotheses = {route("direct", 0.5, direct), route("wall", 0.5, wall)};
  s.autonomy_hypotheses = {route("wall", 0.85, wall), route("through", 0.15, direct)};
  s.operator_script = follow("direct", direct, 2.0, s.dt);
  return s;
}

ScenarioSpec startled_driver() {
  auto s = base("startled-driver",
                "Assisted driving: a startled driver jerks the wheel towards the oncoming lane "
                "for one and a half seconds.");
  auto& w = s.world;
  w.robot.position = {1.0, 0.0};
  w.goal = {1.0, 36.0};
  w.bounds = {{-4.0, -2.0}, {4.0, 38.0}};
  w.regions.push_back({"oncoming-lane", {{-2.0, -5.0}, {0.0, 80.0}}});
  int id = 0;
  for (double y : {30.0, 45.0, 60.0}) {
    Obstacle car = disc(id++, {-1.0, y}, 0.8);
    car.script = {{0, {0.0, -4.0}}};
    w.obstacles.push_back(car);
  }
  const std::vector<Vec2> lane = {{1, 0}, {1, 36}};
  const std::vector<Vec2> swerve = {{1, 0}, {1, 4}, {-1, 8}, {-1, 36}};
  s.operator_hypotheses = {route("lane", 0.8, lane), route("swerve", 0.2, swerve)};
  s.autonomy_hypotheses = {route("lane", 1.0, lane)};
  s.operator_script = follow("lane", lane, 2.0, s.dt);
  s.operator_script.rule = InputRule::StartleAt;
  s.operator_script.rule_step = 20;
  s.operator_script.startle_command = {-2.0, 0.0};
  s.operator_script.startle_duration = 15;
  return s;
}

ScenarioSpec traffic_merge() {
  auto s = base("traffic-merge",
                "The robot waits at a stop line for a gap in dense crossing traffic; the operator "
                "signals when the gap arrives.");
  auto& w = s.world;
  w.robot.position = {0.0, 0.0};
  w.goal = {0.0, 9.0};
  w.bounds = {{-12.0, -2.0}, {12.0, 11.0}};
  w.regions.push_back({"merge-lane", {{-30.0, 4.0}, {30.0, 6.0}}});
  int id = 0;
  std::vector<double> xs = {10.0, 5.0, 0.0, -5.0};
  for (double x = -15.0; x >= -200.0; x -= 5.0) xs.push_back(x);
  for (double x : xs) {
    Obstacle car = disc(id++, {x, 5.0}, 0.8);
    car.script = {{0, {3.0, 0.0}}};
    w.obstacles.push_back(car);
  }
  const std::vector<Vec2> stop = {{0, 2.2}};
  const std::vector<Vec2> cross = {{0, 0}, {0, 9}};
  s.operator_hypotheses = {route("wait", 0.5, stop), route("cross", 0.5, cross)};
  s.autonomy_hypotheses = {route("wait", 0.95, stop), route("cross", 0.05, cross)};
  s.operator_script = follow("cross", {{0, 0}, {0, 2.2}}, 2.0, s.dt);
  s.operator_script.waypoints.push_back({20, {0.0, 2.2}});
  s.operator_script.waypoints.push_back({54, {0.0, 9.0}});
  s.operator_script.rule = InputRule::MergeCueAt;
  s.operator_script.rule_step = 14;
  s.model.sensing_range = 12.0;
  return s;
}

ScenarioSpec two_mode_autopilot() {
  auto s = base("two-mode-autopilot",
                "Two ways past an obstacle, the right one slightly safer; the operator prefers "
                "the left one.");
  auto& w = s.world;
  w.robot.position = {0.0, 0.0};
  w.goal = {0.0, 16.0};
  w.bounds = {{-8.0, -2.0}, {8.0, 18.0}};
  w.obstacles.push_back(disc(0, {0.0, 8.0}, 1.0));
  w.obstacles.push_back(disc(1, {-3.6, 8.0}, 0.5));
  const std::vector<Vec2> left = {{0, 0}, {0, 3}, {-2.0, 6.5}, {-2.0, 9.5}, {0, 13}, {0, 16}};
  const std::vector<Vec2> right = {{0, 0}, {0, 3}, {2.2, 6.5}, {2.2, 9.5}, {0, 13}, {0, 16}};
  s.operator_hypotheses = {route("left", 0.7, left), route("right", 0.3, right)};
  s.autonomy_hypotheses = {route("left", 0.45, left), route("right", 0.55, right)};
  s.operator_script = follow("left", left, 2.0, s.dt);
  return s;
}

using Builder = std::function<ScenarioSpec()>;

const std::vector<std::pair<std::string, Builder>>& registry() {
  static const std::vector<std::pair<std::string, Builder>> entries = {
      {"multimodal-corridor", multimodal_corridor}, {"lossy-surveillance", lossy_surveillance},
      {"laggy-occlusion", laggy_occlusion},         {"distracted-operator", distracted_operator},
      {"elevator-crowd", elevator_crowd},           {"startled-driver", startled_driver},
      {"traffic-merge", traffic_merge},             {"two-mode-autopilot", two_mode_autopilot}};
  return entries;
}

}  // namespace

const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& [id, _] : registry()) out.push_back(id);
    return out;
  }();
  return ids;
}

ScenarioSpec build_scenario(const std::string& id) {
  for (const auto& [name, build] : registry()) {
    if (name == id) {
      ScenarioSpec s = build();
      s.world.refresh();
      s.validate();
      return s;
    }
  }
  std::string valid;
  for (const auto& n : catalog_ids()) valid += (valid.empty() ? "" : ", ") + n;
  throw Error("unknown-scenario", "'" + id + "' (valid: " + valid + ")");
}

}  // namespace gsc
