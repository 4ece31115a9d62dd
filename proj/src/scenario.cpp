#include "gsc/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace gsc {

std::string to_string(InputRule rule) {
  switch (rule) {
    case InputRule::HeadToWaypoint: return "head-to-waypoint";
    case InputRule::SilentAfter: return "silent-after";
    case InputRule::StartleAt: return "startle-at";
    case InputRule::MergeCueAt: return "merge-cue-at";
  }
  return "head-to-waypoint";
}

InputRule parse_input_rule(const std::string& name) {
  for (auto rule : {InputRule::HeadToWaypoint, InputRule::SilentAfter, InputRule::StartleAt,
                    InputRule::MergeCueAt}) {
    if (to_string(rule) == name) return rule;
  }
  throw Error("bad-scenario", "unknown input rule '" + name + "'");
}

Vec2 OperatorScript::intent_at(int step) const {
  if (waypoints.empty()) return Vec2::Zero();
  if (step <= waypoints.front().step) return waypoints.front().position;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const auto& a = waypoints[i - 1];
    const auto& b = waypoints[i];
    if (step <= b.step) {
      const double span = static_cast<double>(b.step - a.step);
      const double u = span > 0.0 ? static_cast<double>(step - a.step) / span : 1.0;
      return a.position + u * (b.position - a.position);
    }
  }
  return waypoints.back().position;
}

namespace {

Command head_to_waypoint(const OperatorScript& script, const Vec2& robot, double speed_limit) {
  if (script.waypoints.empty()) return Command::zero();
  const auto& wps = script.waypoints;
  // Target the waypoint after the furthest one already passed (reached, or
  // crossed the perpendicular towards the next waypoint).
  std::size_t target = 0;
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const Vec2& w = wps[i].position;
    bool passed = (robot - w).norm() <= script.reach_radius;
    if (!passed && i + 1 < wps.size()) {
      passed = (robot - w).dot(wps[i + 1].position - w) > 0.0;
    }
    if (passed) target = std::min(i + 1, wps.size() - 1);
  }
  const Vec2 delta = wps[target].position - robot;
  const double dist = delta.norm();
  const bool last = target + 1 == wps.size();
  if (last && dist <= 0.05) return Command::zero();
  double speed = std::min(script.speed, speed_limit);
  if (last) speed = std::min(speed, dist);
  return Command::clamped(delta / dist * speed, speed_limit);
}

}  // namespace

std::optional<TimedInput> scripted_operator_input(const OperatorScript& script,
                                                  const WorldState& world, int step,
                                                  double speed_limit) {
  const Vec2& robot = world.robot.position;
  switch (script.rule) {
    case InputRule::HeadToWaypoint:
      return TimedInput{step, head_to_waypoint(script, robot, speed_limit)};
    case InputRule::SilentAfter:
      if (step > script.rule_step) return std::nullopt;
      return TimedInput{step, head_to_waypoint(script, robot, speed_limit)};
    case InputRule::StartleAt:
      if (step >= script.rule_step && step < script.rule_step + script.startle_duration) {
        return TimedInput{step, Command::clamped(script.startle_command, speed_limit)};
      }
      return TimedInput{step, head_to_waypoint(script, robot, speed_limit)};
    case InputRule::MergeCueAt:
      if (step < script.rule_step) return TimedInput{step, Command::zero()};
      return TimedInput{step, head_to_waypoint(script, robot, speed_limit)};
  }
  return std::nullopt;
}

Vec2 point_along(const std::vector<Vec2>& polyline, double arc) {
  if (polyline.empty()) return Vec2::Zero();
  if (polyline.size() == 1) return polyline.front();
  double remaining = std::max(arc, 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    const Vec2 seg = polyline[i] - polyline[i - 1];
    const double len = seg.norm();
    if (remaining <= len) {
      if (len <= 0.0) return polyline[i];
      return polyline[i - 1] + seg * (remaining / len);
    }
    remaining -= len;
  }
  return polyline.back();
}

double project_onto(const std::vector<Vec2>& polyline, const Vec2& p) {
  if (polyline.size() < 2) return 0.0;
  double best_dist = kInfinity;
  double best_arc = 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    const Vec2 a = polyline[i - 1];
    const Vec2 seg = polyline[i] - a;
    const double len2 = seg.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((p - a).dot(seg) / len2, 0.0, 1.0) : 0.0;
    const double d = (a + u * seg - p).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best_arc = acc + u * std::sqrt(len2);
    }
    acc += std::sqrt(len2);
  }
  return best_arc;
}

ModeHypothesis project_route(const RouteHypothesis& route, const Vec2& position,
                             const ModelParams& model, double horizon_end) {
  ModeHypothesis hyp;
  hyp.label = route.label;
  hyp.prior_weight = route.prior_weight;

  // Rejoin the route `route_lookahead` metres past the closest point, then
  // follow its remaining vertices.
  std::vector<Vec2> path = {position};
  if (route.waypoints.size() == 1) {
    path.push_back(route.waypoints.front());
  } else {
    const double rejoin = project_onto(route.waypoints, position) + model.route_lookahead;
    path.push_back(point_along(route.waypoints, rejoin));
    double acc = 0.0;
    for (std::size_t i = 1; i < route.waypoints.size(); ++i) {
      acc += (route.waypoints[i] - route.waypoints[i - 1]).norm();
      if (acc > rejoin) path.push_back(route.waypoints[i]);
    }
  }
  for (int i = 1;; ++i) {
    const double t = model.via_interval * i;
    if (t >= horizon_end - 1e-9) break;
    hyp.via.push_back({t, point_along(path, model.route_speed * t)});
  }
  hyp.goal = point_along(path, model.route_speed * horizon_end);
  return hyp;
}

void ScenarioSpec::validate() const {
  auto fail = [&](const std::string& why) { throw Error("bad-scenario", id + ": " + why); };
  if (id.empty()) fail("missing id");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (horizon_steps < 1) fail("horizon_steps must be >= 1");
  if (max_steps < 1) fail("max_steps must be >= 1");
  if (!(speed_limit > 0.0)) fail("speed_limit must be positive");
  if (!(world.robot.radius > 0.0)) fail("robot radius must be positive");
  if (!(world.goal_radius > 0.0)) fail("goal radius must be positive");
  for (const auto& o : world.obstacles) {
    if (!(o.radius > 0.0)) fail("obstacle radius must be positive");
    for (std::size_t i = 1; i < o.script.size(); ++i) {
      if (o.script[i].start_step < o.script[i - 1].start_step) fail("obstacle script not ordered");
    }
  }
  for (std::size_t i = 1; i < operator_script.waypoints.size(); ++i) {
    if (operator_script.waypoints[i].step < operator_script.waypoints[i - 1].step) {
      fail("operator waypoints not time-ordered");
    }
  }
  auto check_hyps = [&](const std::vector<RouteHypothesis>& hyps, const char* who) {
    if (hyps.empty()) return;
    double total = 0.0;
    for (const auto& h : hyps) {
      if (!(h.prior_weight > 0.0 && h.prior_weight <= 1.0)) {
        fail(std::string(who) + " prior weight outside (0, 1]");
      }
      if (h.waypoints.empty()) fail(std::string(who) + " route without waypoints");
      total += h.prior_weight;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(std::string(who) + " prior weights do not sum to 1");
  };
  check_hyps(operator_hypotheses, "operator");
  check_hyps(autonomy_hypotheses, "autonomy");
  try {
    channel.validate();
    operator_kernel.validate();
    autonomy_kernel.validate();
    environment_kernel.validate();
    interaction.validate();
    gains.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (!(safeguard_margin >= 0.0)) fail("safeguard_margin must be >= 0");
  if (!(staleness_tau > 0.0)) fail("staleness_tau must be positive");
  if (n_samples < 1) fail("n_samples must be >= 1");
  if (!(model.via_interval > 0.0) || model.history_steps < 1 || model.history_stride < 1 ||
      model.environment_history_steps < 1 || !(model.evidence_span > 0.0) ||
      !(model.route_speed >= 0.0) || !(model.route_lookahead >= 0.0) || !(model.goal_noise_scale >= 1.0) ||
      !(model.feasibility_strength >= 0.0 && model.feasibility_strength < 1.0) ||
      !(model.feasibility_scale > 0.0) || !(model.sensing_range >= 0.0) ||
      !(model.autonomy_evidence_scale >= 1.0)) {
    fail("invalid model parameters");
  }
  std::vector<std::string> names;
  for (const auto& r : world.regions) {
    if (r.name.empty()) fail("unnamed region");
    if (std::find(names.begin(), names.end(), r.name) != names.end()) fail("duplicate region");
    names.push_back(r.name);
  }
}

ControllerConfig ScenarioSpec::controller(ControllerKind kind) const {
  ControllerConfig c;
  c.kind = kind;
  c.gains = gains;
  c.safeguard_margin = safeguard_margin;
  c.staleness_tau = staleness_tau;
  c.n_samples = n_samples;
  c.speed_limit = speed_limit;
  return c;
}

}  // namespace gsc
