#include "gsc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gsc {
namespace {

constexpr std::uint64_t kChannelTag = 0x6368616e6e656cULL;
constexpr std::uint64_t kInferenceTag = 0x696e666572ULL;

ObstacleSnapshot snapshot(const Obstacle& o) { return {o.id, o.position, o.radius, o.visible}; }

std::string dominant(const Trace& trace, std::string TraceRecord::*field) {
  std::map<std::string, int> counts;
  std::vector<std::string> order;
  for (const auto& r : trace.records) {
    if (r.terminal || (r.*field).empty()) continue;
    if (counts[r.*field]++ == 0) order.push_back(r.*field);
  }
  std::string best;
  int best_count = 0;
  for (const auto& label : order) {
    if (counts[label] > best_count) {
      best = label;
      best_count = counts[label];
    }
  }
  return best;
}

}  // namespace

Simulation::Simulation(ScenarioSpec spec, ControllerConfig controller, std::uint64_t seed)
    : spec_(std::move(spec)), controller_(controller), seed_(seed) {
  spec_.validate();
  controller_.validate();
  channel_ = spec_.channel;
  channel_.seed = derive_seed(spec_.channel.seed, kChannelTag, seed_);
  world_ = spec_.world;
  world_.time_step = 0;
  world_.refresh();
}

void Simulation::set_channel(const ChannelConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = channel_.seed;
  channel_ = cfg;
  channel_.seed = seed;
}

void Simulation::set_controller(const ControllerConfig& cfg) {
  cfg.validate();
  controller_ = cfg;
}

bool Simulation::terminal_now() const {
  if ((world_.robot.position - world_.goal).norm() <= world_.goal_radius) return true;
  if (collision_check(world_) < 0.0) return true;
  return world_.time_step >= spec_.max_steps;
}

const TraceRecord& Simulation::step() {
  return advance(scripted_operator_input(spec_.operator_script, world_, world_.time_step,
                                         spec_.speed_limit));
}

const TraceRecord& Simulation::step(const std::optional<Command>& operator_command) {
  std::optional<TimedInput> input;
  if (operator_command) {
    input = TimedInput{world_.time_step, Command::clamped(operator_command->velocity,
                                                          spec_.speed_limit)};
  }
  return advance(input);
}

const TraceRecord& Simulation::advance(const std::optional<TimedInput>& input) {
  if (finished_) return trace_.records.back();
  const int k = world_.time_step;

  TraceRecord rec;
  rec.step = k;
  rec.robot = world_.robot.position;
  rec.robot_radius = world_.robot.radius;
  rec.controller = to_string(controller_.kind);
  for (const auto& o : world_.obstacles) rec.obstacles.push_back(snapshot(o));

  if (terminal_now()) {
    rec.terminal = true;
    finished_ = true;
    trace_.records.push_back(std::move(rec));
    return trace_.records.back();
  }

  // Operator channel.
  if (input) {
    rec.u_h_raw = input->command;
    if (auto d = channel_transmit(*input, channel_)) in_flight_.push_back(*d);
  }
  while (!in_flight_.empty() && in_flight_.front().delivered_step <= k) {
    log_.latest = in_flight_.front();
    rec.u_h_delivered = in_flight_.front().noisy_command;
    in_flight_.pop_front();
  }

  log_.record(world_);
  SceneModel scene = build_scene_model(spec_, world_, log_);
  const TimeGrid grid = spec_.grid();
  const Vec2 origin = world_.robot.position;
  const double vmax = controller_.speed_limit;

  const auto [au_index, au_post] = most_likely_mode(scene.joint.autonomy);
  const auto [op_index, op_post] = most_likely_mode(scene.joint.operator_dist);
  rec.u_r = step_velocity(*au_post, origin, spec_.dt, vmax);

  Command u_h = Command::zero();
  double age = kInfinity;
  if (log_.latest) {
    u_h = log_.latest->noisy_command;
    age = (k - log_.latest->original.issued_step) * spec_.dt;
  }
  const BlendGains gains = log_.latest ? stale_gains(controller_.gains, age, controller_.staleness_tau)
                                       : BlendGains{0.0, 1.0};
  rec.operator_mode = scene.joint.operator_dist.modes[op_index].hypothesis.label;
  rec.autonomy_mode = scene.joint.autonomy.modes[au_index].hypothesis.label;

  switch (controller_.kind) {
    case ControllerKind::LinearBlend:
      rec.u_s = linear_blend(u_h, rec.u_r, gains, vmax);
      break;
    case ControllerKind::Switching:
      rec.u_s = switching_control(u_h, rec.u_r, age <= controller_.staleness_tau, vmax);
      break;
    case ControllerKind::SafeguardedBlend: {
      const auto res = safeguarded_blend(u_h, rec.u_r, gains, world_.robot, scene.predictions,
                                         controller_.safeguard_margin, grid, vmax);
      rec.u_s = res.command;
      rec.overrode = res.overrode;
      break;
    }
    case ControllerKind::CscMostLikely:
      rec.u_s = csc_step(scene.joint.operator_dist, scene.joint.autonomy, gains, origin, spec_.dt,
                         vmax);
      break;
    case ControllerKind::Gsc: {
      const InferenceConfig inference{controller_.n_samples,
                                      derive_seed(seed_, kInferenceTag, static_cast<std::uint64_t>(k))};
      const GscResult res = gsc_step(scene.joint, inference, origin, vmax);
      rec.u_s = res.command;
      rec.operator_mode =
          scene.joint.operator_dist.modes[res.selected.operator_mode].hypothesis.label;
      rec.autonomy_mode = scene.joint.autonomy.modes[res.selected.autonomy_mode].hypothesis.label;
      break;
    }
  }

  last_scene_ = std::move(scene);
  world_ = step_world(world_, rec.u_s, spec_.dt, spec_.speed_limit);
  trace_.records.push_back(std::move(rec));
  return trace_.records.back();
}

RunResult run_scenario(const ScenarioSpec& spec, const ControllerConfig& controller,
                       std::uint64_t seed) {
  Simulation sim(spec, controller, seed);
  while (!sim.finished()) sim.step();
  RunResult out;
  out.trace = sim.trace();
  out.metrics = compute_metrics(out.trace, spec);
  return out;
}

Metrics compute_metrics(const Trace& trace, const ScenarioSpec& spec) {
  Metrics m;
  for (const auto& region : spec.world.regions) m.region_hits[region.name] = false;
  double sq_sum = 0.0;
  const TraceRecord* prev = nullptr;
  const TraceRecord* prev_active = nullptr;
  for (const auto& r : trace.records) {
    m.min_clearance = std::min(m.min_clearance, snapshot_clearance(r));
    if (prev) m.path_length += (r.robot - prev->robot).norm();
    if (!m.steps_to_goal && (r.robot - spec.world.goal).norm() <= spec.world.goal_radius) {
      m.steps_to_goal = r.step;
    }
    sq_sum += (r.robot - spec.operator_script.intent_at(r.step)).squaredNorm();
    for (const auto& region : spec.world.regions) {
      if (region.area.contains(r.robot)) m.region_hits[region.name] = true;
    }
    if (!r.terminal) {
      if (prev_active) {
        m.max_accel = std::max(m.max_accel, (r.u_s.velocity - prev_active->u_s.velocity).norm() / spec.dt);
      }
      prev_active = &r;
    }
    prev = &r;
  }
  if (!trace.records.empty() && !spec.operator_script.waypoints.empty()) {
    m.agreement_rms = std::sqrt(sq_sum / static_cast<double>(trace.records.size()));
  }
  m.collision = m.min_clearance < 0.0;
  return m;
}

std::string dominant_operator_mode(const Trace& trace) {
  return dominant(trace, &TraceRecord::operator_mode);
}

std::string dominant_autonomy_mode(const Trace& trace) {
  return dominant(trace, &TraceRecord::autonomy_mode);
}

}  // namespace gsc
