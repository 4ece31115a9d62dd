#include "gsc/world.hpp"

#include <algorithm>

namespace gsc {

Vec2 Obstacle::velocity_at(int step) const {
  Vec2 v = Vec2::Zero();
  for (const auto& seg : script) {
    if (seg.start_step <= step) v = seg.velocity;
  }
  return v;
}

void WorldState::refresh() {
  for (auto& o : obstacles) {
    o.visible = time_step >= o.reveal_step;
    o.velocity = o.velocity_at(time_step);
  }
}

std::size_t WorldState::visible_count() const {
  return static_cast<std::size_t>(
      std::count_if(obstacles.begin(), obstacles.end(), [](const Obstacle& o) { return o.visible; }));
}

const NamedRegion* WorldState::region(const std::string& name) const {
  for (const auto& r : regions) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

WorldState step_world(const WorldState& world, const Command& u_s, double dt, double speed_limit) {
  WorldState next = world;
  next.robot.position += clamp_speed(u_s.velocity, speed_limit) * dt;
  for (auto& o : next.obstacles) o.position += o.velocity_at(world.time_step) * dt;
  next.time_step = world.time_step + 1;
  next.refresh();
  return next;
}

double collision_check(const WorldState& world) {
  double best = kInfinity;
  for (const auto& o : world.obstacles) {
    const double c = (o.position - world.robot.position).norm() - world.robot.radius - o.radius;
    best = std::min(best, c);
  }
  return best;
}

double snapshot_clearance(const TraceRecord& record) {
  double best = kInfinity;
  for (const auto& o : record.obstacles) {
    best = std::min(best, (o.position - record.robot).norm() - record.robot_radius - o.radius);
  }
  return best;
}

}  // namespace gsc
