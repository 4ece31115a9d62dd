#include "gsc/controllers.hpp"

#include "gsc/channel.hpp"

#include <algorithm>
#include <cmath>

namespace gsc {

const std::vector<std::string>& controller_names() {
  static const std::vector<std::string> names = {"linear-blend", "switching", "safeguarded-blend",
                                                 "csc-most-likely", "gsc"};
  return names;
}

std::string to_string(ControllerKind kind) {
  return controller_names()[static_cast<std::size_t>(kind)];
}

ControllerKind parse_controller_kind(const std::string& name) {
  const auto& names = controller_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<ControllerKind>(i);
  }
  std::string valid;
  for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
  throw Error("unknown-controller", "'" + name + "' (valid: " + valid + ")");
}

void BlendGains::validate() const {
  if (!(k_h >= 0.0) || !(k_r >= 0.0) || !std::isfinite(k_h) || !std::isfinite(k_r)) {
    throw Error("bad-gains", "gains must be finite and non-negative");
  }
  if (convex && std::abs(k_h + k_r - 1.0) > 1e-9) {
    throw Error("bad-gains", "convex gains must sum to 1");
  }
}

void ControllerConfig::validate() const {
  gains.validate();
  if (!(safeguard_margin >= 0.0)) throw Error("bad-controller", "safeguard_margin must be >= 0");
  if (!(staleness_tau > 0.0)) throw Error("bad-tau");
  if (n_samples < 1) throw Error("bad-controller", "n_samples must be >= 1");
  if (!(speed_limit > 0.0)) throw Error("bad-controller", "speed_limit must be > 0");
}

Command linear_blend(const Command& u_h, const Command& u_r, const BlendGains& gains,
                     double speed_limit) {
  gains.validate();
  return Command::clamped(gains.k_h * u_h.velocity + gains.k_r * u_r.velocity, speed_limit);
}

Command switching_control(const Command& u_h, const Command& u_r, bool human_engaged,
                          double speed_limit) {
  const BlendGains endpoint = human_engaged ? BlendGains{1.0, 0.0} : BlendGains{0.0, 1.0};
  return linear_blend(u_h, u_r, endpoint, speed_limit);
}

BlendGains stale_gains(const BlendGains& gains, double age, double tau) {
  const double kh = gains.k_h * staleness_weight(age, tau);
  const double total = kh + gains.k_r;
  if (!(total > 0.0)) return BlendGains{0.0, 1.0};
  return BlendGains{kh / total, gains.k_r / total, true};
}

std::vector<ObstaclePrediction> predict_constant_velocity(const WorldState& world,
                                                          const TimeGrid& grid) {
  std::vector<ObstaclePrediction> out;
  for (const auto& o : world.obstacles) {
    if (!o.visible) continue;
    ObstaclePrediction p;
    p.radius = o.radius;
    p.centers.resize(grid.steps, 2);
    for (int k = 0; k < grid.steps; ++k) {
      p.centers.row(k) = (o.position + o.velocity * grid.time(k)).transpose();
    }
    out.push_back(std::move(p));
  }
  return out;
}

double rollout_clearance(const RobotState& robot, const Command& command,
                         const std::vector<ObstaclePrediction>& predictions, const TimeGrid& grid) {
  double best = kInfinity;
  for (int k = 0; k < grid.steps; ++k) {
    const Vec2 p = robot.position + command.velocity * grid.time(k);
    for (const auto& pred : predictions) {
      if (pred.centers.rows() <= k) throw Error("grid-mismatch");
      const Vec2 c = pred.centers.row(k).transpose();
      best = std::min(best, (p - c).norm() - robot.radius - pred.radius);
    }
  }
  return best;
}

SafeguardResult safeguarded_blend(const Command& u_h, const Command& u_r, const BlendGains& gains,
                                  const RobotState& robot,
                                  const std::vector<ObstaclePrediction>& predictions,
                                  double margin, const TimeGrid& grid, double speed_limit) {
  const Command candidate = linear_blend(u_h, u_r, gains, speed_limit);
  if (rollout_clearance(robot, candidate, predictions, grid) >= margin) return {candidate, false};
  const Command fallback = Command::clamped(u_r.velocity, speed_limit);
  if (rollout_clearance(robot, fallback, predictions, grid) >= margin) return {fallback, true};
  return {Command::zero(), true};
}

SafeguardResult safeguarded_blend(const Command& u_h, const Command& u_r, const BlendGains& gains,
                                  const WorldState& world, double margin, const TimeGrid& grid,
                                  double speed_limit) {
  return safeguarded_blend(u_h, u_r, gains, world.robot, predict_constant_velocity(world, grid),
                           margin, grid, speed_limit);
}

Command step_velocity(const GPosterior& posterior, const Vec2& origin, double dt,
                      double speed_limit) {
  const Vec2 first = posterior.mean.row(0).transpose();
  return Command::clamped((first - origin) / dt, speed_limit);
}

Command step_velocity(const TrajectorySample& traj, const Vec2& origin, double speed_limit) {
  const Vec2 first = traj.positions.row(0).transpose();
  return Command::clamped((first - origin) / traj.dt, speed_limit);
}

Command csc_step(const MultimodalTrajectoryDistribution& operator_dist,
                 const MultimodalTrajectoryDistribution& autonomy, const BlendGains& gains,
                 const Vec2& origin, double dt, double speed_limit) {
  if (operator_dist.grid_size() != autonomy.grid_size()) throw Error("grid-mismatch");
  const auto [op_index, op_post] = most_likely_mode(operator_dist);
  const auto [au_index, au_post] = most_likely_mode(autonomy);
  const Command u_h = step_velocity(*op_post, origin, dt, speed_limit);
  const Command u_r = step_velocity(*au_post, origin, dt, speed_limit);
  return linear_blend(u_h, u_r, gains, speed_limit);
}

GscResult gsc_step(const JointModel& model, const InferenceConfig& inference, const Vec2& origin,
                   double speed_limit) {
  GscResult out;
  out.selected = map_joint(model, inference.n_samples, inference.seed);
  out.command = step_velocity(out.selected.autonomy_traj, origin, speed_limit);
  return out;
}

}  // namespace gsc
