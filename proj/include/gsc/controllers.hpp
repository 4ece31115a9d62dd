#pragma once

// Shared-control laws. The classical family blends one operator command with
// one autonomy command; the generalized controller reads its command off the
// most likely joint hypothesis.

#include "gsc/joint.hpp"
#include "gsc/world.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gsc {

enum class ControllerKind { LinearBlend, Switching, SafeguardedBlend, CscMostLikely, Gsc };

std::string to_string(ControllerKind kind);
/// Throws "unknown-controller".
ControllerKind parse_controller_kind(const std::string& name);
const std::vector<std::string>& controller_names();

struct BlendGains {
  double k_h = 0.5;
  double k_r = 0.5;
  bool convex = true;  // require k_h + k_r == 1

  /// Throws "bad-gains".
  void validate() const;
  bool operator==(const BlendGains&) const = default;
};

struct ControllerConfig {
  ControllerKind kind = ControllerKind::Gsc;
  BlendGains gains;
  double safeguard_margin = 0.5;
  double staleness_tau = 1.0;
  std::size_t n_samples = 500;
  double speed_limit = kDefaultSpeedLimit;

  void validate() const;
};

struct InferenceConfig {
  std::size_t n_samples = 500;
  std::uint64_t seed = 0;
};

Command linear_blend(const Command& u_h, const Command& u_r, const BlendGains& gains,
                     double speed_limit = kDefaultSpeedLimit);

Command switching_control(const Command& u_h, const Command& u_r, bool human_engaged,
                          double speed_limit = kDefaultSpeedLimit);

/// K_h' = K_h w(age), renormalised against K_R so the pair stays convex.
BlendGains stale_gains(const BlendGains& gains, double age, double tau);

struct ObstaclePrediction {
  PathMatrix centers;  // one row per horizon step
  double radius = 0.5;
};

/// Constant-velocity prediction of the visible obstacles over the grid.
std::vector<ObstaclePrediction> predict_constant_velocity(const WorldState& world,
                                                          const TimeGrid& grid);

/// Minimum predicted clearance when `command` is held for the whole horizon.
double rollout_clearance(const RobotState& robot, const Command& command,
                         const std::vector<ObstaclePrediction>& predictions, const TimeGrid& grid);

struct SafeguardResult {
  Command command;
  bool overrode = false;
};

SafeguardResult safeguarded_blend(const Command& u_h, const Command& u_r, const BlendGains& gains,
                                  const RobotState& robot,
                                  const std::vector<ObstaclePrediction>& predictions,
                                  double margin, const TimeGrid& grid,
                                  double speed_limit = kDefaultSpeedLimit);

SafeguardResult safeguarded_blend(const Command& u_h, const Command& u_r, const BlendGains& gains,
                                  const WorldState& world, double margin, const TimeGrid& grid,
                                  double speed_limit = kDefaultSpeedLimit);

/// First-step velocity of a posterior mean: (mean[0] - origin) / dt, clamped.
Command step_velocity(const GPosterior& posterior, const Vec2& origin, double dt,
                      double speed_limit = kDefaultSpeedLimit);
Command step_velocity(const TrajectorySample& traj, const Vec2& origin,
                      double speed_limit = kDefaultSpeedLimit);

Command csc_step(const MultimodalTrajectoryDistribution& operator_dist,
                 const MultimodalTrajectoryDistribution& autonomy, const BlendGains& gains,
                 const Vec2& origin, double dt, double speed_limit = kDefaultSpeedLimit);

struct GscResult {
  Command command;
  JointHypothesis selected;
};

GscResult gsc_step(const JointModel& model, const InferenceConfig& inference, const Vec2& origin,
                   double speed_limit = kDefaultSpeedLimit);

}  // namespace gsc
