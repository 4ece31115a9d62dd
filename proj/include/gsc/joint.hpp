#pragma once

// Joint distribution over operator, autonomy and environment trajectories:
// per-agent mixtures multiplied by robot-obstacle (safety) and robot-operator
// (agreement) interaction factors, with sample-and-rank MAP inference.

#include "gsc/gp.hpp"

#include <cstdint>
#include <vector>

namespace gsc {

struct InteractionParams {
  double safety_strength = 0.99;  // alpha, in [0, 1)
  double safety_scale = 0.5;      // h_s, metres
  double agreement_scale = 1.0;   // h_a, metres
  bool agreement_enabled = true;
  bool safety_enabled = true;

  void validate() const;
  bool operator==(const InteractionParams&) const = default;
};

struct JointModel {
  MultimodalTrajectoryDistribution operator_dist;
  MultimodalTrajectoryDistribution autonomy;
  std::vector<MultimodalTrajectoryDistribution> environment;
  InteractionParams params;
  double dt = kDefaultDt;

  void validate() const;
};

struct JointHypothesis {
  TrajectorySample operator_traj;
  TrajectorySample autonomy_traj;
  std::vector<TrajectorySample> environment_trajs;
  double log_score = -kInfinity;
  std::size_t operator_mode = 0;
  std::size_t autonomy_mode = 0;
  std::size_t candidate_index = 0;
};

/// Coupling factors are clamped here before the log.
inline constexpr double kCouplingFloor = 1e-300;

double safety_coupling(const TrajectorySample& robot, const std::vector<TrajectorySample>& obstacles,
                       double alpha, double scale);

double agreement_coupling(const TrajectorySample& robot, const TrajectorySample& operator_traj,
                          double scale);

double joint_log_score(const JointModel& model, const JointHypothesis& hyp);

JointHypothesis map_joint(const JointModel& model, std::size_t n_samples, std::uint64_t seed);

/// Seeds used by map_joint for agent `index` (0 operator, 1 autonomy, 2+i env).
inline std::uint64_t agent_stream_seed(std::uint64_t seed, std::size_t index) {
  return derive_seed(seed, 0x6a6f696e74ULL, index);
}

}  // namespace gsc
