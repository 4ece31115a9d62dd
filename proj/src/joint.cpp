#include "gsc/joint.hpp"

#include <algorithm>
#include <cmath>

namespace gsc {
namespace {

void check_grid(const TrajectorySample& a, const TrajectorySample& b) {
  if (a.positions.rows() != b.positions.rows()) throw Error("grid-mismatch");
}

}  // namespace

void InteractionParams::validate() const {
  if (!(safety_strength >= 0.0 && safety_strength < 1.0)) {
    throw Error("bad-interaction", "safety_strength must lie in [0, 1)");
  }
  if (!(safety_scale > 0.0) || !(agreement_scale > 0.0)) {
    throw Error("bad-interaction", "scales must be positive");
  }
}

void JointModel::validate() const {
  params.validate();
  operator_dist.validate();
  autonomy.validate();
  const std::size_t n = autonomy.grid_size();
  if (operator_dist.grid_size() != n) throw Error("grid-mismatch");
  for (const auto& env : environment) {
    env.validate();
    if (env.grid_size() != n) throw Error("grid-mismatch");
  }
}

namespace {

// A factor 1 - alpha*e with e below this rounds to exactly 1.0, so skipping
// the exp/log leaves the sum unchanged bit for bit.
constexpr double kNegligibleExponent = 38.0;

double safety_term(const TrajectorySample& robot, const TrajectorySample& obs, double alpha,
                   double inv) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < robot.positions.rows(); ++t) {
    const double x = -(robot.positions(t, 0) - obs.positions(t, 0));
    const double y = -(robot.positions(t, 1) - obs.positions(t, 1));
    const double e = (x * x + y * y) * inv;
    if (e > kNegligibleExponent) continue;
    total += std::log(std::max(1.0 - alpha * std::exp(-e), kCouplingFloor));
  }
  return total;
}

// Per-agent density evaluators built once per model, shared by the exact
// score and the candidate ranking so both produce identical numbers.
struct Scorer {
  explicit Scorer(const JointModel& m) : model(m), op(m.operator_dist), au(m.autonomy) {
    for (const auto& e : m.environment) env.emplace_back(e);
    inv = 1.0 / (2.0 * m.params.safety_scale * m.params.safety_scale);
  }

  template <typename EnvAt>
  double operator()(const TrajectorySample& op_traj, const TrajectorySample& au_traj,
                    EnvAt&& env_at) const {
    double score = op(op_traj);
    score += au(au_traj);
    for (std::size_t i = 0; i < env.size(); ++i) score += env[i](env_at(i));
    if (model.params.safety_enabled && model.params.safety_strength != 0.0) {
      double safety = 0.0;
      for (std::size_t i = 0; i < env.size(); ++i) {
        safety += safety_term(au_traj, env_at(i), model.params.safety_strength, inv);
      }
      score += safety;
    }
    if (model.params.agreement_enabled) {
      score += agreement_coupling(au_traj, op_traj, model.params.agreement_scale);
    }
    return score;
  }

  const JointModel& model;
  MixtureDensity op;
  MixtureDensity au;
  std::vector<MixtureDensity> env;
  double inv = 0.0;
};

}  // namespace

double safety_coupling(const TrajectorySample& robot, const std::vector<TrajectorySample>& obstacles,
                       double alpha, double scale) {
  for (const auto& obs : obstacles) check_grid(robot, obs);
  if (alpha == 0.0) return 0.0;
  const double inv = 1.0 / (2.0 * scale * scale);
  double total = 0.0;
  for (const auto& obs : obstacles) total += safety_term(robot, obs, alpha, inv);
  return total;
}

double agreement_coupling(const TrajectorySample& robot, const TrajectorySample& operator_traj,
                          double scale) {
  check_grid(robot, operator_traj);
  const double sum = (robot.positions - operator_traj.positions).rowwise().squaredNorm().sum();
  return -sum / (2.0 * scale * scale);
}

double joint_log_score(const JointModel& model, const JointHypothesis& hyp) {
  if (hyp.environment_trajs.size() != model.environment.size()) throw Error("grid-mismatch");
  for (const auto& e : hyp.environment_trajs) check_grid(hyp.autonomy_traj, e);
  const Scorer scorer(model);
  return scorer(hyp.operator_traj, hyp.autonomy_traj,
                [&](std::size_t i) -> const TrajectorySample& { return hyp.environment_trajs[i]; });
}

JointHypothesis map_joint(const JointModel& model, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error("bad-count");
  model.validate();
  const double dt = model.dt;
  auto op = sample_trajectories(model.operator_dist, n_samples, agent_stream_seed(seed, 0), dt);
  auto au = sample_trajectories(model.autonomy, n_samples, agent_stream_seed(seed, 1), dt);
  std::vector<std::vector<std::pair<TrajectorySample, std::size_t>>> env;
  env.reserve(model.environment.size());
  for (std::size_t i = 0; i < model.environment.size(); ++i) {
    env.push_back(sample_trajectories(model.environment[i], n_samples,
                                      agent_stream_seed(seed, 2 + i), dt));
  }

  const Scorer scorer(model);
  std::size_t best_k = 0;
  double best_score = -kInfinity;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double score = scorer(op[k].first, au[k].first,
                                [&](std::size_t i) -> const TrajectorySample& { return env[i][k].first; });
    // Strict comparison keeps the lowest index on ties; the first candidate
    // is always taken so a -inf field still yields a hypothesis.
    if (k == 0 || score > best_score) {
      best_k = k;
      best_score = score;
    }
  }

  JointHypothesis best;
  best.operator_traj = op[best_k].first;
  best.autonomy_traj = au[best_k].first;
  for (auto& e : env) best.environment_trajs.push_back(e[best_k].first);
  best.operator_mode = op[best_k].second;
  best.autonomy_mode = au[best_k].second;
  best.candidate_index = best_k;
  best.log_score = best_score;
  return best;
}

}  // namespace gsc
