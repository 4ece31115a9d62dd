#include "gsc/scene.hpp"

#include <algorithm>
#include <cmath>

namespace gsc {
namespace {

// GP fits are done relative to the robot's current position; means are
// shifted back afterwards. Keeps the zero-mean prior from pulling routes
// towards the world origin.
ObservationSet shifted(const ObservationSet& obs, const Vec2& origin) {
  ObservationSet out = obs;
  for (auto& s : out.samples) s.position -= origin;
  return out;
}

ModeHypothesis shifted(const ModeHypothesis& hyp, const Vec2& origin) {
  ModeHypothesis out = hyp;
  out.goal -= origin;
  for (auto& v : out.via) v.position -= origin;
  return out;
}

struct AgentFit {
  MultimodalTrajectoryDistribution dist;
  bool degenerate = false;
};

// Evidence and hypotheses used to weigh the modes, when they live in a
// different frame from the fitted posteriors.
struct WeighingFrame {
  ObservationSet obs;
  std::vector<ModeHypothesis> hyps;
  Vec2 origin;
};

// Fits one posterior per hypothesis and weights the modes by mode_weights.
// `prior_adjust` may rescale the priors once the mode means are known.
template <typename Adjust>
AgentFit fit_agent(const ObservationSet& obs, const std::vector<ModeHypothesis>& hyps,
                   const KernelParams& kernel, const TimeGrid& grid, const Vec2& origin,
                   double goal_noise_scale, double evidence_scale, Adjust&& prior_adjust,
                   const WeighingFrame* weighing = nullptr) {
  const ObservationSet local = shifted(obs, origin);
  const auto times = grid.times();
  const double horizon_end = grid.end();

  std::vector<ModeHypothesis> local_hyps;
  AgentFit fit;
  for (const auto& h : hyps) {
    local_hyps.push_back(shifted(h, origin));
    MixtureMode mode;
    mode.hypothesis = h;
    mode.posterior = fit_gp_posterior(
        condition_on_hypothesis(local, local_hyps.back(), horizon_end, goal_noise_scale), kernel,
        times);
    mode.posterior.mean.rowwise() += origin.transpose();
    fit.dist.modes.push_back(std::move(mode));
  }

  std::vector<double> priors(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) priors[i] = hyps[i].prior_weight;
  prior_adjust(fit.dist, priors);
  double total = 0.0;
  for (double p : priors) total += p;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    // A route whose prior collapsed entirely keeps a vanishing floor so the
    // weights stay a probability vector.
    local_hyps[i].prior_weight = total > 0.0 ? std::max(priors[i] / total, 1e-300) : 1.0;
  }

  ObservationSet evidence = local;
  if (weighing) {
    evidence = shifted(weighing->obs, weighing->origin);
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      const double prior = local_hyps[i].prior_weight;
      local_hyps[i] = shifted(weighing->hyps[i], weighing->origin);
      local_hyps[i].prior_weight = prior;
    }
  }
  for (auto& sample : evidence.samples) sample.noise_scale *= evidence_scale;
  const ModeWeights w = mode_weights(evidence, local_hyps, kernel, horizon_end, goal_noise_scale);
  fit.degenerate = w.degenerate;
  for (std::size_t i = 0; i < hyps.size(); ++i) fit.dist.modes[i].weight = w.weights[i];
  return fit;
}

auto no_adjust = [](const MultimodalTrajectoryDistribution&, std::vector<double>&) {};

}  // namespace

void ObservationLog::record(const WorldState& world) {
  robot.push_back(world.robot.position);
  for (const auto& o : world.obstacles) {
    if (o.visible) obstacles[o.id].emplace_back(world.time_step, o.position);
  }
}

std::vector<const Obstacle*> perceived_obstacles(const ScenarioSpec& spec, const WorldState& world) {
  std::vector<const Obstacle*> out;
  for (const auto& o : world.obstacles) {
    if (!o.visible) continue;
    if (spec.model.sensing_range > 0.0 &&
        (o.position - world.robot.position).norm() - o.radius > spec.model.sensing_range) {
      continue;
    }
    out.push_back(&o);
  }
  return out;
}

std::vector<RouteHypothesis> effective_routes(const std::vector<RouteHypothesis>& routes,
                                              const Vec2& goal) {
  if (!routes.empty()) return routes;
  return {RouteHypothesis{"goal", 1.0, {goal}}};
}

SceneModel build_scene_model(const ScenarioSpec& spec, const WorldState& world,
                             const ObservationLog& log) {
  const TimeGrid grid = spec.grid();
  const double dt = spec.dt;
  const double horizon_end = grid.end();
  const Vec2 origin = world.robot.position;
  const int now = world.time_step;
  const ModelParams& mp = spec.model;

  SceneModel scene;
  scene.joint.params = spec.interaction;
  scene.joint.dt = dt;

  // Environment: recent positions plus a constant-velocity continuation.
  const auto perceived = perceived_obstacles(spec, world);
  WorldState seen = world;
  seen.obstacles.clear();
  std::vector<TrajectorySample> env_means;
  for (const Obstacle* o : perceived) {
    seen.obstacles.push_back(*o);
    ObservationSet obs;
    obs.agent_id = "obstacle-" + std::to_string(o->id);
    const auto it = log.obstacles.find(o->id);
    if (it != log.obstacles.end()) {
      const auto& hist = it->second;
      const std::size_t first =
          hist.size() > static_cast<std::size_t>(mp.environment_history_steps)
              ? hist.size() - static_cast<std::size_t>(mp.environment_history_steps)
              : 0;
      for (std::size_t i = first; i < hist.size(); ++i) {
        obs.samples.push_back({(hist[i].first - now) * dt, hist[i].second, 1.0});
      }
    }
    if (obs.samples.empty() || obs.samples.back().time < 0.0) {
      obs.samples.push_back({0.0, o->position, 1.0});
    }
    ModeHypothesis cv;
    cv.label = "constant-velocity";
    for (double t = mp.via_interval; t < horizon_end - 1e-9; t += mp.via_interval) {
      cv.via.push_back({t, o->position + o->velocity * t});
    }
    cv.goal = o->position + o->velocity * horizon_end;
    auto fit = fit_agent(obs, {cv}, spec.environment_kernel, grid, origin, mp.goal_noise_scale,
                         1.0, no_adjust);
    env_means.push_back(mean_trajectory(fit.dist.modes.front().posterior, dt));
    scene.joint.environment.push_back(std::move(fit.dist));
  }
  scene.predictions = predict_constant_velocity(seen, grid);

  // Autonomy: the robot's own recent track, projected along each route.
  ObservationSet robot_obs;
  robot_obs.agent_id = "autonomy";
  for (int k = mp.history_steps - 1; k >= 0; --k) {
    const int step = now - k * mp.history_stride;
    if (step < 0 || step >= static_cast<int>(log.robot.size())) continue;
    robot_obs.samples.push_back({(step - now) * dt, log.robot[static_cast<std::size_t>(step)], 1.0});
  }
  if (robot_obs.samples.empty() || robot_obs.samples.back().time < 0.0) {
    robot_obs.samples.push_back({0.0, origin, 1.0});
  }
  const auto autonomy_routes = effective_routes(spec.autonomy_hypotheses, world.goal);
  std::vector<ModeHypothesis> autonomy_hyps;
  for (const auto& r : autonomy_routes) {
    autonomy_hyps.push_back(project_route(r, origin, mp, horizon_end));
  }
  // Route feasibility looks at the route itself from the robot's closest
  // point onwards, not at the merge path, so it only reacts to the route
  // being blocked.
  auto feasibility = [&](const MultimodalTrajectoryDistribution&, std::vector<double>& priors) {
    if (!mp.route_feasibility || env_means.empty()) return;
    std::vector<double> log_f(priors.size());
    double best = -kInfinity;
    for (std::size_t i = 0; i < priors.size(); ++i) {
      const auto& r = autonomy_routes[i];
      const double s0 = r.waypoints.size() > 1 ? project_onto(r.waypoints, origin) : 0.0;
      std::vector<Vec2> path = r.waypoints;
      if (path.size() == 1) path.insert(path.begin(), origin);
      TrajectorySample along;
      along.dt = dt;
      along.positions.resize(grid.steps, 2);
      for (int k = 0; k < grid.steps; ++k) {
        along.positions.row(k) =
            point_along(path, s0 + mp.route_speed * grid.time(k)).transpose();
      }
      log_f[i] = safety_coupling(along, env_means, mp.feasibility_strength, mp.feasibility_scale);
      best = std::max(best, log_f[i]);
    }
    for (std::size_t i = 0; i < priors.size(); ++i) priors[i] *= std::exp(log_f[i] - best);
  };
  auto autonomy = fit_agent(robot_obs, autonomy_hyps, spec.autonomy_kernel, grid, origin,
                            mp.goal_noise_scale, mp.autonomy_evidence_scale, feasibility);
  scene.joint.autonomy = std::move(autonomy.dist);
  scene.autonomy_degenerate = autonomy.degenerate;

  // Operator: anchored at the robot, with the latest delivered command
  // extrapolated backwards as evidence of where the operator is steering.
  // Older commands count for less via inflated observation noise. A late
  // command describes intent from where the robot was when it was issued, so
  // the modes are weighed in that frame.
  const auto op_routes = effective_routes(spec.operator_hypotheses, world.goal);
  auto operator_evidence = [&](const Vec2& at, double scale) {
    ObservationSet obs;
    obs.agent_id = "operator";
    if (log.latest) {
      obs.samples.push_back(
          {-mp.evidence_span, at - log.latest->noisy_command.velocity * mp.evidence_span, scale});
    }
    obs.samples.push_back({0.0, at, 1.0});
    return obs;
  };
  auto operator_hyps = [&](const Vec2& at) {
    std::vector<ModeHypothesis> hyps;
    for (const auto& r : op_routes) hyps.push_back(project_route(r, at, mp, horizon_end));
    return hyps;
  };
  double scale = 1.0;
  Vec2 issued_at = origin;
  if (log.latest) {
    const int issued = log.latest->original.issued_step;
    scale = staleness_noise_scale((now - issued) * dt, spec.staleness_tau);
    if (issued >= 0 && issued < static_cast<int>(log.robot.size())) {
      issued_at = log.robot[static_cast<std::size_t>(issued)];
    }
  }
  const WeighingFrame weighing{operator_evidence(issued_at, scale), operator_hyps(issued_at),
                               issued_at};
  auto op = fit_agent(operator_evidence(origin, scale), operator_hyps(origin),
                      spec.operator_kernel, grid, origin, mp.goal_noise_scale, 1.0, no_adjust,
                      &weighing);
  scene.joint.operator_dist = std::move(op.dist);
  scene.operator_degenerate = op.degenerate;
  return scene;
}

}  // namespace gsc
