#pragma once

// Independent reference implementations used to check the library. None of
// these call into the code they check: plain loops, long double, textbook
// formulas, Gauss-Jordan instead of Cholesky.

#include "gsc/simulation.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

using Real = long double;
using Matrix = std::vector<std::vector<Real>>;

inline Real se_kernel(const gsc::KernelParams& k, double a, double b) {
  const Real d = static_cast<Real>(a) - static_cast<Real>(b);
  return static_cast<Real>(k.signal_variance) *
         std::exp(-0.5L * d * d / (static_cast<Real>(k.length_scale) * k.length_scale));
}

inline Matrix gram(const gsc::ObservationSet& obs, const gsc::KernelParams& k) {
  const std::size_t n = obs.samples.size();
  Matrix K(n, std::vector<Real>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) K[i][j] = se_kernel(k, obs.samples[i].time, obs.samples[j].time);
    const Real s = obs.samples[i].noise_scale;
    K[i][i] += static_cast<Real>(k.noise_variance) * s * s;
  }
  return K;
}

/// Solves A X = B by Gauss-Jordan elimination with partial pivoting. Also
/// returns log|det A| through `log_det` when given.
inline Matrix solve(Matrix A, Matrix B, Real* log_det = nullptr) {
  const std::size_t n = A.size();
  const std::size_t m = B.empty() ? 0 : B[0].size();
  Real ld = 0.0L;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(A[r][c]) > std::fabs(A[p][c])) p = r;
    }
    std::swap(A[c], A[p]);
    std::swap(B[c], B[p]);
    const Real piv = A[c][c];
    ld += std::log(std::fabs(piv));
    for (std::size_t j = 0; j < n; ++j) A[c][j] /= piv;
    for (std::size_t j = 0; j < m; ++j) B[c][j] /= piv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const Real f = A[r][c];
      if (f == 0.0L) continue;
      for (std::size_t j = 0; j < n; ++j) A[r][j] -= f * A[c][j];
      for (std::size_t j = 0; j < m; ++j) B[r][j] -= f * B[c][j];
    }
  }
  if (log_det) *log_det = ld;
  return B;
}

struct DensePosterior {
  std::vector<Real> mean_x, mean_y, var;
};

/// Textbook GP regression: mean = k*ᵀ K⁻¹ y, var = k(t,t) − k*ᵀ K⁻¹ k*.
inline DensePosterior gp_posterior(const gsc::ObservationSet& obs, const gsc::KernelParams& k,
                                   const std::vector<double>& grid) {
  const std::size_t n = obs.samples.size();
  const std::size_t m = grid.size();
  Matrix rhs(n, std::vector<Real>(2 + m));
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i][0] = obs.samples[i].position.x();
    rhs[i][1] = obs.samples[i].position.y();
    for (std::size_t j = 0; j < m; ++j) rhs[i][2 + j] = se_kernel(k, obs.samples[i].time, grid[j]);
  }
  const Matrix sol = solve(gram(obs, k), rhs);
  DensePosterior out;
  for (std::size_t j = 0; j < m; ++j) {
    Real mx = 0.0L, my = 0.0L, q = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const Real ks = rhs[i][2 + j];
      mx += ks * sol[i][0];
      my += ks * sol[i][1];
      q += ks * sol[i][2 + j];
    }
    out.mean_x.push_back(mx);
    out.mean_y.push_back(my);
    out.var.push_back(se_kernel(k, grid[j], grid[j]) - q);
  }
  return out;
}

/// Sum over both axes of the GP log evidence log N(y; 0, K).
inline Real log_evidence(const gsc::ObservationSet& obs, const gsc::KernelParams& k) {
  const std::size_t n = obs.samples.size();
  Matrix y(n, std::vector<Real>(2));
  for (std::size_t i = 0; i < n; ++i) {
    y[i][0] = obs.samples[i].position.x();
    y[i][1] = obs.samples[i].position.y();
  }
  Real log_det = 0.0L;
  const Matrix a = solve(gram(obs, k), y, &log_det);
  Real quad = 0.0L;
  for (std::size_t i = 0; i < n; ++i) quad += y[i][0] * a[i][0] + y[i][1] * a[i][1];
  const Real two_pi = 2.0L * 3.141592653589793238462643383279502884L;
  return -0.5L * quad - log_det - static_cast<Real>(n) * std::log(two_pi);
}

/// Direct (non-log) mixture density, logged at the end.
inline Real mixture_log_density(const gsc::MultimodalTrajectoryDistribution& dist,
                                const gsc::TrajectorySample& traj) {
  const Real two_pi = 2.0L * 3.141592653589793238462643383279502884L;
  Real total = 0.0L;
  for (const auto& mode : dist.modes) {
    Real p = mode.weight;
    for (Eigen::Index t = 0; t < traj.positions.rows(); ++t) {
      for (int d = 0; d < 2; ++d) {
        const Real v = std::max<Real>(mode.posterior.variance(t, d), gsc::kVarianceFloor);
        const Real e = static_cast<Real>(traj.positions(t, d)) - mode.posterior.mean(t, d);
        p *= std::exp(-0.5L * e * e / v) / std::sqrt(two_pi * v);
      }
    }
    total += p;
  }
  return std::log(total);
}

/// Full joint score written out term by term.
inline Real joint_score(const gsc::JointModel& model, const gsc::TrajectorySample& op,
                        const gsc::TrajectorySample& au, const std::vector<gsc::TrajectorySample>& env) {
  Real s = oracle::mixture_log_density(model.operator_dist, op) + oracle::mixture_log_density(model.autonomy, au);
  for (std::size_t i = 0; i < env.size(); ++i) s += oracle::mixture_log_density(model.environment[i], env[i]);
  const auto& p = model.params;
  if (p.safety_enabled) {
    for (const auto& e : env) {
      for (Eigen::Index t = 0; t < au.positions.rows(); ++t) {
        const Real dx = static_cast<Real>(au.positions(t, 0)) - e.positions(t, 0);
        const Real dy = static_cast<Real>(au.positions(t, 1)) - e.positions(t, 1);
        const Real f = 1.0L - static_cast<Real>(p.safety_strength) *
                                  std::exp(-(dx * dx + dy * dy) /
                                           (2.0L * p.safety_scale * p.safety_scale));
        s += std::log(std::max<Real>(f, gsc::kCouplingFloor));
      }
    }
  }
  if (p.agreement_enabled) {
    for (Eigen::Index t = 0; t < au.positions.rows(); ++t) {
      const Real dx = static_cast<Real>(au.positions(t, 0)) - op.positions(t, 0);
      const Real dy = static_cast<Real>(au.positions(t, 1)) - op.positions(t, 1);
      s -= (dx * dx + dy * dy) / (2.0L * p.agreement_scale * p.agreement_scale);
    }
  }
  return s;
}

inline Real hypot2(const gsc::Vec2& a, const gsc::Vec2& b) {
  const Real dx = static_cast<Real>(a.x()) - b.x();
  const Real dy = static_cast<Real>(a.y()) - b.y();
  return std::sqrt(dx * dx + dy * dy);
}

/// Intended operator position at `step`: piecewise-linear in the script's
/// (step, position) waypoints, held constant outside them.
inline gsc::Vec2 intent(const gsc::OperatorScript& s, int step) {
  const auto& w = s.waypoints;
  if (w.empty()) return gsc::Vec2::Zero();
  if (step <= w.front().step) return w.front().position;
  if (step >= w.back().step) return w.back().position;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (step <= w[i + 1].step) {
      const int span = w[i + 1].step - w[i].step;
      const double u = span == 0 ? 1.0 : static_cast<double>(step - w[i].step) / span;
      return w[i].position + u * (w[i + 1].position - w[i].position);
    }
  }
  return w.back().position;
}

/// Single pass over the trace.
inline gsc::Metrics metrics(const gsc::Trace& trace, const gsc::ScenarioSpec& spec) {
  gsc::Metrics m;
  for (const auto& r : spec.world.regions) m.region_hits[r.name] = false;
  Real min_clear = std::numeric_limits<Real>::infinity();
  Real path = 0.0L, sq = 0.0L, accel = 0.0L;
  const gsc::TraceRecord* prev = nullptr;
  const gsc::TraceRecord* prev_live = nullptr;
  for (const auto& r : trace.records) {
    for (const auto& o : r.obstacles) {
      min_clear = std::min(min_clear, hypot2(r.robot, o.position) - r.robot_radius - o.radius);
    }
    if (prev) path += hypot2(r.robot, prev->robot);
    if (!m.steps_to_goal && hypot2(r.robot, spec.world.goal) <= spec.world.goal_radius) m.steps_to_goal = r.step;
    const Real d = hypot2(r.robot, intent(spec.operator_script, r.step));
    sq += d * d;
    for (const auto& reg : spec.world.regions) {
      const auto& a = reg.area;
      if (r.robot.x() >= a.min.x() && r.robot.x() <= a.max.x() && r.robot.y() >= a.min.y() &&
          r.robot.y() <= a.max.y()) {
        m.region_hits[reg.name] = true;
      }
    }
    if (!r.terminal) {
      if (prev_live) accel = std::max(accel, hypot2(r.u_s.velocity, prev_live->u_s.velocity) / spec.dt);
      prev_live = &r;
    }
    prev = &r;
  }
  m.min_clearance = static_cast<double>(min_clear);
  m.collision = min_clear < 0.0L;
  m.path_length = static_cast<double>(path);
  m.max_accel = static_cast<double>(accel);
  if (!trace.records.empty() && !spec.operator_script.waypoints.empty()) {
    m.agreement_rms = static_cast<double>(std::sqrt(sq / trace.records.size()));
  }
  return m;
}

}  // namespace oracle

namespace oracle {

struct Argmax {
  std::size_t index = 0;
  Real score = -std::numeric_limits<Real>::infinity();
};

/// Redraws the candidates exactly as map_joint does (k-th sample of every
/// agent's own stream) and ranks them with the independent scorer; the first
/// maximum wins.
inline Argmax exhaustive_argmax(const gsc::JointModel& model, std::size_t n, std::uint64_t seed) {
  const auto op = gsc::sample_trajectories(model.operator_dist, n, gsc::agent_stream_seed(seed, 0), model.dt);
  const auto au = gsc::sample_trajectories(model.autonomy, n, gsc::agent_stream_seed(seed, 1), model.dt);
  std::vector<std::vector<std::pair<gsc::TrajectorySample, std::size_t>>> env;
  for (std::size_t i = 0; i < model.environment.size(); ++i) {
    env.push_back(gsc::sample_trajectories(model.environment[i], n, gsc::agent_stream_seed(seed, 2 + i), model.dt));
  }
  Argmax best;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<gsc::TrajectorySample> e;
    for (const auto& stream : env) e.push_back(stream[k].first);
    const Real s = joint_score(model, op[k].first, au[k].first, e);
    if (k == 0 || s > best.score) {
      best.index = k;
      best.score = s;
    }
  }
  return best;
}

}  // namespace oracle
