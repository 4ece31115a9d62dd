#pragma once

// Gaussian-process regression over planar trajectories and the multimodal
// (goal-conditioned) mixtures built from it. x and y are modelled as
// independent GPs sharing one squared-exponential kernel.

#include "gsc/core.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gsc {

struct KernelParams {
  double length_scale = 1.0;     // seconds
  double signal_variance = 1.0;  // m^2
  double noise_variance = 1e-4;  // m^2

  void validate() const;
  double operator()(double t1, double t2) const;
  bool operator==(const KernelParams&) const = default;
};

struct Observation {
  double time = 0.0;
  Vec2 position = Vec2::Zero();
  double noise_scale = 1.0;  // 1 for fresh data, > 1 for stale data
};

struct ObservationSet {
  std::string agent_id;
  std::vector<Observation> samples;

  /// Throws "no-observations" or "bad-times".
  void validate() const;
  double last_time() const { return samples.back().time; }
};

struct TimedPoint {
  double time = 0.0;
  Vec2 position = Vec2::Zero();
};

/// One route hypothesis for an agent. The goal is placed at the caller's
/// horizon end; `via` holds optional earlier pseudo-observations that bend the
/// mode along a route.
struct ModeHypothesis {
  Vec2 goal = Vec2::Zero();
  double prior_weight = 1.0;
  std::string label;
  std::vector<TimedPoint> via;
};

struct GPosterior {
  std::vector<double> times;
  PathMatrix mean;      // one row per grid time
  PathMatrix variance;  // per-axis marginal variance

  std::size_t size() const { return times.size(); }
};

struct TrajectorySample {
  PathMatrix positions;
  double dt = kDefaultDt;

  std::size_t size() const { return static_cast<std::size_t>(positions.rows()); }
};

struct MixtureMode {
  double weight = 1.0;
  GPosterior posterior;
  ModeHypothesis hypothesis;
};

struct MultimodalTrajectoryDistribution {
  std::vector<MixtureMode> modes;

  /// Throws "bad-distribution" if weights are not a probability vector or the
  /// modes do not share one grid.
  void validate() const;
  std::size_t grid_size() const { return modes.front().posterior.size(); }
};

struct ModeWeights {
  std::vector<double> weights;
  bool degenerate = false;  // every likelihood underflowed; priors returned
};

/// Per-step variance floor used by densities so zero-variance (deterministic)
/// posteriors still score finitely.
inline constexpr double kVarianceFloor = 1e-12;

GPosterior fit_gp_posterior(const ObservationSet& obs, const KernelParams& kernel,
                            const std::vector<double>& grid);

/// GP log marginal likelihood of the observation positions (both axes).
double log_marginal_likelihood(const ObservationSet& obs, const KernelParams& kernel);

ObservationSet condition_on_goal(const ObservationSet& obs, const ModeHypothesis& hyp,
                                 double horizon_end, double goal_noise_scale = 1.0);

/// Appends the hypothesis' via points (those strictly before horizon_end) and
/// then its goal at horizon_end. Equivalent to condition_on_goal when `via` is
/// empty.
ObservationSet condition_on_hypothesis(const ObservationSet& obs, const ModeHypothesis& hyp,
                                       double horizon_end, double goal_noise_scale = 1.0);

/// log p(obs | hypothesis pseudo-observations) under the GP prior.
double conditional_log_likelihood(const ObservationSet& obs, const ModeHypothesis& hyp,
                                  const KernelParams& kernel, double horizon_end,
                                  double goal_noise_scale = 1.0);

ModeWeights mode_weights(const ObservationSet& obs, const std::vector<ModeHypothesis>& hypotheses,
                         const KernelParams& kernel, double horizon_end,
                         double goal_noise_scale = 1.0);

std::vector<std::pair<TrajectorySample, std::size_t>> sample_trajectories(
    const MultimodalTrajectoryDistribution& dist, std::size_t n, std::uint64_t seed,
    double dt = kDefaultDt);

double mixture_log_density(const MultimodalTrajectoryDistribution& dist,
                           const TrajectorySample& traj);

/// mixture_log_density with the per-mode constants (log normalisers, inverse
/// variances) computed once; evaluates bit-identically to the free function.
class MixtureDensity {
 public:
  explicit MixtureDensity(const MultimodalTrajectoryDistribution& dist);
  double operator()(const TrajectorySample& traj) const;

 private:
  struct Term {
    double log_norm = 0.0;  // log weight + Gaussian normalisers
    PathMatrix mean;
    PathMatrix inv_var;
  };
  std::vector<Term> terms_;
  Eigen::Index rows_ = 0;
};

std::pair<std::size_t, const GPosterior*> most_likely_mode(
    const MultimodalTrajectoryDistribution& dist);

TrajectorySample mean_trajectory(const GPosterior& posterior, double dt = kDefaultDt);

}  // namespace gsc
