#include "gsc/gp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace gsc {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Eigen::MatrixXd gram(const ObservationSet& obs, const KernelParams& kernel) {
  const auto n = static_cast<Eigen::Index>(obs.samples.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel(obs.samples[static_cast<std::size_t>(i)].time,
                              obs.samples[static_cast<std::size_t>(j)].time);
      k(i, j) = v;
      k(j, i) = v;
    }
    const double s = obs.samples[static_cast<std::size_t>(i)].noise_scale;
    k(i, i) += kernel.noise_variance * s * s;
  }
  return k;
}

Eigen::MatrixX2d targets(const ObservationSet& obs) {
  Eigen::MatrixX2d y(static_cast<Eigen::Index>(obs.samples.size()), 2);
  for (std::size_t i = 0; i < obs.samples.size(); ++i) {
    y.row(static_cast<Eigen::Index>(i)) = obs.samples[i].position.transpose();
  }
  return y;
}

// Cholesky of the Gram matrix; a relative jitter is added only when the plain
// factorization fails (zero noise with near-duplicate times).
Eigen::LLT<Eigen::MatrixXd> factorize(Eigen::MatrixXd k, const KernelParams& kernel) {
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  double jitter = 1e-12 * kernel.signal_variance;
  while (llt.info() != Eigen::Success && jitter < kernel.signal_variance) {
    k.diagonal().array() += jitter;
    llt.compute(k);
    jitter *= 10.0;
  }
  if (llt.info() != Eigen::Success) throw Error("singular-gram");
  return llt;
}


}  // namespace

void KernelParams::validate() const {
  if (!(length_scale > 0.0) || !(signal_variance > 0.0) || !(noise_variance >= 0.0) ||
      !std::isfinite(length_scale) || !std::isfinite(signal_variance) ||
      !std::isfinite(noise_variance)) {
    throw Error("bad-kernel");
  }
}

double KernelParams::operator()(double t1, double t2) const {
  const double d = t1 - t2;
  return signal_variance * std::exp(-0.5 * d * d / (length_scale * length_scale));
}

void ObservationSet::validate() const {
  if (samples.empty()) throw Error("no-observations", agent_id);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].time > samples[i - 1].time)) throw Error("bad-times", agent_id);
  }
  for (const auto& s : samples) {
    if (!(s.noise_scale >= 1.0)) throw Error("bad-times", "noise_scale below 1");
  }
}

void MultimodalTrajectoryDistribution::validate() const {
  if (modes.empty()) throw Error("bad-distribution", "no modes");
  double total = 0.0;
  const std::size_t n = modes.front().posterior.size();
  for (const auto& m : modes) {
    if (!(m.weight >= 0.0 && m.weight <= 1.0)) throw Error("bad-distribution", "weight range");
    if (m.posterior.size() != n) throw Error("grid-mismatch");
    total += m.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("bad-distribution", "weights do not sum to 1");
}

GPosterior fit_gp_posterior(const ObservationSet& obs, const KernelParams& kernel,
                            const std::vector<double>& grid) {
  obs.validate();
  kernel.validate();
  const auto llt = factorize(gram(obs, kernel), kernel);
  const Eigen::MatrixX2d alpha = llt.solve(targets(obs));

  const auto m = static_cast<Eigen::Index>(grid.size());
  const auto n = static_cast<Eigen::Index>(obs.samples.size());
  Eigen::MatrixXd cross(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      cross(i, j) = kernel(obs.samples[static_cast<std::size_t>(i)].time,
                           grid[static_cast<std::size_t>(j)]);
    }
  }
  const Eigen::MatrixXd v = llt.matrixL().solve(cross);

  GPosterior post;
  post.times = grid;
  post.mean = cross.transpose() * alpha;
  post.variance.resize(m, 2);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double var = std::max(0.0, kernel.signal_variance - v.col(j).squaredNorm());
    post.variance(j, 0) = var;
    post.variance(j, 1) = var;
  }
  return post;
}

double log_marginal_likelihood(const ObservationSet& obs, const KernelParams& kernel) {
  obs.validate();
  kernel.validate();
  const auto llt = factorize(gram(obs, kernel), kernel);
  const Eigen::MatrixX2d y = targets(obs);
  const Eigen::MatrixX2d z = llt.matrixL().solve(y);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(obs.samples.size());
  return -0.5 * z.squaredNorm() - log_det - n * kLog2Pi;
}

ObservationSet condition_on_goal(const ObservationSet& obs, const ModeHypothesis& hyp,
                                 double horizon_end, double goal_noise_scale) {
  if (!obs.samples.empty() && !(horizon_end > obs.last_time())) throw Error("goal-in-past");
  ObservationSet out = obs;
  out.samples.push_back({horizon_end, hyp.goal, goal_noise_scale});
  return out;
}

ObservationSet condition_on_hypothesis(const ObservationSet& obs, const ModeHypothesis& hyp,
                                       double horizon_end, double goal_noise_scale) {
  if (!obs.samples.empty() && !(horizon_end > obs.last_time())) throw Error("goal-in-past");
  ObservationSet out = obs;
  for (const auto& p : hyp.via) {
    const double last = out.samples.empty() ? -kInfinity : out.last_time();
    if (p.time > last && p.time < horizon_end) {
      out.samples.push_back({p.time, p.position, goal_noise_scale});
    }
  }
  out.samples.push_back({horizon_end, hyp.goal, goal_noise_scale});
  return out;
}

double conditional_log_likelihood(const ObservationSet& obs, const ModeHypothesis& hyp,
                                  const KernelParams& kernel, double horizon_end,
                                  double goal_noise_scale) {
  const ObservationSet joint = condition_on_hypothesis(obs, hyp, horizon_end, goal_noise_scale);
  ObservationSet pseudo;
  pseudo.agent_id = obs.agent_id;
  pseudo.samples.assign(joint.samples.begin() + static_cast<std::ptrdiff_t>(obs.samples.size()),
                        joint.samples.end());
  return log_marginal_likelihood(joint, kernel) - log_marginal_likelihood(pseudo, kernel);
}

ModeWeights mode_weights(const ObservationSet& obs, const std::vector<ModeHypothesis>& hypotheses,
                         const KernelParams& kernel, double horizon_end,
                         double goal_noise_scale) {
  if (hypotheses.empty()) throw Error("no-hypotheses");
  std::vector<double> log_w(hypotheses.size());
  double best = -kInfinity;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const double ll =
        conditional_log_likelihood(obs, hypotheses[i], kernel, horizon_end, goal_noise_scale);
    log_w[i] = std::log(hypotheses[i].prior_weight) + ll;
    if (std::isnan(log_w[i])) log_w[i] = -kInfinity;
    best = std::max(best, log_w[i]);
  }

  ModeWeights out;
  out.weights.resize(hypotheses.size());
  if (!std::isfinite(best)) {
    double total = 0.0;
    for (const auto& h : hypotheses) total += h.prior_weight;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
      out.weights[i] = hypotheses[i].prior_weight / total;
    }
    out.degenerate = true;
    return out;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    out.weights[i] = std::exp(log_w[i] - best);
    total += out.weights[i];
  }
  for (auto& w : out.weights) w /= total;
  return out;
}

std::vector<std::pair<TrajectorySample, std::size_t>> sample_trajectories(
    const MultimodalTrajectoryDistribution& dist, std::size_t n, std::uint64_t seed, double dt) {
  if (n < 1) throw Error("bad-count");
  dist.validate();
  boost::random::mt19937_64 rng(seed);
  boost::random::uniform_01<double> uniform;
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> cumulative(dist.modes.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < dist.modes.size(); ++k) {
    acc += dist.modes[k].weight;
    cumulative[k] = acc;
  }
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < dist.modes.size(); ++k) {
    if (dist.modes[k].weight > 0.0) last_positive = k;
  }

  std::vector<PathMatrix> stddev;
  stddev.reserve(dist.modes.size());
  for (const auto& m : dist.modes) stddev.push_back(m.posterior.variance.cwiseMax(0.0).cwiseSqrt());

  std::vector<std::pair<TrajectorySample, std::size_t>> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = uniform(rng) * acc;
    std::size_t mode = last_positive;
    for (std::size_t k = 0; k < cumulative.size(); ++k) {
      if (u < cumulative[k] && dist.modes[k].weight > 0.0) {
        mode = k;
        break;
      }
    }
    const PathMatrix& mean = dist.modes[mode].posterior.mean;
    const PathMatrix& sd = stddev[mode];
    TrajectorySample traj;
    traj.dt = dt;
    traj.positions.resize(mean.rows(), 2);
    for (Eigen::Index t = 0; t < mean.rows(); ++t) {
      traj.positions(t, 0) = mean(t, 0) + sd(t, 0) * normal(rng);
      traj.positions(t, 1) = mean(t, 1) + sd(t, 1) * normal(rng);
    }
    out.emplace_back(std::move(traj), mode);
  }
  return out;
}

MixtureDensity::MixtureDensity(const MultimodalTrajectoryDistribution& dist) {
  if (dist.modes.empty()) throw Error("bad-distribution", "no modes");
  rows_ = static_cast<Eigen::Index>(dist.modes.front().posterior.size());
  for (const auto& mode : dist.modes) {
    if (static_cast<Eigen::Index>(mode.posterior.size()) != rows_) throw Error("grid-mismatch");
    if (mode.weight <= 0.0) continue;
    Term term;
    const PathMatrix var = mode.posterior.variance.cwiseMax(kVarianceFloor);
    term.log_norm = std::log(mode.weight) -
                    0.5 * (kLog2Pi * static_cast<double>(var.size()) + var.array().log().sum());
    term.mean = mode.posterior.mean;
    term.inv_var = var.cwiseInverse();
    terms_.push_back(std::move(term));
  }
}

double MixtureDensity::operator()(const TrajectorySample& traj) const {
  if (traj.positions.rows() != rows_) throw Error("grid-mismatch");
  if (terms_.empty()) return -kInfinity;
  double best = -kInfinity;
  double lp_stack[8];
  std::vector<double> lp_heap;
  double* lp = lp_stack;
  if (terms_.size() > 8) {
    lp_heap.resize(terms_.size());
    lp = lp_heap.data();
  }
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Term& t = terms_[i];
    lp[i] = t.log_norm -
            0.5 * ((traj.positions - t.mean).array().square() * t.inv_var.array()).sum();
    best = std::max(best, lp[i]);
  }
  if (!std::isfinite(best)) return best;
  double sum = 0.0;
  for (std::size_t i = 0; i < terms_.size(); ++i) sum += std::exp(lp[i] - best);
  return best + std::log(sum);
}

double mixture_log_density(const MultimodalTrajectoryDistribution& dist,
                           const TrajectorySample& traj) {
  return MixtureDensity(dist)(traj);
}

std::pair<std::size_t, const GPosterior*> most_likely_mode(
    const MultimodalTrajectoryDistribution& dist) {
  if (dist.modes.empty()) throw Error("bad-distribution", "no modes");
  std::size_t best = 0;
  for (std::size_t k = 1; k < dist.modes.size(); ++k) {
    if (dist.modes[k].weight > dist.modes[best].weight) best = k;
  }
  return {best, &dist.modes[best].posterior};
}

TrajectorySample mean_trajectory(const GPosterior& posterior, double dt) {
  TrajectorySample t;
  t.positions = posterior.mean;
  t.dt = dt;
  return t;
}

}  // namespace gsc
