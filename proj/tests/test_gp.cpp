#include "doctest.h"

#include "oracles.hpp"
#include "test_support.hpp"

#include "gsc/gp.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cmath>

using namespace gsc;

namespace {

ObservationSet points(std::initializer_list<Observation> s) {
  ObservationSet o;
  o.agent_id = "test";
  o.samples = s;
  return o;
}

ModeHypothesis goal(double x, double y, double prior = 1.0, const std::string& label = "") {
  ModeHypothesis h;
  h.goal = Vec2(x, y);
  h.prior_weight = prior;
  h.label = label;
  return h;
}

// Observations moving from the origin along `heading` at 1 m/s, sampled at 0, 0.1, 0.2 s.
ObservationSet heading_obs(const Vec2& heading) {
  const Vec2 d = heading.normalized();
  return points({{0.0, Vec2::Zero(), 1.0}, {0.1, 0.1 * d, 1.0}, {0.2, 0.2 * d, 1.0}});
}

// Weights computed from scratch: prior × exp(evidence(obs ∪ goal) − evidence(goal)).
std::vector<double> oracle_weights(const ObservationSet& obs, const std::vector<ModeHypothesis>& hyps,
                                   const KernelParams& k, double horizon_end) {
  std::vector<long double> lw;
  for (const auto& h : hyps) {
    ObservationSet joint = obs;
    joint.samples.push_back({horizon_end, h.goal, 1.0});
    ObservationSet pseudo;
    pseudo.samples.push_back({horizon_end, h.goal, 1.0});
    lw.push_back(std::log(static_cast<long double>(h.prior_weight)) + oracle::log_evidence(joint, k) -
                 oracle::log_evidence(pseudo, k));
  }
  long double best = lw[0];
  for (auto v : lw) best = std::max(best, v);
  long double total = 0.0L;
  for (auto& v : lw) total += (v = std::exp(v - best));
  std::vector<double> out;
  for (auto v : lw) out.push_back(static_cast<double>(v / total));
  return out;
}

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("noise-free fit interpolates a single observation") {
  const KernelParams k{1.0, 1.0, 0.0};
  const auto post = fit_gp_posterior(points({{0.0, Vec2(0.0, 0.0), 1.0}}), k, {0.0, 0.5});
  CHECK(std::abs(post.mean(0, 0)) < 1e-9);
  CHECK(std::abs(post.mean(0, 1)) < 1e-9);
  CHECK(post.variance(0, 0) < 1e-9);

  const auto shifted = fit_gp_posterior(points({{0.3, Vec2(1.5, -2.0), 1.0}}), k, {0.3});
  CHECK(shifted.mean(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(shifted.mean(0, 1) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("observations mirrored about the y axis give a mirrored mean") {
  const KernelParams k{0.7, 2.0, 1e-3};
  // x(t) is odd in t, y(t) even: the posterior mean must keep that symmetry.
  const auto obs = points({{-1.0, Vec2(-2.0, 1.0), 1.0}, {0.0, Vec2(0.0, 0.4), 1.0}, {1.0, Vec2(2.0, 1.0), 1.0}});
  const std::vector<double> grid{-0.75, -0.3, 0.3, 0.75};
  const auto post = fit_gp_posterior(obs, k, grid);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(post.mean(j, 0) + post.mean(3 - j, 0)) < 1e-9);
    CHECK(std::abs(post.mean(j, 1) - post.mean(3 - j, 1)) < 1e-9);
    CHECK(std::abs(post.variance(j, 0) - post.variance(3 - j, 0)) < 1e-9);
  }
}

TEST_CASE("posterior matches the dense textbook solve") {
  const KernelParams k{0.8, 2.5, 0.05};
  const auto obs = points({{0.0, Vec2(0.0, 0.0), 1.0}, {0.4, Vec2(0.7, 0.2), 2.0}, {0.9, Vec2(1.1, 0.9), 1.0}});
  const std::vector<double> grid{0.1, 0.5, 1.0, 1.5, 2.0};
  const auto post = fit_gp_posterior(obs, k, grid);
  const auto ref = oracle::gp_posterior(obs, k, grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    CHECK(std::abs(post.mean(r, 0) - static_cast<double>(ref.mean_x[j])) < 1e-8);
    CHECK(std::abs(post.mean(r, 1) - static_cast<double>(ref.mean_y[j])) < 1e-8);
    CHECK(std::abs(post.variance(r, 0) - static_cast<double>(ref.var[j])) < 1e-8);
    CHECK(post.variance(r, 0) == post.variance(r, 1));
  }
  CHECK(std::abs(log_marginal_likelihood(obs, k) - static_cast<double>(oracle::log_evidence(obs, k))) < 1e-8);
}

TEST_CASE("dense oracle agreement over random observation sets") {
  boost::random::mt19937_64 rng(11);
  boost::random::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 25; ++trial) {
    const KernelParams k{0.3 + std::abs(u(rng)) / 2.0, 0.5 + std::abs(u(rng)), 1e-3 + std::abs(u(rng)) / 30.0};
    ObservationSet obs;
    double t = 0.0;
    const int n = 2 + trial % 6;
    for (int i = 0; i < n; ++i) {
      t += 0.05 + std::abs(u(rng)) / 6.0;
      obs.samples.push_back({t, Vec2(u(rng), u(rng)), 1.0 + std::abs(u(rng))});
    }
    std::vector<double> grid;
    for (int j = 0; j < 8; ++j) grid.push_back(0.25 * j);
    const auto post = fit_gp_posterior(obs, k, grid);
    const auto ref = oracle::gp_posterior(obs, k, grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      REQUIRE(std::abs(post.mean(r, 0) - static_cast<double>(ref.mean_x[j])) < 1e-8);
      REQUIRE(std::abs(post.mean(r, 1) - static_cast<double>(ref.mean_y[j])) < 1e-8);
      REQUIRE(std::abs(post.variance(r, 0) - std::max(0.0, static_cast<double>(ref.var[j]))) < 1e-8);
    }
    REQUIRE(std::abs(log_marginal_likelihood(obs, k) - static_cast<double>(oracle::log_evidence(obs, k))) <
            1e-8 * (1.0 + std::abs(static_cast<double>(oracle::log_evidence(obs, k)))));
  }
}

TEST_CASE("a per-sample noise scale s acts as noise variance times s squared") {
  const KernelParams k{1.0, 1.0, 0.02};
  const KernelParams k4{1.0, 1.0, 0.02 * 9.0};
  const auto scaled = points({{0.0, Vec2(0.0, 1.0), 3.0}, {0.5, Vec2(1.0, 0.0), 3.0}});
  const auto plain = points({{0.0, Vec2(0.0, 1.0), 1.0}, {0.5, Vec2(1.0, 0.0), 1.0}});
  const std::vector<double> grid{0.2, 0.8};
  const auto a = fit_gp_posterior(scaled, k, grid);
  const auto b = fit_gp_posterior(plain, k4, grid);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("posterior variance stays within [0, signal variance]") {
  const KernelParams k{0.5, 3.0, 1e-4};
  const auto obs = heading_obs(Vec2(1.0, 1.0));
  std::vector<double> grid;
  for (int j = 0; j < 40; ++j) grid.push_back(0.1 * j);
  const auto post = fit_gp_posterior(obs, k, grid);
  CHECK(post.variance.minCoeff() >= 0.0);
  CHECK(post.variance.maxCoeff() <= k.signal_variance);
}

TEST_CASE("fit rejects empty and unordered observations") {
  const KernelParams k;
  ObservationSet empty;
  CHECK_THROWS_WITH_AS(fit_gp_posterior(empty, k, {0.1}), doctest::Contains("no-observations"), Error);
  const auto unordered = points({{0.2, Vec2::Zero(), 1.0}, {0.1, Vec2::Zero(), 1.0}});
  try {
    fit_gp_posterior(unordered, k, {0.1});
    FAIL("expected bad-times");
  } catch (const Error& e) {
    CHECK(e.code() == "bad-times");
  }
  const auto repeated = points({{0.1, Vec2::Zero(), 1.0}, {0.1, Vec2::Zero(), 1.0}});
  CHECK_THROWS_AS(fit_gp_posterior(repeated, k, {0.1}), Error);
}

TEST_CASE("condition_on_goal appends the goal at the horizon end") {
  const auto obs = points({{0.0, Vec2::Zero(), 1.0}, {0.1, Vec2(0.1, 0.0), 1.0}});
  const auto out = condition_on_goal(obs, goal(3.0, 1.0), 4.0);
  REQUIRE(out.samples.size() == 3);
  CHECK(out.samples.back().time == 4.0);
  CHECK(out.samples.back().position == Vec2(3.0, 1.0));

  try {
    condition_on_goal(obs, goal(3.0, 1.0), 0.1);
    FAIL("expected goal-in-past");
  } catch (const Error& e) {
    CHECK(e.code() == "goal-in-past");
  }
}

TEST_CASE("conditioning on the last observed position keeps the mean there") {
  const KernelParams k{1.0, 4.0, 1e-4};
  const auto obs = points({{0.0, Vec2(1.0, 2.0), 1.0}, {0.1, Vec2(1.0, 2.0), 1.0}});
  const auto cond = condition_on_goal(obs, goal(1.0, 2.0), 4.0);
  const auto post = fit_gp_posterior(cond, k, {4.0});
  CHECK(post.mean(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(post.mean(0, 1) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("different goals pull the horizon-end mean apart") {
  const KernelParams k{1.0, 4.0, 1e-2};
  const auto obs = heading_obs(Vec2(1.0, 0.0));
  const double end = 4.0;
  const auto ca = condition_on_goal(obs, goal(4.0, 2.0), end);
  const auto cb = condition_on_goal(obs, goal(4.0, -2.0), end);
  const auto pa = oracle::gp_posterior(ca, k, {end});
  const auto pb = oracle::gp_posterior(cb, k, {end});
  const double sep = std::hypot(static_cast<double>(pa.mean_x[0] - pb.mean_x[0]),
                                static_cast<double>(pa.mean_y[0] - pb.mean_y[0]));
  CHECK(sep >= 0.5 * 4.0);
  const auto fa = fit_gp_posterior(ca, k, {end});
  CHECK(std::abs(fa.mean(0, 1) - static_cast<double>(pa.mean_y[0])) < 1e-8);
}

TEST_CASE("mode weights") {
  const KernelParams k{1.0, 4.0, 1e-3};
  const double end = 4.0;

  SUBCASE("a single hypothesis gets all the weight") {
    const auto w = mode_weights(heading_obs(Vec2(1.0, 0.3)), {goal(3.0, 3.0)}, k, end);
    REQUIRE(w.weights.size() == 1);
    CHECK(w.weights[0] == 1.0);
    CHECK_FALSE(w.degenerate);
  }
  SUBCASE("goals mirrored about the heading split evenly") {
    const auto w = mode_weights(heading_obs(Vec2(1.0, 0.0)), {goal(4.0, 2.0), goal(4.0, -2.0)}, k, end);
    CHECK(w.weights[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(w.weights[1] == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("heading toward A favours A with the evidence-ratio values") {
    const auto obs = heading_obs(Vec2(2.0, 1.0));
    const std::vector<ModeHypothesis> hyps{goal(4.0, 2.0, 0.5, "A"), goal(4.0, -2.0, 0.5, "B")};
    const auto w = mode_weights(obs, hyps, k, end);
    const auto ref = oracle_weights(obs, hyps, k, end);
    CHECK(w.weights[0] > w.weights[1]);
    CHECK(std::abs(w.weights[0] - ref[0]) < 1e-9);
    CHECK(std::abs(w.weights[1] - ref[1]) < 1e-9);

    MultimodalTrajectoryDistribution d;
    std::vector<double> grid{end};
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      d.modes.push_back({w.weights[i], fit_gp_posterior(condition_on_goal(obs, hyps[i], end), k, grid), hyps[i]});
    }
    CHECK(most_likely_mode(d).first == 0);
  }
  SUBCASE("priors are respected") {
    const auto obs = heading_obs(Vec2(1.0, 0.0));
    const std::vector<ModeHypothesis> hyps{goal(4.0, 2.0, 0.2), goal(4.0, -2.0, 0.8)};
    const auto w = mode_weights(obs, hyps, k, end);
    CHECK(w.weights[0] == doctest::Approx(0.2).epsilon(1e-6));
    const auto ref = oracle_weights(obs, hyps, k, end);
    CHECK(std::abs(w.weights[1] - ref[1]) < 1e-9);
  }
  SUBCASE("underflowing likelihoods fall back to the priors") {
    const auto obs = points({{0.0, Vec2(1e200, 1e200), 1.0}, {0.1, Vec2(-1e200, 1e200), 1.0}});
    const auto w = mode_weights(obs, {goal(0.0, 0.0, 1.0), goal(1.0, 0.0, 3.0)}, k, end);
    CHECK(w.degenerate);
    CHECK(w.weights[0] == doctest::Approx(0.25));
    CHECK(w.weights[1] == doctest::Approx(0.75));
  }
  SUBCASE("no hypotheses") {
    CHECK_THROWS_WITH_AS(mode_weights(heading_obs(Vec2(1.0, 0.0)), {}, k, end),
                         doctest::Contains("no-hypotheses"), Error);
  }
}

TEST_CASE("most likely mode picks the heaviest, first on ties") {
  const PathMatrix m = testing::line(Vec2::Zero(), Vec2(1.0, 0.0), 4);
  CHECK(most_likely_mode(testing::mixture({m, m}, {0.2, 0.8}, 0.1)).first == 1);
  CHECK(most_likely_mode(testing::mixture({m, m}, {0.5, 0.5}, 0.1)).first == 0);
  CHECK(most_likely_mode(testing::mixture({m, m, m}, {0.3, 0.4, 0.3}, 0.1)).first == 1);
}

TEST_CASE("sampling") {
  const PathMatrix a = testing::line(Vec2::Zero(), Vec2(2.0, 1.0), 10);
  const PathMatrix b = testing::line(Vec2::Zero(), Vec2(2.0, -1.0), 10);

  SUBCASE("zero variance returns the mean") {
    const auto samples = sample_trajectories(testing::mixture({a}, {1.0}, 0.0), 3, 5);
    REQUIRE(samples.size() == 3);
    for (const auto& [s, mode] : samples) {
      CHECK(mode == 0);
      CHECK(s.positions == a);
    }
  }
  SUBCASE("same seed, same samples") {
    const auto d = testing::mixture({a, b}, {0.6, 0.4}, 0.2);
    const auto s1 = sample_trajectories(d, 50, 42);
    const auto s2 = sample_trajectories(d, 50, 42);
    const auto s3 = sample_trajectories(d, 50, 43);
    bool differs = false;
    for (std::size_t i = 0; i < s1.size(); ++i) {
      CHECK(s1[i].second == s2[i].second);
      CHECK(s1[i].first.positions == s2[i].first.positions);
      differs = differs || s1[i].first.positions != s3[i].first.positions;
    }
    CHECK(differs);
  }
  SUBCASE("mode frequencies follow the weights") {
    const auto d = testing::mixture({a, b}, {0.7, 0.3}, 0.0);
    const auto s = sample_trajectories(d, 100000, 2024);
    std::size_t first = 0;
    for (const auto& p : s) first += p.second == 0 ? 1 : 0;
    CHECK(std::abs(static_cast<double>(first) / 1e5 - 0.7) <= 0.01);
  }
  SUBCASE("zero-weight modes are never drawn") {
    const auto d = testing::mixture({a, b}, {1.0, 0.0}, 0.0);
    for (const auto& p : sample_trajectories(d, 1000, 3)) CHECK(p.second == 0);
  }
  SUBCASE("bad count") {
    CHECK_THROWS_AS(sample_trajectories(testing::mixture({a}, {1.0}, 0.1), 0, 1), Error);
  }
}

TEST_CASE("mixture density") {
  const PathMatrix a = testing::line(Vec2::Zero(), Vec2(2.0, 1.0), 6);
  const PathMatrix b = testing::line(Vec2::Zero(), Vec2(2.0, -1.0), 6);
  const PathMatrix c = testing::line(Vec2::Zero(), Vec2(1.0, 0.0), 6);

  SUBCASE("at the mean of a single mode it is the sum of normalisers") {
    const double var = 0.3;
    const auto d = testing::mixture({a}, {1.0}, var);
    const double expected = -0.5 * 12.0 * std::log(2.0 * M_PI * var);
    CHECK(mixture_log_density(d, testing::traj(a)) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("two identical half-weight modes collapse to one") {
    const auto one = testing::mixture({a}, {1.0}, 0.2);
    const auto two = testing::mixture({a, a}, {0.5, 0.5}, 0.2);
    const auto t = testing::traj(b);
    CHECK(mixture_log_density(two, t) == doctest::Approx(mixture_log_density(one, t)).epsilon(1e-12));
  }
  SUBCASE("mode order does not matter") {
    const auto d1 = testing::mixture({a, b, c}, {0.2, 0.5, 0.3}, 0.4);
    const auto d2 = testing::mixture({c, a, b}, {0.3, 0.2, 0.5}, 0.4);
    const auto t = testing::traj(0.5 * (a + c));
    CHECK(mixture_log_density(d1, t) == doctest::Approx(mixture_log_density(d2, t)).epsilon(1e-12));
  }
  SUBCASE("random trajectories match the direct evaluation") {
    boost::random::mt19937_64 rng(99);
    boost::random::uniform_real_distribution<double> u(-0.8, 0.8);
    auto d = testing::mixture({a, b, c}, {0.25, 0.45, 0.30}, 0.5);
    for (auto& m : d.modes) {
      for (Eigen::Index t = 0; t < m.posterior.variance.rows(); ++t) {
        m.posterior.variance(t, 0) = 0.2 + 0.05 * static_cast<double>(t);
        m.posterior.variance(t, 1) = 0.6 - 0.05 * static_cast<double>(t);
      }
    }
    for (int trial = 0; trial < 100; ++trial) {
      PathMatrix p = (trial % 3 == 0 ? a : trial % 3 == 1 ? b : c);
      for (Eigen::Index t = 0; t < p.rows(); ++t) p.row(t) += Eigen::RowVector2d(u(rng), u(rng));
      const double got = mixture_log_density(d, testing::traj(p));
      const double want = static_cast<double>(oracle::mixture_log_density(d, testing::traj(p)));
      REQUIRE(std::abs(got - want) <= 1e-9 * std::abs(want));
      REQUIRE(MixtureDensity(d)(testing::traj(p)) == got);
    }
  }
  SUBCASE("grid mismatch") {
    const auto d = testing::mixture({a}, {1.0}, 0.1);
    CHECK_THROWS_WITH_AS(mixture_log_density(d, testing::traj(a.topRows(3))), doctest::Contains("grid-mismatch"),
                         Error);
  }
}

}  // TEST_SUITE
