#include "gsc/channel.hpp"

#include <cmath>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace gsc {

void ChannelConfig::validate() const {
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
    throw Error("out-of-range", "drop_probability must lie in [0, 1]");
  }
  if (lag_steps < 0) throw Error("out-of-range", "lag_steps must be >= 0");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw Error("out-of-range", "noise_std must be >= 0");
  }
}

std::optional<Delivery> channel_transmit(const TimedInput& input, const ChannelConfig& cfg) {
  boost::random::mt19937_64 rng(derive_seed(cfg.seed, 0x6368616eULL,
                                  static_cast<std::uint64_t>(static_cast<std::int64_t>(input.issued_step))));
  boost::random::uniform_01<double> uniform;
  if (uniform(rng) < cfg.drop_probability) return std::nullopt;

  Delivery d;
  d.delivered_step = input.issued_step + cfg.lag_steps;
  d.original = input;
  d.noisy_command = input.command;
  if (cfg.noise_std > 0.0) {
    boost::random::normal_distribution<double> normal(0.0, cfg.noise_std);
    const double nx = normal(rng);
    const double ny = normal(rng);
    d.noisy_command.velocity += Vec2(nx, ny);
  }
  return d;
}

std::vector<Delivery> channel_apply(const std::vector<TimedInput>& stream, const ChannelConfig& cfg) {
  cfg.validate();
  std::vector<Delivery> out;
  out.reserve(stream.size());
  for (const auto& input : stream) {
    if (auto d = channel_transmit(input, cfg)) out.push_back(*d);
  }
  return out;
}

double staleness_weight(double age, double tau) {
  if (!(tau > 0.0)) throw Error("bad-tau");
  return 1.0 / (1.0 + std::max(age, 0.0) / tau);
}

double staleness_noise_scale(double age, double tau) { return 1.0 / staleness_weight(age, tau); }

}  // namespace gsc
