#pragma once

// Degraded operator-input channel (drops, fixed lag, additive noise) and the
// staleness-to-confidence mapping shared by both controller families.

#include "gsc/core.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gsc {

struct ChannelConfig {
  double drop_probability = 0.0;
  int lag_steps = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  /// Throws "out-of-range".
  void validate() const;
  bool operator==(const ChannelConfig&) const = default;
};

struct TimedInput {
  int issued_step = 0;
  Command command;
};

struct Delivery {
  int delivered_step = 0;
  TimedInput original;
  Command noisy_command;
};

/// Fate of a single input. Randomness is keyed by (seed, issued_step) so the
/// outcome for input k does not depend on the rest of the stream.
std::optional<Delivery> channel_transmit(const TimedInput& input, const ChannelConfig& cfg);

std::vector<Delivery> channel_apply(const std::vector<TimedInput>& stream, const ChannelConfig& cfg);

/// w = 1 / (1 + age / tau). Throws "bad-tau" for tau <= 0.
double staleness_weight(double age, double tau);

/// Observation noise inflation matching staleness_weight: 1 / w.
double staleness_noise_scale(double age, double tau);

}  // namespace gsc
