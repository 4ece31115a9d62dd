#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsc {

using Vec2 = Eigen::Vector2d;

/// Row-per-timestep planar path, x in column 0 and y in column 1.
using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

inline constexpr double kDefaultDt = 0.1;
inline constexpr int kDefaultHorizonSteps = 40;
inline constexpr double kDefaultSpeedLimit = 2.0;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Domain error carrying a stable machine-readable code ("grid-mismatch",
/// "bad-gains", ...). The code is what tests and the CLI match on.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Prediction horizon relative to "now": step k sits at (k + 1) * dt.
struct TimeGrid {
  double dt = kDefaultDt;
  int steps = kDefaultHorizonSteps;

  double time(int k) const { return dt * static_cast<double>(k + 1); }
  double end() const { return time(steps - 1); }
  std::vector<double> times() const {
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) out[static_cast<std::size_t>(k)] = time(k);
    return out;
  }
  bool operator==(const TimeGrid&) const = default;
};

/// Scales v down to magnitude vmax if it is longer; direction is preserved.
inline Vec2 clamp_speed(const Vec2& v, double vmax) {
  const double n = v.norm();
  if (n > vmax && n > 0.0) return v * (vmax / n);
  return v;
}

/// Planar velocity command sent to the platform (u^h, u^R or the shared u^s).
struct Command {
  Vec2 velocity = Vec2::Zero();

  Command() = default;
  explicit Command(const Vec2& v) : velocity(v) {}
  Command(double vx, double vy) : velocity(vx, vy) {}

  static Command zero() { return Command{}; }
  static Command clamped(const Vec2& v, double vmax) { return Command{clamp_speed(v, vmax)}; }

  bool finite() const { return velocity.allFinite(); }
  bool operator==(const Command& o) const { return velocity == o.velocity; }
};

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

}  // namespace gsc
