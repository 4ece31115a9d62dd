#pragma once

// Batch execution behind the gsc_bench CLI. Everything here is callable from
// tests; the CLI only parses flags and maps errors to exit codes.

#include "gsc/simulation.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gsc {

struct RunJob {
  ScenarioSpec spec;
  ControllerConfig controller;
  std::uint64_t seed = 0;
};

/// Runs every job on up to `threads` workers (0 = hardware concurrency).
/// Results come back in job order whatever the thread count.
std::vector<RunResult> run_batch(const std::vector<RunJob>& jobs, unsigned threads = 0);

/// Per-controller (and, for sweeps, per-parameter-value) summary. Every mean
/// is a plain sum over runs in seed order divided by the run count.
struct Aggregate {
  std::string scenario;
  std::string controller;
  std::string parameter;  // empty for compare rows
  double value = 0.0;
  std::size_t runs = 0;
  double collision_rate = 0.0;
  double goal_rate = 0.0;
  double mean_path_length = 0.0;
  double mean_agreement_rms = 0.0;
  double mean_max_accel = 0.0;
  double median_max_accel = 0.0;
  std::map<std::string, double> region_hit_rate;
};

Aggregate aggregate(const std::vector<Metrics>& runs);

std::string compare_csv(const std::vector<Aggregate>& rows);
std::string sweep_csv(const std::vector<Aggregate>& rows);

/// "0..49" (inclusive), "7" or "1,4,9". Throws "bad-seeds", including for an
/// empty range.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

/// Sets one channel degradation knob: drop (probability), lag (steps, must be
/// integral) or noise (std). Throws "unknown-parameter" or "out-of-range".
void apply_channel_parameter(ScenarioSpec& spec, const std::string& parameter, double value);

struct RunReport {
  std::string scenario;
  std::string controller;
  std::uint64_t seed = 0;
  Metrics metrics;
  std::string trace_path;
  double wall_time = 0.0;  // seconds; informational, never written to outputs
};

/// Runs once and writes trace.jsonl, metrics.json and rollout.svg to out_dir.
RunReport cmd_run(const std::string& scenario, const std::string& controller, std::uint64_t seed,
                  const std::string& out_dir);

/// Returns the comparison CSV and writes it to out_dir/compare.csv unless
/// out_dir is empty.
std::string cmd_compare(const std::string& scenario, const std::vector<std::string>& controllers,
                        const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                        unsigned threads = 0);

/// Returns the sweep CSV and writes it to out_dir/sweep.csv unless out_dir is
/// empty.
std::string cmd_sweep(const std::string& scenario, const std::string& controller,
                      const std::string& parameter, const std::vector<double>& values,
                      const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                      unsigned threads = 0);

}  // namespace gsc
