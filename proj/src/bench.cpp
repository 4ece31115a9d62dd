#include "gsc/bench.hpp"

#include "gsc/io.hpp"
#include "gsc/render.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

namespace gsc {
namespace {

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> region_columns(const std::vector<Aggregate>& rows) {
  std::vector<std::string> names;
  for (const auto& r : rows) {
    for (const auto& [name, rate] : r.region_hit_rate) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string csv(const std::vector<Aggregate>& rows, bool sweep) {
  const auto regions = region_columns(rows);
  std::string out = "scenario,controller";
  if (sweep) out += ",parameter,value";
  out += ",runs,collision_rate,goal_rate,mean_path_length,mean_agreement_rms,mean_max_accel,median_max_accel";
  for (const auto& name : regions) out += ",hit_rate." + name;
  out += "\n";
  for (const auto& r : rows) {
    out += r.scenario + "," + r.controller;
    if (sweep) out += "," + r.parameter + "," + fmt(r.value);
    out += "," + std::to_string(r.runs) + "," + fmt(r.collision_rate) + "," + fmt(r.goal_rate) + "," +
           fmt(r.mean_path_length) + "," + fmt(r.mean_agreement_rms) + "," + fmt(r.mean_max_accel) +
           "," + fmt(r.median_max_accel);
    for (const auto& name : regions) {
      const auto it = r.region_hit_rate.find(name);
      out += "," + (it == r.region_hit_rate.end() ? std::string() : fmt(it->second));
    }
    out += "\n";
  }
  return out;
}

ControllerConfig controller_for(const ScenarioSpec& spec, const std::string& name) {
  return spec.controller(parse_controller_kind(name));
}

void write_if(const std::string& out_dir, const std::string& file, const std::string& text) {
  if (!out_dir.empty()) write_file((std::filesystem::path(out_dir) / file).string(), text);
}

}  // namespace

std::vector<RunResult> run_batch(const std::vector<RunJob>& jobs, unsigned threads) {
  std::vector<RunResult> results(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      results[i] = run_scenario(jobs[i].spec, jobs[i].controller, jobs[i].seed);
    }
    return results;
  }

  // Each worker writes only its own slots, so the output order is the job
  // order regardless of scheduling.
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
        try {
          results[i] = run_scenario(jobs[i].spec, jobs[i].controller, jobs[i].seed);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = jobs.size();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

Aggregate aggregate(const std::vector<Metrics>& runs) {
  Aggregate a;
  a.runs = runs.size();
  if (runs.empty()) return a;
  const double n = static_cast<double>(runs.size());
  std::vector<double> accels;
  for (const auto& m : runs) {
    a.collision_rate += m.collision ? 1.0 : 0.0;
    a.goal_rate += m.steps_to_goal ? 1.0 : 0.0;
    a.mean_path_length += m.path_length;
    a.mean_agreement_rms += m.agreement_rms;
    a.mean_max_accel += m.max_accel;
    accels.push_back(m.max_accel);
    for (const auto& [name, hit] : m.region_hits) a.region_hit_rate[name] += hit ? 1.0 : 0.0;
  }
  a.collision_rate /= n;
  a.goal_rate /= n;
  a.mean_path_length /= n;
  a.mean_agreement_rms /= n;
  a.mean_max_accel /= n;
  for (auto& [name, rate] : a.region_hit_rate) rate /= n;
  std::sort(accels.begin(), accels.end());
  const std::size_t mid = accels.size() / 2;
  a.median_max_accel = accels.size() % 2 ? accels[mid] : 0.5 * (accels[mid - 1] + accels[mid]);
  return a;
}

std::string compare_csv(const std::vector<Aggregate>& rows) { return csv(rows, false); }
std::string sweep_csv(const std::vector<Aggregate>& rows) { return csv(rows, true); }

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  auto number = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw Error("bad-seeds", "'" + text + "' is not a seed list (use 7, 1,4,9 or 0..49)");
    }
    return std::stoull(s);
  };
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const std::uint64_t lo = number(text.substr(0, dots));
    const std::uint64_t hi = number(text.substr(dots + 2));
    if (hi < lo) throw Error("bad-seeds", "empty seed range '" + text + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) seeds.push_back(number(item));
  if (seeds.empty()) throw Error("bad-seeds", "no seeds given");
  return seeds;
}

void apply_channel_parameter(ScenarioSpec& spec, const std::string& parameter, double value) {
  ChannelConfig c = spec.channel;
  if (parameter == "drop") {
    c.drop_probability = value;
  } else if (parameter == "lag") {
    if (value != std::floor(value)) throw Error("out-of-range", "lag must be a whole number of steps");
    c.lag_steps = static_cast<int>(value);
  } else if (parameter == "noise") {
    c.noise_std = value;
  } else {
    throw Error("unknown-parameter", "'" + parameter + "' (expected drop, lag or noise)");
  }
  c.validate();
  spec.channel = c;
}

RunReport cmd_run(const std::string& scenario, const std::string& controller, std::uint64_t seed,
                  const std::string& out_dir) {
  const ScenarioSpec spec = resolve_scenario(scenario);
  const ControllerConfig cfg = controller_for(spec, controller);

  const auto start = std::chrono::steady_clock::now();
  const RunResult result = run_scenario(spec, cfg, seed);
  const auto stop = std::chrono::steady_clock::now();

  RunReport report;
  report.scenario = spec.id;
  report.controller = to_string(cfg.kind);
  report.seed = seed;
  report.metrics = result.metrics;
  report.wall_time = std::chrono::duration<double>(stop - start).count();

  std::ostringstream trace;
  write_trace_jsonl(trace, {spec.id, report.controller, seed}, result.trace);
  write_if(out_dir, "trace.jsonl", trace.str());
  write_if(out_dir, "metrics.json", metrics_to_json(result.metrics).dump(2) + "\n");
  write_if(out_dir, "rollout.svg", render_svg(result.trace, spec));
  if (!out_dir.empty()) report.trace_path = (std::filesystem::path(out_dir) / "trace.jsonl").string();
  return report;
}

std::string cmd_compare(const std::string& scenario, const std::vector<std::string>& controllers,
                        const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                        unsigned threads) {
  if (controllers.empty()) throw Error("bad-usage", "no controllers given");
  if (seeds.empty()) throw Error("bad-seeds", "no seeds given");
  const ScenarioSpec spec = resolve_scenario(scenario);
  std::vector<RunJob> jobs;
  for (const auto& name : controllers) {
    const ControllerConfig cfg = controller_for(spec, name);
    for (auto seed : seeds) jobs.push_back({spec, cfg, seed});
  }
  const auto results = run_batch(jobs, threads);

  std::vector<Aggregate> rows;
  for (std::size_t c = 0; c < controllers.size(); ++c) {
    std::vector<Metrics> metrics;
    for (std::size_t s = 0; s < seeds.size(); ++s) metrics.push_back(results[c * seeds.size() + s].metrics);
    Aggregate row = aggregate(metrics);
    row.scenario = spec.id;
    row.controller = to_string(jobs[c * seeds.size()].controller.kind);
    rows.push_back(std::move(row));
  }
  const std::string text = compare_csv(rows);
  write_if(out_dir, "compare.csv", text);
  return text;
}

std::string cmd_sweep(const std::string& scenario, const std::string& controller,
                      const std::string& parameter, const std::vector<double>& values,
                      const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
                      unsigned threads) {
  if (values.empty()) throw Error("bad-usage", "no sweep values given");
  if (seeds.empty()) throw Error("bad-seeds", "no seeds given");
  const ScenarioSpec base = resolve_scenario(scenario);
  const ControllerConfig cfg = controller_for(base, controller);
  std::vector<RunJob> jobs;
  for (double v : values) {
    ScenarioSpec spec = base;
    apply_channel_parameter(spec, parameter, v);
    for (auto seed : seeds) jobs.push_back({spec, cfg, seed});
  }
  const auto results = run_batch(jobs, threads);

  std::vector<Aggregate> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::vector<Metrics> metrics;
    for (std::size_t s = 0; s < seeds.size(); ++s) metrics.push_back(results[i * seeds.size() + s].metrics);
    Aggregate row = aggregate(metrics);
    row.scenario = base.id;
    row.controller = to_string(cfg.kind);
    row.parameter = parameter;
    row.value = values[i];
    rows.push_back(std::move(row));
  }
  const std::string text = sweep_csv(rows);
  write_if(out_dir, "sweep.csv", text);
  return text;
}

}  // namespace gsc
