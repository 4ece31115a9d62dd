#include "gsc/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace gsc {
namespace {

constexpr const char* kScenarioSchema = "scenario-schema";

Json vec(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Json points(const std::vector<Vec2>& pts) {
  Json out = Json::array();
  for (const auto& p : pts) out.push_back(vec(p));
  return out;
}

Json kernel_json(const KernelParams& k) {
  return {{"length_scale", k.length_scale},
          {"signal_variance", k.signal_variance},
          {"noise_variance", k.noise_variance}};
}

Json routes_json(const std::vector<RouteHypothesis>& routes) {
  Json out = Json::array();
  for (const auto& r : routes) {
    out.push_back({{"label", r.label}, {"prior_weight", r.prior_weight}, {"waypoints", points(r.waypoints)}});
  }
  return out;
}

Json optional_command(const std::optional<Command>& c) {
  return c ? vec(c->velocity) : Json(nullptr);
}

// Strict object reader: every key must be consumed, so typos in hand-written
// files surface as errors instead of silently falling back to defaults.
class Reader {
 public:
  Reader(const Json& j, std::string path, std::string code)
      : j_(j), path_(std::move(path)), code_(std::move(code)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void opt(const char* key, T& out) {
    if (const Json* v = take(key)) out = as<T>(*v, at(key));
  }

  void opt_vec(const char* key, Vec2& out) {
    if (const Json* v = take(key)) out = to_vec(*v, at(key));
  }

  void opt_points(const char* key, std::vector<Vec2>& out) {
    if (const Json* v = take(key)) {
      if (!v->is_array()) fail(at(key), "expected an array");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(to_vec((*v)[i], at(key) + "[" + std::to_string(i) + "]"));
      }
    }
  }

  // Calls fn(Reader&) for each element of an array of objects.
  template <typename Fn>
  void each(const char* key, Fn&& fn) {
    if (const Json* v = take(key)) {
      if (!v->is_array()) fail(at(key), "expected an array");
      for (std::size_t i = 0; i < v->size(); ++i) {
        Reader sub((*v)[i], at(key) + "[" + std::to_string(i) + "]", code_);
        fn(sub);
        sub.finish();
      }
    }
  }

  template <typename Fn>
  void object(const char* key, Fn&& fn) {
    if (const Json* v = take(key)) {
      Reader sub(*v, at(key), code_);
      fn(sub);
      sub.finish();
    }
  }

  Vec2 to_vec(const Json& v, const std::string& where) const {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(where, "expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  const Json* take(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) fail(at(item.key().c_str()), "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& where, const std::string& why) const {
    throw Error(code_, where + ": " + why);
  }

  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  template <typename T>
  T as(const Json& v, const std::string& where) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(where, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(where, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(where, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<std::int64_t>() < 0) fail(where, "expected a non-negative integer");
      }
      return v.get<T>();
    } else {
      if (!v.is_number()) fail(where, "expected a number");
      return v.get<T>();
    }
  }

  const Json& j_;
  std::string path_;
  std::string code_;
  std::set<std::string> used_;
};

void read_kernel(Reader& r, KernelParams& k) {
  r.opt("length_scale", k.length_scale);
  r.opt("signal_variance", k.signal_variance);
  r.opt("noise_variance", k.noise_variance);
}

void read_routes(Reader& r, const char* key, std::vector<RouteHypothesis>& out) {
  if (r.has(key)) out.clear();
  r.each(key, [&](Reader& h) {
    RouteHypothesis route;
    h.opt("label", route.label);
    h.opt("prior_weight", route.prior_weight);
    h.opt_points("waypoints", route.waypoints);
    out.push_back(std::move(route));
  });
}

}  // namespace

Json scenario_to_json(const ScenarioSpec& s) {
  Json world;
  world["robot"] = {{"position", vec(s.world.robot.position)}, {"radius", s.world.robot.radius}};
  world["goal"] = vec(s.world.goal);
  world["goal_radius"] = s.world.goal_radius;
  world["bounds"] = {{"min", vec(s.world.bounds.min)}, {"max", vec(s.world.bounds.max)}};
  world["obstacles"] = Json::array();
  for (const auto& o : s.world.obstacles) {
    Json script = Json::array();
    for (const auto& seg : o.script) {
      script.push_back({{"start_step", seg.start_step}, {"velocity", vec(seg.velocity)}});
    }
    world["obstacles"].push_back({{"id", o.id},
                                  {"position", vec(o.position)},
                                  {"radius", o.radius},
                                  {"velocity", vec(o.velocity)},
                                  {"reveal_step", o.reveal_step},
                                  {"script", script}});
  }
  world["regions"] = Json::array();
  for (const auto& r : s.world.regions) {
    world["regions"].push_back({{"name", r.name}, {"min", vec(r.area.min)}, {"max", vec(r.area.max)}});
  }

  const auto& os = s.operator_script;
  Json waypoints = Json::array();
  for (const auto& w : os.waypoints) waypoints.push_back({{"step", w.step}, {"position", vec(w.position)}});
  Json script = {{"intent_mode", os.intent_mode},
                 {"rule", to_string(os.rule)},
                 {"rule_step", os.rule_step},
                 {"startle_command", vec(os.startle_command)},
                 {"startle_duration", os.startle_duration},
                 {"speed", os.speed},
                 {"reach_radius", os.reach_radius},
                 {"waypoints", waypoints}};

  const auto& m = s.model;
  Json model = {{"history_steps", m.history_steps},
                {"history_stride", m.history_stride},
                {"evidence_span", m.evidence_span},
                {"route_speed", m.route_speed},
                {"via_interval", m.via_interval},
                {"route_lookahead", m.route_lookahead},
                {"goal_noise_scale", m.goal_noise_scale},
                {"environment_history_steps", m.environment_history_steps},
                {"route_feasibility", m.route_feasibility},
                {"feasibility_strength", m.feasibility_strength},
                {"feasibility_scale", m.feasibility_scale},
                {"sensing_range", m.sensing_range},
                {"autonomy_evidence_scale", m.autonomy_evidence_scale}};

  Json doc;
  doc["schema"] = kScenarioSchema;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["id"] = s.id;
  doc["version"] = s.version;
  doc["description"] = s.description;
  doc["dt"] = s.dt;
  doc["horizon_steps"] = s.horizon_steps;
  doc["max_steps"] = s.max_steps;
  doc["speed_limit"] = s.speed_limit;
  doc["world"] = world;
  doc["operator_script"] = script;
  doc["operator_hypotheses"] = routes_json(s.operator_hypotheses);
  doc["autonomy_hypotheses"] = routes_json(s.autonomy_hypotheses);
  doc["channel"] = {{"drop_probability", s.channel.drop_probability},
                    {"lag_steps", s.channel.lag_steps},
                    {"noise_std", s.channel.noise_std},
                    {"seed", s.channel.seed}};
  doc["kernels"] = {{"operator", kernel_json(s.operator_kernel)},
                    {"autonomy", kernel_json(s.autonomy_kernel)},
                    {"environment", kernel_json(s.environment_kernel)}};
  doc["interaction"] = {{"safety_strength", s.interaction.safety_strength},
                        {"safety_scale", s.interaction.safety_scale},
                        {"agreement_scale", s.interaction.agreement_scale},
                        {"agreement_enabled", s.interaction.agreement_enabled},
                        {"safety_enabled", s.interaction.safety_enabled}};
  doc["model"] = model;
  doc["controller"] = {{"gains", {{"k_h", s.gains.k_h}, {"k_r", s.gains.k_r}, {"convex", s.gains.convex}}},
                       {"safeguard_margin", s.safeguard_margin},
                       {"staleness_tau", s.staleness_tau},
                       {"n_samples", s.n_samples}};
  return doc;
}

ScenarioSpec scenario_from_json(const Json& doc) {
  Reader r(doc, "", "bad-scenario");
  std::string schema = kScenarioSchema;
  r.opt("schema", schema);
  if (schema != kScenarioSchema) r.fail("schema", "expected \"scenario-schema\"");
  if (!r.has("schema_version")) r.fail("schema_version", "missing");
  int schema_version = 0;
  r.opt("schema_version", schema_version);
  if (schema_version != kScenarioSchemaVersion) {
    r.fail("schema_version", "unsupported version " + std::to_string(schema_version));
  }

  ScenarioSpec s;
  r.opt("id", s.id);
  r.opt("version", s.version);
  r.opt("description", s.description);
  r.opt("dt", s.dt);
  r.opt("horizon_steps", s.horizon_steps);
  r.opt("max_steps", s.max_steps);
  r.opt("speed_limit", s.speed_limit);

  r.object("world", [&](Reader& w) {
    auto& world = s.world;
    w.object("robot", [&](Reader& rb) {
      rb.opt_vec("position", world.robot.position);
      rb.opt("radius", world.robot.radius);
    });
    w.opt_vec("goal", world.goal);
    w.opt("goal_radius", world.goal_radius);
    w.object("bounds", [&](Reader& b) {
      b.opt_vec("min", world.bounds.min);
      b.opt_vec("max", world.bounds.max);
    });
    w.each("obstacles", [&](Reader& o) {
      Obstacle obs;
      o.opt("id", obs.id);
      o.opt_vec("position", obs.position);
      o.opt("radius", obs.radius);
      o.opt_vec("velocity", obs.velocity);
      o.opt("reveal_step", obs.reveal_step);
      o.each("script", [&](Reader& seg) {
        VelocitySegment v;
        seg.opt("start_step", v.start_step);
        seg.opt_vec("velocity", v.velocity);
        obs.script.push_back(v);
      });
      world.obstacles.push_back(std::move(obs));
    });
    w.each("regions", [&](Reader& g) {
      NamedRegion region;
      g.opt("name", region.name);
      g.opt_vec("min", region.area.min);
      g.opt_vec("max", region.area.max);
      world.regions.push_back(std::move(region));
    });
  });

  r.object("operator_script", [&](Reader& o) {
    auto& os = s.operator_script;
    o.opt("intent_mode", os.intent_mode);
    std::string rule = to_string(os.rule);
    o.opt("rule", rule);
    os.rule = parse_input_rule(rule);
    o.opt("rule_step", os.rule_step);
    o.opt_vec("startle_command", os.startle_command);
    o.opt("startle_duration", os.startle_duration);
    o.opt("speed", os.speed);
    o.opt("reach_radius", os.reach_radius);
    o.each("waypoints", [&](Reader& w) {
      ScriptWaypoint wp;
      w.opt("step", wp.step);
      w.opt_vec("position", wp.position);
      os.waypoints.push_back(wp);
    });
  });

  read_routes(r, "operator_hypotheses", s.operator_hypotheses);
  read_routes(r, "autonomy_hypotheses", s.autonomy_hypotheses);

  r.object("channel", [&](Reader& c) {
    c.opt("drop_probability", s.channel.drop_probability);
    c.opt("lag_steps", s.channel.lag_steps);
    c.opt("noise_std", s.channel.noise_std);
    c.opt("seed", s.channel.seed);
  });
  r.object("kernels", [&](Reader& k) {
    k.object("operator", [&](Reader& x) { read_kernel(x, s.operator_kernel); });
    k.object("autonomy", [&](Reader& x) { read_kernel(x, s.autonomy_kernel); });
    k.object("environment", [&](Reader& x) { read_kernel(x, s.environment_kernel); });
  });
  r.object("interaction", [&](Reader& i) {
    i.opt("safety_strength", s.interaction.safety_strength);
    i.opt("safety_scale", s.interaction.safety_scale);
    i.opt("agreement_scale", s.interaction.agreement_scale);
    i.opt("agreement_enabled", s.interaction.agreement_enabled);
    i.opt("safety_enabled", s.interaction.safety_enabled);
  });
  r.object("model", [&](Reader& m) {
    auto& mp = s.model;
    m.opt("history_steps", mp.history_steps);
    m.opt("history_stride", mp.history_stride);
    m.opt("evidence_span", mp.evidence_span);
    m.opt("route_speed", mp.route_speed);
    m.opt("via_interval", mp.via_interval);
    m.opt("route_lookahead", mp.route_lookahead);
    m.opt("goal_noise_scale", mp.goal_noise_scale);
    m.opt("environment_history_steps", mp.environment_history_steps);
    m.opt("route_feasibility", mp.route_feasibility);
    m.opt("feasibility_strength", mp.feasibility_strength);
    m.opt("feasibility_scale", mp.feasibility_scale);
    m.opt("sensing_range", mp.sensing_range);
    m.opt("autonomy_evidence_scale", mp.autonomy_evidence_scale);
  });
  r.object("controller", [&](Reader& c) {
    c.object("gains", [&](Reader& g) {
      g.opt("k_h", s.gains.k_h);
      g.opt("k_r", s.gains.k_r);
      g.opt("convex", s.gains.convex);
    });
    c.opt("safeguard_margin", s.safeguard_margin);
    c.opt("staleness_tau", s.staleness_tau);
    c.opt("n_samples", s.n_samples);
  });
  r.finish();

  s.world.time_step = 0;
  s.world.refresh();
  s.validate();
  return s;
}

std::string dump_scenario(const ScenarioSpec& spec) { return scenario_to_json(spec).dump(2) + "\n"; }

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("unknown-scenario", "no catalog id or readable file named '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("bad-scenario", path + ": " + e.what());
  }
  return scenario_from_json(doc);
}

ScenarioSpec resolve_scenario(const std::string& id_or_path) {
  const auto& ids = catalog_ids();
  if (std::find(ids.begin(), ids.end(), id_or_path) != ids.end()) return build_scenario(id_or_path);
  if (!std::filesystem::exists(id_or_path)) return build_scenario(id_or_path);  // lists the catalog
  return load_scenario_file(id_or_path);
}

Json trace_record_to_json(const TraceRecord& r) {
  Json obstacles = Json::array();
  for (const auto& o : r.obstacles) {
    obstacles.push_back({{"id", o.id}, {"position", vec(o.position)}, {"radius", o.radius}, {"visible", o.visible}});
  }
  return {{"kind", "step"},
          {"step", r.step},
          {"robot", vec(r.robot)},
          {"robot_radius", r.robot_radius},
          {"obstacles", obstacles},
          {"u_h_raw", optional_command(r.u_h_raw)},
          {"u_h_delivered", optional_command(r.u_h_delivered)},
          {"u_r", vec(r.u_r.velocity)},
          {"u_s", vec(r.u_s.velocity)},
          {"controller", r.controller},
          {"overrode", r.overrode},
          {"terminal", r.terminal},
          {"operator_mode", r.operator_mode},
          {"autonomy_mode", r.autonomy_mode}};
}

TraceRecord trace_record_from_json(const Json& line) {
  Reader r(line, "", "bad-trace");
  std::string kind;
  r.opt("kind", kind);
  if (kind != "step") r.fail("kind", "expected \"step\"");
  TraceRecord rec;
  r.opt("step", rec.step);
  r.opt_vec("robot", rec.robot);
  r.opt("robot_radius", rec.robot_radius);
  r.each("obstacles", [&](Reader& o) {
    ObstacleSnapshot snap;
    o.opt("id", snap.id);
    o.opt_vec("position", snap.position);
    o.opt("radius", snap.radius);
    o.opt("visible", snap.visible);
    rec.obstacles.push_back(snap);
  });
  for (auto [key, field] : {std::pair{"u_h_raw", &rec.u_h_raw}, std::pair{"u_h_delivered", &rec.u_h_delivered}}) {
    const Json* v = r.take(key);
    if (v && !v->is_null()) *field = Command{r.to_vec(*v, key)};
  }
  r.opt_vec("u_r", rec.u_r.velocity);
  r.opt_vec("u_s", rec.u_s.velocity);
  r.opt("controller", rec.controller);
  r.opt("overrode", rec.overrode);
  r.opt("terminal", rec.terminal);
  r.opt("operator_mode", rec.operator_mode);
  r.opt("autonomy_mode", rec.autonomy_mode);
  r.finish();
  return rec;
}

void write_trace_jsonl(std::ostream& out, const TraceHeader& header, const Trace& trace) {
  const Json head = {{"kind", "header"},
                     {"schema_version", kTraceSchemaVersion},
                     {"scenario", header.scenario},
                     {"controller", header.controller},
                     {"seed", header.seed}};
  out << head.dump() << '\n';
  for (const auto& r : trace.records) out << trace_record_to_json(r).dump() << '\n';
}

LoadedTrace read_trace_jsonl(std::istream& in) {
  LoadedTrace out;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error("bad-trace", "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      Reader r(j, "header", "bad-trace");
      std::string kind;
      int version = 0;
      r.opt("kind", kind);
      r.opt("schema_version", version);
      if (kind != "header" || version != kTraceSchemaVersion) {
        r.fail("header", "expected a version " + std::to_string(kTraceSchemaVersion) + " header line");
      }
      r.opt("scenario", out.header.scenario);
      r.opt("controller", out.header.controller);
      r.opt("seed", out.header.seed);
      r.finish();
      have_header = true;
      continue;
    }
    out.trace.records.push_back(trace_record_from_json(j));
  }
  if (!have_header) throw Error("bad-trace", "empty trace");
  return out;
}

Json metrics_to_json(const Metrics& m) {
  Json out;
  out["schema_version"] = kMetricsSchemaVersion;
  out["collision"] = m.collision;
  out["min_clearance"] = std::isfinite(m.min_clearance) ? Json(m.min_clearance) : Json(nullptr);
  out["path_length"] = m.path_length;
  out["reached_goal"] = m.steps_to_goal.has_value();
  out["steps_to_goal"] = m.steps_to_goal ? Json(*m.steps_to_goal) : Json(nullptr);
  out["agreement_rms"] = m.agreement_rms;
  out["max_accel"] = m.max_accel;
  for (const auto& [name, hit] : m.region_hits) out["region_hit." + name] = hit;
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path);
  out << text;
  if (!out) throw Error("io-error", "short write to " + path);
}

}  // namespace gsc
