#include "gsc/teleop.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gsc {
namespace {

// Live sliders are bounded more tightly than batch specs: a 10 s lag or 5 m/s
// of noise is already past anything a person can steer through.
constexpr int kMaxLiveLag = 100;
constexpr double kMaxLiveNoise = 5.0;

Json vec(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Json optional_vec(const std::optional<Command>& c) { return c ? vec(c->velocity) : Json(nullptr); }

struct Invalid {
  std::string reason;
};

// Small schema vocabulary; each check throws Invalid.
void require(bool ok, const char* reason = "malformed") {
  if (!ok) throw Invalid{reason};
}

void only_keys(const Json& obj, std::initializer_list<const char*> allowed) {
  require(obj.is_object());
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) require(names.count(item.key()) > 0);
}

const Json* field(const Json& obj, const char* key, bool required) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    require(!required);
    return nullptr;
  }
  return &*it;
}

void number(const Json& obj, const char* key, bool required = true) {
  if (const Json* v = field(obj, key, required)) require(v->is_number() && std::isfinite(v->get<double>()));
}

void string(const Json& obj, const char* key, bool required = true) {
  if (const Json* v = field(obj, key, required)) require(v->is_string());
}

void boolean(const Json& obj, const char* key, bool required = true) {
  if (const Json* v = field(obj, key, required)) require(v->is_boolean());
}

void integer(const Json& obj, const char* key, bool required = true) {
  if (const Json* v = field(obj, key, required)) require(v->is_number_integer());
}

void point(const Json& v) {
  require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number());
}

void point_or_null(const Json& obj, const char* key) {
  const Json* v = field(obj, key, true);
  if (!v->is_null()) point(*v);
}

void array_of(const Json& obj, const char* key, void (*each)(const Json&)) {
  const Json* v = field(obj, key, true);
  require(v->is_array());
  for (const auto& item : *v) each(item);
}

// Channel knobs as they appear in start.channel and config_update.
void channel_fields(const Json& p, bool required) {
  if (const Json* v = field(p, "drop", required)) {
    require(v->is_number());
    const double d = v->get<double>();
    require(d >= 0.0 && d <= 1.0, "out-of-range");
  }
  if (const Json* v = field(p, "lag", required)) {
    require(v->is_number_integer());
    const auto lag = v->get<std::int64_t>();
    require(lag >= 0 && lag <= kMaxLiveLag, "out-of-range");
  }
  if (const Json* v = field(p, "noise", required)) {
    require(v->is_number());
    const double n = v->get<double>();
    require(n >= 0.0 && n <= kMaxLiveNoise, "out-of-range");
  }
}

void mode_entry(const Json& m) {
  only_keys(m, {"label", "weight", "mean"});
  string(m, "label");
  number(m, "weight");
  array_of(m, "mean", point);
}

void obstacle_entry(const Json& o) {
  only_keys(o, {"id", "position", "radius", "visible"});
  integer(o, "id");
  point(*field(o, "position", true));
  number(o, "radius");
  boolean(o, "visible");
}

void region_entry(const Json& r) {
  only_keys(r, {"name", "min", "max"});
  string(r, "name");
  point(*field(r, "min", true));
  point(*field(r, "max", true));
}

void route_entry(const Json& r) {
  only_keys(r, {"label", "waypoints"});
  string(r, "label");
  array_of(r, "waypoints", point);
}

void metrics_object(const Json& m) {
  require(m.is_object());
  for (const auto& item : m.items()) {
    const Json& v = item.value();
    require(v.is_null() || v.is_number() || v.is_boolean());
  }
}

void client_payload(const std::string& type, const Json& p) {
  if (type == "hello") {
    only_keys(p, {"client", "resume"});
    string(p, "client", false);
    string(p, "resume", false);
  } else if (type == "scenario_list" || type == "reset") {
    only_keys(p, {});
  } else if (type == "start") {
    only_keys(p, {"scenario", "controller", "seed", "channel"});
    string(p, "scenario");
    string(p, "controller");
    if (const Json* s = field(p, "seed", false)) require(s->is_number_unsigned() || (s->is_number_integer() && s->get<std::int64_t>() >= 0));
    if (const Json* c = field(p, "channel", false)) {
      only_keys(*c, {"drop", "lag", "noise"});
      channel_fields(*c, false);
    }
  } else if (type == "operator_input") {
    only_keys(p, {"vx", "vy"});
    number(p, "vx");
    number(p, "vy");
  } else if (type == "config_update") {
    only_keys(p, {"drop", "lag", "noise", "controller", "paused"});
    require(!p.empty());
    channel_fields(p, false);
    string(p, "controller", false);
    boolean(p, "paused", false);
  } else {
    throw Invalid{"unknown-type"};
  }
}

void server_payload(const std::string& type, const Json& p) {
  if (type == "hello") {
    only_keys(p, {"server", "tick_hz", "dt", "resumed"});
    string(p, "server");
    number(p, "tick_hz");
    number(p, "dt");
    boolean(p, "resumed");
  } else if (type == "scenario_list") {
    only_keys(p, {"scenarios", "controllers"});
    array_of(p, "scenarios", [](const Json& s) {
      only_keys(s, {"id", "description"});
      string(s, "id");
      string(s, "description");
    });
    array_of(p, "controllers", [](const Json& c) { require(c.is_string()); });
  } else if (type == "start") {
    only_keys(p, {"scenario", "controller", "seed", "channel", "scene"});
    string(p, "scenario");
    string(p, "controller");
    integer(p, "seed");
    const Json& c = *field(p, "channel", true);
    only_keys(c, {"drop", "lag", "noise"});
    channel_fields(c, true);
    const Json& scene = *field(p, "scene", true);
    only_keys(scene, {"bounds", "goal", "goal_radius", "regions", "operator_routes", "autonomy_routes"});
    const Json& bounds = *field(scene, "bounds", true);
    only_keys(bounds, {"min", "max"});
    point(*field(bounds, "min", true));
    point(*field(bounds, "max", true));
    point(*field(scene, "goal", true));
    number(scene, "goal_radius");
    array_of(scene, "regions", region_entry);
    array_of(scene, "operator_routes", route_entry);
    array_of(scene, "autonomy_routes", route_entry);
  } else if (type == "config_update") {
    only_keys(p, {"drop", "lag", "noise", "controller", "paused"});
    channel_fields(p, true);
    string(p, "controller");
    boolean(p, "paused");
  } else if (type == "reset") {
    only_keys(p, {});
  } else if (type == "state_snapshot") {
    only_keys(p, {"step", "time", "terminal", "robot", "goal", "obstacles", "u_h_raw",
                  "u_h_delivered", "u_r", "u_s", "overrode", "operator_modes", "autonomy_modes",
                  "selected", "metrics"});
    integer(p, "step");
    number(p, "time");
    boolean(p, "terminal");
    const Json& robot = *field(p, "robot", true);
    only_keys(robot, {"position", "radius"});
    point(*field(robot, "position", true));
    number(robot, "radius");
    point(*field(p, "goal", true));
    array_of(p, "obstacles", obstacle_entry);
    point_or_null(p, "u_h_raw");
    point_or_null(p, "u_h_delivered");
    point(*field(p, "u_r", true));
    point(*field(p, "u_s", true));
    boolean(p, "overrode");
    array_of(p, "operator_modes", mode_entry);
    array_of(p, "autonomy_modes", mode_entry);
    const Json& sel = *field(p, "selected", true);
    only_keys(sel, {"operator_mode", "autonomy_mode"});
    string(sel, "operator_mode");
    string(sel, "autonomy_mode");
    metrics_object(*field(p, "metrics", true));
  } else if (type == "run_ended") {
    only_keys(p, {"reason", "metrics"});
    string(p, "reason");
    metrics_object(*field(p, "metrics", true));
  } else if (type == "error") {
    only_keys(p, {"reason", "detail"});
    string(p, "reason");
    string(p, "detail");
  } else {
    throw Invalid{"unknown-type"};
  }
}

Json routes(const std::vector<RouteHypothesis>& rs) {
  Json out = Json::array();
  for (const auto& r : rs) {
    Json pts = Json::array();
    for (const auto& p : r.waypoints) pts.push_back(vec(p));
    out.push_back({{"label", r.label}, {"waypoints", pts}});
  }
  return out;
}

Json modes(const MultimodalTrajectoryDistribution& dist) {
  Json out = Json::array();
  for (const auto& m : dist.modes) {
    Json mean = Json::array();
    for (Eigen::Index k = 0; k < m.posterior.mean.rows(); ++k) {
      mean.push_back(Json::array({m.posterior.mean(k, 0), m.posterior.mean(k, 1)}));
    }
    out.push_back({{"label", m.hypothesis.label}, {"weight", m.weight}, {"mean", mean}});
  }
  return out;
}

Json channel_json(const ChannelConfig& c) {
  return {{"drop", c.drop_probability}, {"lag", c.lag_steps}, {"noise", c.noise_std}};
}

std::string end_reason(const WorldState& w, int max_steps) {
  if ((w.robot.position - w.goal).norm() <= w.goal_radius) return "goal";
  if (collision_check(w) < 0.0) return "collision";
  return w.time_step >= max_steps ? "max_steps" : "stopped";
}

}  // namespace

std::string validate_message(const Json& msg, Direction direction) {
  try {
    require(msg.is_object());
    only_keys(msg, {"type", "protocol_version", "session_id", "payload"});
    string(msg, "type");
    integer(msg, "protocol_version");
    require(msg["protocol_version"].get<std::int64_t>() == kProtocolVersion, "version-mismatch");
    const std::string type = msg["type"].get<std::string>();
    const bool client = direction == Direction::ClientToServer;
    // Everything after the client's hello names its session.
    string(msg, "session_id", !(client && type == "hello"));
    const Json empty = Json::object();
    const Json* payload = field(msg, "payload", false);
    if (!payload) payload = &empty;
    if (client) {
      client_payload(type, *payload);
    } else {
      server_payload(type, *payload);
    }
  } catch (const Invalid& e) {
    return e.reason;
  }
  return {};
}

Json make_message(const std::string& type, const std::string& session_id, Json payload) {
  Json msg = {{"type", type}, {"protocol_version", kProtocolVersion}};
  if (!session_id.empty()) msg["session_id"] = session_id;
  msg["payload"] = std::move(payload);
  return msg;
}

Json make_error(const std::string& session_id, const std::string& reason, const std::string& detail) {
  return make_message("error", session_id, {{"reason", reason}, {"detail", detail}});
}

Json scenario_catalog_json() {
  Json scenarios = Json::array();
  for (const auto& id : catalog_ids()) {
    scenarios.push_back({{"id", id}, {"description", build_scenario(id).description}});
  }
  Json controllers = Json::array();
  for (const auto& c : controller_names()) controllers.push_back(c);
  return {{"scenarios", scenarios}, {"controllers", controllers}};
}

TeleopSession::TeleopSession(std::string id) : id_(std::move(id)) {}

std::vector<Json> TeleopSession::handle_text(const std::string& text) {
  Json msg;
  try {
    msg = Json::parse(text);
  } catch (const Json::parse_error&) {
    return {make_error(id_, "malformed", "frame is not valid JSON")};
  }
  return handle(msg);
}

std::vector<Json> TeleopSession::handle(const Json& msg) {
  if (const std::string why = validate_message(msg, Direction::ClientToServer); !why.empty()) {
    return {make_error(id_, why, "message rejected by the protocol schema")};
  }
  const std::string type = msg["type"].get<std::string>();
  const Json payload = msg.value("payload", Json::object());
  if (type == "hello") {
    return {make_message("hello", id_,
                         {{"server", "gsc-teleop"}, {"tick_hz", kTickHz}, {"dt", kDefaultDt}, {"resumed", false}})};
  }
  if (msg["session_id"].get<std::string>() != id_) {
    return {make_error(id_, "unknown-session", "session_id does not name this session")};
  }
  if (type == "scenario_list") return {make_message("scenario_list", id_, scenario_catalog_json())};

  Json ack;
  if (type == "start") {
    // Resolve everything now so a bad request is rejected before it is queued.
    const std::string scenario = payload["scenario"].get<std::string>();
    const auto& ids = catalog_ids();
    if (std::find(ids.begin(), ids.end(), scenario) == ids.end()) {
      return {make_error(id_, "unknown-scenario", "'" + scenario + "' is not a catalog id")};
    }
    ScenarioSpec spec = build_scenario(scenario);
    ControllerKind kind;
    try {
      kind = parse_controller_kind(payload["controller"].get<std::string>());
    } catch (const Error& e) {
      return {make_error(id_, e.code(), e.what())};
    }
    if (const auto c = payload.find("channel"); c != payload.end()) {
      if (c->contains("drop")) spec.channel.drop_probability = (*c)["drop"].get<double>();
      if (c->contains("lag")) spec.channel.lag_steps = (*c)["lag"].get<int>();
      if (c->contains("noise")) spec.channel.noise_std = (*c)["noise"].get<double>();
    }
    const std::uint64_t seed = payload.value("seed", std::uint64_t{0});
    Json scene = {{"bounds", {{"min", vec(spec.world.bounds.min)}, {"max", vec(spec.world.bounds.max)}}},
                  {"goal", vec(spec.world.goal)},
                  {"goal_radius", spec.world.goal_radius},
                  {"regions", Json::array()},
                  {"operator_routes", routes(spec.operator_hypotheses)},
                  {"autonomy_routes", routes(spec.autonomy_hypotheses)}};
    for (const auto& r : spec.world.regions) {
      scene["regions"].push_back({{"name", r.name}, {"min", vec(r.area.min)}, {"max", vec(r.area.max)}});
    }
    ack = make_message("start", id_,
                       {{"scenario", spec.id},
                        {"controller", to_string(kind)},
                        {"seed", seed},
                        {"channel", channel_json(spec.channel)},
                        {"scene", scene}});
    Json resolved = {{"controller", to_string(kind)}, {"seed", seed}};
    const std::lock_guard lock(mailbox_mutex_);
    mailbox_.push_back({"start", std::move(resolved), std::move(spec)});
    started_ = true;
    return {ack};
  }

  if (!started_) return {make_error(id_, "not-started", "send start first")};
  if (type == "config_update" && payload.contains("controller")) {
    try {
      parse_controller_kind(payload["controller"].get<std::string>());
    } catch (const Error& e) {
      return {make_error(id_, e.code(), e.what())};
    }
  }
  const std::lock_guard lock(mailbox_mutex_);
  mailbox_.push_back({type, payload, std::nullopt});
  if (type == "reset") return {make_message("reset", id_, Json::object())};
  return {};
}

void TeleopSession::restart() {
  sim_.emplace(start_spec_, start_controller_, seed_);
  ended_ = false;
  paused_ = false;
}

void TeleopSession::apply(const Pending& p, std::optional<Command>& input) {
  if (p.type == "start") {
    start_spec_ = *p.spec;
    start_controller_ = start_spec_.controller(parse_controller_kind(p.payload["controller"].get<std::string>()));
    seed_ = p.payload["seed"].get<std::uint64_t>();
    restart();
    input.reset();
  } else if (p.type == "reset") {
    restart();
    input.reset();
  } else if (p.type == "operator_input") {
    input = Command{p.payload["vx"].get<double>(), p.payload["vy"].get<double>()};
  } else if (p.type == "config_update") {
    ChannelConfig c = sim_->channel();
    if (p.payload.contains("drop")) c.drop_probability = p.payload["drop"].get<double>();
    if (p.payload.contains("lag")) c.lag_steps = p.payload["lag"].get<int>();
    if (p.payload.contains("noise")) c.noise_std = p.payload["noise"].get<double>();
    sim_->set_channel(c);
    if (p.payload.contains("controller")) {
      sim_->set_controller(sim_->spec().controller(parse_controller_kind(p.payload["controller"].get<std::string>())));
    }
    if (p.payload.contains("paused")) paused_ = p.payload["paused"].get<bool>();
  }
}

std::vector<Json> TeleopSession::tick() {
  std::deque<Pending> pending;
  {
    const std::lock_guard lock(mailbox_mutex_);
    pending.swap(mailbox_);
  }
  std::optional<Command> input;
  std::vector<Json> out;
  for (const auto& p : pending) {
    const bool was_config = p.type == "config_update";
    apply(p, input);
    if (was_config) {
      const ChannelConfig& c = sim_->channel();
      out.push_back(make_message("config_update", id_,
                                 {{"drop", c.drop_probability},
                                  {"lag", c.lag_steps},
                                  {"noise", c.noise_std},
                                  {"controller", to_string(sim_->controller().kind)},
                                  {"paused", paused_}}));
    }
  }
  if (!sim_ || paused_ || ended_) return out;

  const TraceRecord& rec = sim_->step(input);
  out.push_back(make_message("state_snapshot", id_, snapshot(rec)));
  if (sim_->finished()) {
    ended_ = true;
    out.push_back(make_message("run_ended", id_,
                               {{"reason", end_reason(sim_->world(), sim_->spec().max_steps)},
                                {"metrics", metrics_to_json(compute_metrics(sim_->trace(), sim_->spec()))}}));
  }
  return out;
}

Json TeleopSession::snapshot(const TraceRecord& rec) const {
  Json obstacles = Json::array();
  for (const auto& o : rec.obstacles) {
    obstacles.push_back({{"id", o.id}, {"position", vec(o.position)}, {"radius", o.radius}, {"visible", o.visible}});
  }
  Json op_modes = Json::array();
  Json au_modes = Json::array();
  if (!rec.terminal && sim_->last_scene()) {
    op_modes = modes(sim_->last_scene()->joint.operator_dist);
    au_modes = modes(sim_->last_scene()->joint.autonomy);
  }
  return {{"step", rec.step},
          {"time", rec.step * sim_->spec().dt},
          {"terminal", rec.terminal},
          {"robot", {{"position", vec(rec.robot)}, {"radius", rec.robot_radius}}},
          {"goal", vec(sim_->spec().world.goal)},
          {"obstacles", obstacles},
          {"u_h_raw", optional_vec(rec.u_h_raw)},
          {"u_h_delivered", optional_vec(rec.u_h_delivered)},
          {"u_r", vec(rec.u_r.velocity)},
          {"u_s", vec(rec.u_s.velocity)},
          {"overrode", rec.overrode},
          {"operator_modes", op_modes},
          {"autonomy_modes", au_modes},
          {"selected", {{"operator_mode", rec.operator_mode}, {"autonomy_mode", rec.autonomy_mode}}},
          {"metrics", metrics_to_json(compute_metrics(sim_->trace(), sim_->spec()))}};
}

}  // namespace gsc
