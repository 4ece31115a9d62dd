#include "doctest.h"

#include "test_support.hpp"

#include "gsc/io.hpp"
#include "gsc/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

using namespace gsc;

namespace {

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("scenarios") {

TEST_CASE("the catalog has the eight scenarios") {
  const std::vector<std::string> expected{"multimodal-corridor", "lossy-surveillance", "laggy-occlusion",
                                          "distracted-operator", "elevator-crowd",     "startled-driver",
                                          "traffic-merge",       "two-mode-autopilot"};
  auto ids = catalog_ids();
  std::sort(ids.begin(), ids.end());
  auto want = expected;
  std::sort(want.begin(), want.end());
  CHECK(ids == want);
  for (const auto& id : catalog_ids()) {
    const auto spec = build_scenario(id);
    CHECK(spec.id == id);
    CHECK_FALSE(spec.description.empty());
    CHECK_NOTHROW(spec.validate());
  }
}

TEST_CASE("catalog entries carry their configured parameters") {
  const auto corridor = build_scenario("multimodal-corridor");
  CHECK(corridor.operator_hypotheses.size() == 2);
  CHECK(corridor.autonomy_hypotheses.size() == 2);
  CHECK(build_scenario("lossy-surveillance").channel.drop_probability == 0.7);
  CHECK(build_scenario("lossy-surveillance").world.region("surveillance") != nullptr);
  CHECK(build_scenario("startled-driver").world.region("oncoming-lane") != nullptr);
}

TEST_CASE("unknown ids list the catalog") {
  CHECK(error_code([] { build_scenario("bogus"); }) == "unknown-scenario");
  const std::string text = error_text([] { build_scenario("bogus"); });
  for (const auto& id : catalog_ids()) CHECK(text.find(id) != std::string::npos);
}

TEST_CASE("scripted operator rules") {
  WorldState world;
  OperatorScript s;
  s.waypoints = {{0, Vec2::Zero()}, {50, Vec2(0.0, 5.0)}};
  s.speed = 2.0;

  SUBCASE("head to waypoint") {
    const auto in = scripted_operator_input(s, world, 0, 2.0);
    REQUIRE(in);
    CHECK(in->issued_step == 0);
    CHECK(in->command.velocity.x() == doctest::Approx(0.0));
    CHECK(in->command.velocity.y() == doctest::Approx(2.0));
  }
  SUBCASE("silent after") {
    s.rule = InputRule::SilentAfter;
    s.rule_step = 20;
    CHECK(scripted_operator_input(s, world, 20, 2.0).has_value());
    CHECK_FALSE(scripted_operator_input(s, world, 21, 2.0).has_value());
  }
  SUBCASE("startle") {
    s.rule = InputRule::StartleAt;
    s.rule_step = 30;
    s.startle_command = Vec2(-2.0, 0.0);
    s.startle_duration = 3;
    const auto at = scripted_operator_input(s, world, 30, 2.0);
    REQUIRE(at);
    CHECK(at->command == Command(-2.0, 0.0));
    CHECK(scripted_operator_input(s, world, 32, 2.0)->command == Command(-2.0, 0.0));
    CHECK(scripted_operator_input(s, world, 33, 2.0)->command.velocity.y() > 0.0);
    s.startle_command = Vec2(-6.0, 0.0);
    CHECK(scripted_operator_input(s, world, 30, 2.0)->command.velocity.norm() == doctest::Approx(2.0));
  }
  SUBCASE("merge cue holds still until the cue") {
    s.rule = InputRule::MergeCueAt;
    s.rule_step = 10;
    CHECK(scripted_operator_input(s, world, 9, 2.0)->command == Command::zero());
    CHECK(scripted_operator_input(s, world, 10, 2.0)->command.velocity.y() > 0.0);
  }
  SUBCASE("rule names round-trip") {
    for (auto r : {InputRule::HeadToWaypoint, InputRule::SilentAfter, InputRule::StartleAt, InputRule::MergeCueAt}) {
      CHECK(parse_input_rule(to_string(r)) == r);
    }
    CHECK(error_code([] { parse_input_rule("wander"); }) == "bad-scenario");
  }
}

TEST_CASE("intent interpolates the script waypoints") {
  OperatorScript s;
  s.waypoints = {{10, Vec2(0.0, 0.0)}, {20, Vec2(2.0, 4.0)}};
  CHECK(s.intent_at(0) == Vec2(0.0, 0.0));
  CHECK(s.intent_at(15).isApprox(Vec2(1.0, 2.0)));
  CHECK(s.intent_at(99) == Vec2(2.0, 4.0));
}

TEST_CASE("route geometry helpers") {
  const std::vector<Vec2> route{Vec2(0.0, 0.0), Vec2(3.0, 0.0), Vec2(3.0, 4.0)};
  CHECK(point_along(route, 1.0).isApprox(Vec2(1.0, 0.0)));
  CHECK(point_along(route, 5.0).isApprox(Vec2(3.0, 2.0)));
  CHECK(point_along(route, 100.0) == Vec2(3.0, 4.0));
  CHECK(point_along(route, -1.0) == Vec2(0.0, 0.0));
  CHECK(project_onto(route, Vec2(1.5, -2.0)) == doctest::Approx(1.5));
  CHECK(project_onto(route, Vec2(5.0, 3.0)) == doctest::Approx(6.0));
}

TEST_CASE("catalog specs match their golden JSON") {
  for (const auto& id : catalog_ids()) {
    const std::string path = testing::golden_path("scenarios/" + id + ".json");
    const std::string text = dump_scenario(build_scenario(id));
    if (testing::updating_golden()) {
      write_file(path, text);
      continue;
    }
    INFO("golden file: " << path);
    CHECK(testing::read_text(path) == text);
  }
}

TEST_CASE("scenario JSON round-trips") {
  for (const auto& id : catalog_ids()) {
    const auto spec = build_scenario(id);
    const auto back = scenario_from_json(scenario_to_json(spec));
    CHECK(dump_scenario(back) == dump_scenario(spec));
  }
}

TEST_CASE("scenario files are validated") {
  const Json good = scenario_to_json(build_scenario("multimodal-corridor"));

  SUBCASE("unknown keys are rejected with their path") {
    Json doc = good;
    doc["world"]["robott"] = Json::object();
    const std::string text = error_text([&] { scenario_from_json(doc); });
    CHECK(text.find("bad-scenario") == 0);
    CHECK(text.find("world.robott") != std::string::npos);
  }
  SUBCASE("wrong types") {
    Json doc = good;
    doc["dt"] = "fast";
    CHECK(error_code([&] { scenario_from_json(doc); }) == "bad-scenario");
  }
  SUBCASE("schema version") {
    Json doc = good;
    doc["schema_version"] = 2;
    CHECK(error_code([&] { scenario_from_json(doc); }) == "bad-scenario");
    doc.erase("schema_version");
    CHECK(error_code([&] { scenario_from_json(doc); }) == "bad-scenario");
  }
  SUBCASE("semantic checks run after parsing") {
    Json doc = good;
    doc["channel"]["drop_probability"] = 1.5;
    CHECK(error_code([&] { scenario_from_json(doc); }) == "bad-scenario");
    doc = good;
    doc["operator_hypotheses"][0]["prior_weight"] = 0.9;
    CHECK(error_code([&] { scenario_from_json(doc); }) == "bad-scenario");
    doc = good;
    doc["world"]["obstacles"][0]["radius"] = -1.0;
    CHECK(error_code([&] { scenario_from_json(doc); }) == "bad-scenario");
  }
  SUBCASE("a minimal file gets defaults for everything else") {
    const Json doc = {{"schema", "scenario-schema"}, {"schema_version", 1}, {"id", "tiny"},
                      {"world", {{"goal", {3.0, 0.0}}}}};
    const auto spec = scenario_from_json(doc);
    CHECK(spec.id == "tiny");
    CHECK(spec.world.goal == Vec2(3.0, 0.0));
    CHECK(spec.dt == kDefaultDt);
  }
  SUBCASE("files on disk") {
    const auto dir = std::filesystem::temp_directory_path() / "gsc_scenario_test";
    std::filesystem::create_directories(dir);
    const auto ok = (dir / "corridor.json").string();
    write_file(ok, dump_scenario(build_scenario("multimodal-corridor")));
    CHECK(resolve_scenario(ok).id == "multimodal-corridor");
    const auto broken = (dir / "broken.json").string();
    write_file(broken, "{ not json");
    CHECK(error_code([&] { load_scenario_file(broken); }) == "bad-scenario");
    CHECK(error_code([&] { resolve_scenario((dir / "missing.json").string()); }) == "unknown-scenario");
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("trace JSON lines round-trip") {
  Trace t;
  TraceRecord r;
  r.step = 3;
  r.robot = Vec2(0.25, -1.5);
  r.obstacles = {{4, Vec2(1.0, 2.0), 0.5, false}};
  r.u_h_raw = Command(1.0, 0.0);
  r.u_r = Command(0.1, 0.2);
  r.u_s = Command(0.3, 0.4);
  r.controller = "gsc";
  r.operator_mode = "left";
  r.autonomy_mode = "left";
  t.records.push_back(r);
  r.step = 4;
  r.terminal = true;
  r.u_h_raw.reset();
  r.u_h_delivered = Command(0.5, 0.5);
  t.records.push_back(r);

  std::stringstream ss;
  write_trace_jsonl(ss, {"multimodal-corridor", "gsc", 9}, t);
  const std::string first = ss.str();
  const auto loaded = read_trace_jsonl(ss);
  CHECK(loaded.header.scenario == "multimodal-corridor");
  CHECK(loaded.header.seed == 9);
  REQUIRE(loaded.trace.records.size() == 2);
  CHECK(loaded.trace.records[0].u_h_raw->velocity == Vec2(1.0, 0.0));
  CHECK_FALSE(loaded.trace.records[1].u_h_raw.has_value());
  CHECK(loaded.trace.records[1].u_h_delivered->velocity == Vec2(0.5, 0.5));
  CHECK_FALSE(loaded.trace.records[0].obstacles[0].visible);

  std::stringstream again;
  write_trace_jsonl(again, loaded.header, loaded.trace);
  CHECK(again.str() == first);

  std::stringstream bad("{\"kind\":\"header\"}\nnot json\n");
  CHECK(error_code([&] { read_trace_jsonl(bad); }) == "bad-trace");
}

TEST_CASE("metrics JSON uses null for missing values") {
  Metrics m;
  m.region_hits["surveillance"] = true;
  const Json j = metrics_to_json(m);
  CHECK(j["min_clearance"].is_null());
  CHECK(j["steps_to_goal"].is_null());
  CHECK(j["region_hit.surveillance"] == true);
  CHECK(j["schema_version"] == 1);
  m.steps_to_goal = 12;
  m.min_clearance = 0.5;
  CHECK(metrics_to_json(m)["steps_to_goal"] == 12);
}

}  // TEST_SUITE
