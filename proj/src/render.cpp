#include "gsc/render.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>

namespace gsc {
namespace {

constexpr double kPixelsPerMetre = 20.0;
constexpr double kMargin = 1.0;  // metres around the drawn extent

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  explicit Canvas(const Rect& extent) : extent_(extent) {}

  double x(double wx) const { return (wx - extent_.min.x()) * kPixelsPerMetre; }
  double y(double wy) const { return (extent_.max.y() - wy) * kPixelsPerMetre; }
  double len(double metres) const { return metres * kPixelsPerMetre; }
  double width() const { return len(extent_.max.x() - extent_.min.x()); }
  double height() const { return len(extent_.max.y() - extent_.min.y()); }

  std::string point(const Vec2& p) const { return num(x(p.x())) + "," + num(y(p.y())); }

  std::string points(const std::vector<Vec2>& pts) const {
    std::string out;
    for (const auto& p : pts) {
      if (!out.empty()) out += ' ';
      out += point(p);
    }
    return out;
  }

 private:
  Rect extent_;
};

Rect drawn_extent(const Trace& trace, const ScenarioSpec& spec) {
  const Rect& b = spec.world.bounds;
  if ((b.max - b.min).minCoeff() > 0.0) return b;
  // No usable bounds: fit everything that will be drawn.
  Vec2 lo = spec.world.goal;
  Vec2 hi = spec.world.goal;
  auto grow = [&](const Vec2& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& r : trace.records) {
    grow(r.robot);
    for (const auto& o : r.obstacles) grow(o.position);
  }
  for (const auto* routes : {&spec.operator_hypotheses, &spec.autonomy_hypotheses}) {
    for (const auto& route : *routes) {
      for (const auto& p : route.waypoints) grow(p);
    }
  }
  for (const auto& r : spec.world.regions) {
    grow(r.area.min);
    grow(r.area.max);
  }
  const Vec2 pad = Vec2::Constant(kMargin);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string render_svg(const Trace& trace, const ScenarioSpec& spec) {
  const Canvas c(drawn_extent(trace, spec));
  std::string svg;
  auto line = [&](const std::string& s) { svg += s + "\n"; };

  line("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(c.width()) + "\" height=\"" +
       num(c.height()) + "\" viewBox=\"0 0 " + num(c.width()) + " " + num(c.height()) + "\">");
  line("  <title>" + escape(spec.id) + "</title>");
  line("  <defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" "
       "markerHeight=\"6\" orient=\"auto-start-reverse\"><path d=\"M 0 0 L 10 5 L 0 10 z\" "
       "fill=\"#1f77b4\"/></marker></defs>");
  line("  <rect x=\"0\" y=\"0\" width=\"" + num(c.width()) + "\" height=\"" + num(c.height()) +
       "\" fill=\"#ffffff\"/>");

  for (const auto& r : spec.world.regions) {
    const double x0 = c.x(r.area.min.x());
    const double y0 = c.y(r.area.max.y());
    line("  <rect class=\"region\" x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" +
         num(c.len(r.area.max.x() - r.area.min.x())) + "\" height=\"" +
         num(c.len(r.area.max.y() - r.area.min.y())) + "\" fill=\"#fde9a9\" stroke=\"#c9a227\"/>");
    line("  <text class=\"region-label\" x=\"" + num(x0 + 2.0) + "\" y=\"" + num(y0 + 12.0) +
         "\" font-size=\"10\" fill=\"#8a6d0b\">" + escape(r.name) + "</text>");
  }

  line("  <circle class=\"goal\" cx=\"" + num(c.x(spec.world.goal.x())) + "\" cy=\"" +
       num(c.y(spec.world.goal.y())) + "\" r=\"" + num(c.len(spec.world.goal_radius)) +
       "\" fill=\"none\" stroke=\"#2a9d3a\" stroke-width=\"2\"/>");

  // Obstacles as first seen in the trace, plus the path each one travelled.
  if (!trace.records.empty()) {
    std::map<int, std::vector<Vec2>> tracks;
    for (const auto& r : trace.records) {
      for (const auto& o : r.obstacles) tracks[o.id].push_back(o.position);
    }
    for (const auto& [id, track] : tracks) {
      if ((track.back() - track.front()).norm() <= 1e-9) continue;
      std::string d;
      for (std::size_t i = 0; i < track.size(); ++i) {
        d += (i == 0 ? "M " : " L ") + num(c.x(track[i].x())) + " " + num(c.y(track[i].y()));
      }
      line("  <path class=\"obstacle-track\" d=\"" + d +
           "\" fill=\"none\" stroke=\"#999999\" stroke-width=\"1\"/>");
    }
    for (const auto& o : trace.records.front().obstacles) {
      const std::string shape = "cx=\"" + num(c.x(o.position.x())) + "\" cy=\"" + num(c.y(o.position.y())) +
                                "\" r=\"" + num(c.len(o.radius)) + "\"";
      if (o.visible) {
        line("  <circle class=\"obstacle\" " + shape + " fill=\"#777777\"/>");
      } else {
        line("  <circle class=\"obstacle occluded\" " + shape +
             " fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"3 3\"/>");
      }
    }
  }

  for (const auto& route : spec.operator_hypotheses) {
    line("  <polyline class=\"operator-mode\" data-label=\"" + escape(route.label) + "\" points=\"" +
         c.points(route.waypoints) +
         "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"8 5\"/>");
  }
  for (const auto& route : spec.autonomy_hypotheses) {
    line("  <polyline class=\"autonomy-mode\" data-label=\"" + escape(route.label) + "\" points=\"" +
         c.points(route.waypoints) + "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\"/>");
  }

  if (!trace.records.empty()) {
    std::vector<Vec2> path;
    for (const auto& r : trace.records) path.push_back(r.robot);
    line("  <polyline class=\"robot-path\" points=\"" + c.points(path) +
         "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2.5\" marker-end=\"url(#arrow)\"/>");
    const auto& last = trace.records.back();
    line("  <circle class=\"robot\" cx=\"" + num(c.x(last.robot.x())) + "\" cy=\"" +
         num(c.y(last.robot.y())) + "\" r=\"" + num(c.len(last.robot_radius)) +
         "\" fill=\"#1f77b4\" fill-opacity=\"0.4\"/>");
  }
  line("</svg>");
  return svg;
}

}  // namespace gsc
