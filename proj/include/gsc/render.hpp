#pragma once

#include "gsc/scenario.hpp"

#include <string>

namespace gsc {

/// Top-down SVG of a rollout in the usual figure style: operator route
/// hypotheses red dashed, autonomy route hypotheses solid black, the executed
/// shared-control path blue with an arrowhead. Obstacles are drawn where they
/// stood at the first step, with their tracks if they moved; obstacles hidden
/// at the start are drawn as dashed outlines.
///
/// Output is byte-stable for a given (trace, spec): coordinates are printed
/// with a fixed precision and nothing depends on the clock or locale.
std::string render_svg(const Trace& trace, const ScenarioSpec& spec);

}  // namespace gsc
