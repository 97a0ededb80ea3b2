#pragma once

#include "crumble/sim/kernel.hpp"

namespace crumble::sim {

// Builds the configured agent population (market maker first, then noise,
// value, momentum, volatility agents) and runs one session.
RunResult run_session(const RunConfig& cfg);

}  // namespace crumble::sim
