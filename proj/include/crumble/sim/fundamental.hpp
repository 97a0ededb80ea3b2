#pragma once

#include <vector>

#include "crumble/core/rng.hpp"
#include "crumble/core/types.hpp"
#include "crumble/sim/config.hpp"

namespace crumble::sim {

// Mean-reverting fundamental value on a fixed time grid, plus a linear drift
// term. The whole path is drawn up front from the seed, so the value at any
// query time is independent of query order.
class FundamentalProcess {
 public:
  FundamentalProcess(const FundamentalCfg& cfg, TimeNs open, TimeNs close, std::uint64_t seed);

  // Grid value at t, rounded to the cent grid. Throws outside the session.
  PriceCents value_at(TimeNs t) const;

  // Deviation from the drift path in ticks (diagnostics / tests).
  double deviation_at(TimeNs t) const;
  double drift_ticks_at(TimeNs t) const;

 private:
  std::size_t grid_index(TimeNs t) const;
  FundamentalCfg cfg_;
  TimeNs open_;
  TimeNs close_;
  std::vector<double> deviation_;  // OU deviation per grid point
};

}  // namespace crumble::sim
