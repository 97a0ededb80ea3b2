#pragma once

#include <map>
#include <optional>
#include <vector>

#include "crumble/agents/hawkes.hpp"
#include "crumble/core/rng.hpp"
#include "crumble/sim/kernel.hpp"

namespace crumble::agents {

// Skew state shared by both regime drivers: beta is resampled on a switch,
// held for the hold window, and reverts to neutral (0.5) otherwise.
struct RegimeState {
  double beta = 0.5;
  TimeNs hold_until = 0;
  bool switched = false;  // updated by the last step
};

// Memoryless driver: outside a hold window, a Bernoulli(switch_prob) trial
// resamples beta uniformly from [beta_min, beta_max].
RegimeState regime_step_bernoulli(const sim::MarketMakerCfg& cfg, Rng& rng, TimeNs now,
                                  RegimeState state);

// Self-exciting driver: switch probability min(1, lambda(t) * dt) from the
// exponential-kernel intensity over past switch times.
RegimeState regime_step_hawkes(const sim::MarketMakerCfg& cfg, HawkesIntensity& intensity,
                               Rng& rng, TimeNs now, TimeNs prev_wake, RegimeState state);

// Ladder of (price, quantity) targets for one side: `total` split uniformly
// across `levels` prices starting at `anchor` and walking away from the
// touch, remainder to the innermost levels. Empty when total == 0.
std::vector<std::pair<PriceCents, Qty>> quote_ladder(Side side, PriceCents anchor, Qty total,
                                                     int levels);

// Side totals from the skew: ask = round(beta * total), bid = the rest.
std::pair<Qty, Qty> split_quote_size(double beta, Qty total);

// Percent-of-volume market maker with regime-switching skew, quoting L
// levels per side around the mid. A side whose allocation fraction falls
// under `improve_fraction` is in withdrawal mode: its ladder follows the
// touch outward but never improves it, so the thinned side deteriorates
// instead of being repaired by its own maker. Per wake the target ladder is
// diffed against live orders and only changed levels are touched, keeping
// the age of resting depth (a full cancel/repost would mark every level as
// freshly added within any depletion lookback).
class MarketMaker : public sim::Agent {
 public:
  MarketMaker(AgentId id, TimeNs latency, const sim::MarketMakerCfg& cfg,
              PriceCents fallback_mid, std::uint64_t master_seed)
      : Agent(id, latency),
        cfg_(cfg),
        fallback_mid_(fallback_mid),
        rng_(master_seed, static_cast<std::uint64_t>(id) ^ 0x4d4dULL),
        hawkes_(cfg.hawkes) {}

  void start(sim::KernelApi& api) override;
  void on_wake(TimeNs now, sim::KernelApi& api) override;
  void on_fill(OrderId id, PriceCents price, Qty qty) override;
  bool wants_fill_notices() const override { return true; }

 private:
  struct LiveOrder {
    Side side;
    PriceCents price;
    Qty qty;
  };

  sim::MarketMakerCfg cfg_;
  PriceCents fallback_mid_;
  Rng rng_;
  HawkesIntensity hawkes_;
  RegimeState regime_;
  TimeNs prev_wake_ = 0;
  bool first_wake_ = true;
  std::map<OrderId, LiveOrder> live_;
  double anchor_mid_x2_ = 0.0;
  std::optional<PriceCents> frozen_bid_anchor_;
  std::optional<PriceCents> frozen_ask_anchor_;
};

}  // namespace crumble::agents
