#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "crumble/core/rng.hpp"
#include "crumble/sim/kernel.hpp"

namespace crumble::agents {

// Random market orders with Beta(1/2,1/2) arrival times over the session
// (U-shaped intraday volume) and fair-coin direction.
class NoiseAgent : public sim::Agent {
 public:
  NoiseAgent(AgentId id, TimeNs latency, const sim::NoiseCfg& cfg, std::uint64_t master_seed)
      : Agent(id, latency), cfg_(cfg), rng_(master_seed, static_cast<std::uint64_t>(id)) {}
  void start(sim::KernelApi& api) override;
  void on_wake(TimeNs now, sim::KernelApi& api) override;

 private:
  sim::NoiseCfg cfg_;
  Rng rng_;
};

// Noisy private signal of the fundamental; buys below and sells above its
// valuation, posting marketable limits when the signal crosses the touch.
class ValueAgent : public sim::Agent {
 public:
  ValueAgent(AgentId id, TimeNs latency, const sim::ValueCfg& cfg, std::uint64_t master_seed)
      : Agent(id, latency), cfg_(cfg), rng_(master_seed, static_cast<std::uint64_t>(id)) {}
  void start(sim::KernelApi& api) override;
  void on_wake(TimeNs now, sim::KernelApi& api) override;

  // Order decision given a valuation and a view; exposed for tests.
  struct Decision {
    Side side;
    PriceCents price;
  };
  static std::optional<Decision> decide(PriceCents valuation, const std::optional<sim::MarketView>& view,
                                        PriceCents empty_book_offset, bool buy_on_tie,
                                        PriceCents passive_depth);

 private:
  sim::ValueCfg cfg_;
  Rng rng_;
  std::optional<OrderId> resting_;
  Side resting_side_ = Side::Bid;
  PriceCents resting_price_ = 0;
};

// Short/long moving-average crossover on observed midprices.
class MomentumAgent : public sim::Agent {
 public:
  MomentumAgent(AgentId id, TimeNs latency, const sim::MomentumCfg& cfg, std::uint64_t master_seed)
      : Agent(id, latency), cfg_(cfg), rng_(master_seed, static_cast<std::uint64_t>(id)) {}
  void start(sim::KernelApi& api) override;
  void on_wake(TimeNs now, sim::KernelApi& api) override;

  // +1 buy, -1 sell, 0 hold; exact integer MA comparison over mid*2 values.
  static int crossover_signal(const std::deque<PriceCents>& mids_x2, int short_window,
                              int long_window);

 private:
  sim::MomentumCfg cfg_;
  Rng rng_;
  std::deque<PriceCents> mids_x2_;
};

// Trading intensity scaled by distance from midday: 1x at midday, 3x at the
// session edges.
double volatility_intensity_multiplier(TimeNs t, TimeNs open, TimeNs close);

class VolatilityAgent : public sim::Agent {
 public:
  VolatilityAgent(AgentId id, TimeNs latency, const sim::VolatilityCfg& cfg,
                  std::uint64_t master_seed)
      : Agent(id, latency), cfg_(cfg), rng_(master_seed, static_cast<std::uint64_t>(id)) {}
  void start(sim::KernelApi& api) override;
  void on_wake(TimeNs now, sim::KernelApi& api) override;

 private:
  sim::VolatilityCfg cfg_;
  Rng rng_;
};

}  // namespace crumble::agents
