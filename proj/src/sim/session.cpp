#include "crumble/sim/session.hpp"

#include "crumble/agents/background.hpp"
#include "crumble/agents/market_maker.hpp"

namespace crumble::sim {

RunResult run_session(const RunConfig& cfg) {
  SimKernel kernel(cfg);
  AgentId next_id = 0;
  kernel.add_agent(std::make_unique<agents::MarketMaker>(
      next_id++, cfg.latency.market_maker, cfg.market_maker, cfg.fundamental.base_price,
      cfg.seed));
  for (int i = 0; i < cfg.noise.count; ++i) {
    kernel.add_agent(std::make_unique<agents::NoiseAgent>(next_id++, cfg.latency.background,
                                                          cfg.noise, cfg.seed));
  }
  for (int i = 0; i < cfg.value.count; ++i) {
    kernel.add_agent(std::make_unique<agents::ValueAgent>(next_id++, cfg.latency.background,
                                                          cfg.value, cfg.seed));
  }
  for (int i = 0; i < cfg.momentum.count; ++i) {
    kernel.add_agent(std::make_unique<agents::MomentumAgent>(next_id++, cfg.latency.background,
                                                             cfg.momentum, cfg.seed));
  }
  for (int i = 0; i < cfg.volatility.count; ++i) {
    kernel.add_agent(std::make_unique<agents::VolatilityAgent>(next_id++, cfg.latency.background,
                                                               cfg.volatility, cfg.seed));
  }
  return kernel.run();
}

}  // namespace crumble::sim
