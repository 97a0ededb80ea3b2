#include "crumble/sim/config.hpp"

#include <stdexcept>

#include <json.hpp>

namespace crumble::sim {

using nlohmann::ordered_json;

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Baseline: return "baseline";
    case Regime::Bull: return "bull";
    case Regime::Bear: return "bear";
    case Regime::HighVol: return "high_vol";
  }
  return "?";
}

const char* driver_name(RegimeDriver d) {
  return d == RegimeDriver::Bernoulli ? "bernoulli" : "hawkes";
}

Regime regime_from_name(const std::string& n) {
  if (n == "baseline") return Regime::Baseline;
  if (n == "bull") return Regime::Bull;
  if (n == "bear") return Regime::Bear;
  if (n == "high_vol") return Regime::HighVol;
  throw std::invalid_argument("unknown regime: " + n);
}

RegimeDriver driver_from_name(const std::string& n) {
  if (n == "bernoulli") return RegimeDriver::Bernoulli;
  if (n == "hawkes") return RegimeDriver::Hawkes;
  throw std::invalid_argument("unknown regime driver: " + n);
}

void RunConfig::apply_regime(Regime r) {
  regime = r;
  switch (r) {
    case Regime::Baseline:
      fundamental.drift_ticks_per_hour = 0.0;
      volatility.count = 0;
      break;
    case Regime::Bull:
      fundamental.drift_ticks_per_hour = 10.0;
      volatility.count = 0;
      break;
    case Regime::Bear:
      fundamental.drift_ticks_per_hour = -10.0;
      volatility.count = 0;
      break;
    case Regime::HighVol:
      fundamental.drift_ticks_per_hour = 0.0;
      volatility.count = 50;
      break;
  }
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["session"] = {{"open_ns", session_open}, {"close_ns", session_close}};
  j["seed"] = seed;
  j["regime"] = regime_name(regime);
  j["fundamental"] = {{"base_price", fundamental.base_price},
                      {"mean_reversion_per_s", fundamental.mean_reversion_per_s},
                      {"vol_ticks_per_sqrt_s", fundamental.vol_ticks_per_sqrt_s},
                      {"drift_ticks_per_hour", fundamental.drift_ticks_per_hour},
                      {"jumps_per_hour", fundamental.jumps_per_hour},
                      {"jump_ticks_min", fundamental.jump_ticks_min},
                      {"jump_ticks_max", fundamental.jump_ticks_max},
                      {"grid_step_ns", fundamental.grid_step}};
  j["noise"] = {{"count", noise.count},
                {"orders_per_agent_per_hour", noise.orders_per_agent_per_hour},
                {"size_min", noise.size_min},
                {"size_max", noise.size_max}};
  j["value"] = {{"count", value.count},
                {"wake_rate_per_s", value.wake_rate_per_s},
                {"signal_noise_ticks", value.signal_noise_ticks},
                {"order_size", value.order_size},
                {"empty_book_offset", value.empty_book_offset},
                {"passive_depth_min", value.passive_depth_min},
                {"passive_depth_max", value.passive_depth_max}};
  j["momentum"] = {{"count", momentum.count},
                   {"short_window", momentum.short_window},
                   {"long_window", momentum.long_window},
                   {"wake_rate_per_s", momentum.wake_rate_per_s},
                   {"order_size", momentum.order_size}};
  j["volatility"] = {{"count", volatility.count},
                     {"base_wake_rate_per_s", volatility.base_wake_rate_per_s},
                     {"size_multiplier", volatility.size_multiplier},
                     {"momentum_bias_prob", volatility.momentum_bias_prob},
                     {"size_min", volatility.size_min},
                     {"size_max", volatility.size_max}};
  j["market_maker"] = {{"levels", market_maker.levels},
                       {"participation", market_maker.participation},
                       {"wake_interval_ns", market_maker.wake_interval},
                       {"beta_min", market_maker.beta_min},
                       {"beta_max", market_maker.beta_max},
                       {"switch_prob", market_maker.switch_prob},
                       {"hold_window_ns", market_maker.hold_window},
                       {"pov_window_ns", market_maker.pov_window},
                       {"min_total_size", market_maker.min_total_size},
                       {"size_quantum", market_maker.size_quantum},
                       {"improve_fraction", market_maker.improve_fraction},
                       {"anchor_half_life_ns", market_maker.anchor_half_life},
                       {"driver", driver_name(market_maker.driver)},
                       {"hawkes",
                        {{"base_rate", market_maker.hawkes.base_rate},
                         {"excitation", market_maker.hawkes.excitation},
                         {"decay_per_s", market_maker.hawkes.decay_per_s},
                         {"max_rate", market_maker.hawkes.max_rate}}}};
  j["latency"] = {{"market_maker_ns", latency.market_maker},
                  {"background_ns", latency.background}};
  j["ground_truth"] = {{"xi", xi}, {"merge_gap_ns", truth_merge_gap}};
  j["snapshot_levels"] = snapshot_levels;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  const auto j = ordered_json::parse(text);
  RunConfig c;
  if (j.contains("session")) {
    c.session_open = j["session"].value("open_ns", c.session_open);
    c.session_close = j["session"].value("close_ns", c.session_close);
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("regime")) c.regime = regime_from_name(j["regime"].get<std::string>());
  if (j.contains("fundamental")) {
    const auto& f = j["fundamental"];
    c.fundamental.base_price = f.value("base_price", c.fundamental.base_price);
    c.fundamental.mean_reversion_per_s =
        f.value("mean_reversion_per_s", c.fundamental.mean_reversion_per_s);
    c.fundamental.vol_ticks_per_sqrt_s =
        f.value("vol_ticks_per_sqrt_s", c.fundamental.vol_ticks_per_sqrt_s);
    c.fundamental.drift_ticks_per_hour =
        f.value("drift_ticks_per_hour", c.fundamental.drift_ticks_per_hour);
    c.fundamental.jumps_per_hour = f.value("jumps_per_hour", c.fundamental.jumps_per_hour);
    c.fundamental.jump_ticks_min = f.value("jump_ticks_min", c.fundamental.jump_ticks_min);
    c.fundamental.jump_ticks_max = f.value("jump_ticks_max", c.fundamental.jump_ticks_max);
    c.fundamental.grid_step = f.value("grid_step_ns", c.fundamental.grid_step);
  }
  if (j.contains("noise")) {
    const auto& f = j["noise"];
    c.noise.count = f.value("count", c.noise.count);
    c.noise.orders_per_agent_per_hour =
        f.value("orders_per_agent_per_hour", c.noise.orders_per_agent_per_hour);
    c.noise.size_min = f.value("size_min", c.noise.size_min);
    c.noise.size_max = f.value("size_max", c.noise.size_max);
  }
  if (j.contains("value")) {
    const auto& f = j["value"];
    c.value.count = f.value("count", c.value.count);
    c.value.wake_rate_per_s = f.value("wake_rate_per_s", c.value.wake_rate_per_s);
    c.value.signal_noise_ticks = f.value("signal_noise_ticks", c.value.signal_noise_ticks);
    c.value.order_size = f.value("order_size", c.value.order_size);
    c.value.empty_book_offset = f.value("empty_book_offset", c.value.empty_book_offset);
    c.value.passive_depth_min = f.value("passive_depth_min", c.value.passive_depth_min);
    c.value.passive_depth_max = f.value("passive_depth_max", c.value.passive_depth_max);
  }
  if (j.contains("momentum")) {
    const auto& f = j["momentum"];
    c.momentum.count = f.value("count", c.momentum.count);
    c.momentum.short_window = f.value("short_window", c.momentum.short_window);
    c.momentum.long_window = f.value("long_window", c.momentum.long_window);
    c.momentum.wake_rate_per_s = f.value("wake_rate_per_s", c.momentum.wake_rate_per_s);
    c.momentum.order_size = f.value("order_size", c.momentum.order_size);
  }
  if (j.contains("volatility")) {
    const auto& f = j["volatility"];
    c.volatility.count = f.value("count", c.volatility.count);
    c.volatility.base_wake_rate_per_s =
        f.value("base_wake_rate_per_s", c.volatility.base_wake_rate_per_s);
    c.volatility.size_multiplier = f.value("size_multiplier", c.volatility.size_multiplier);
    c.volatility.momentum_bias_prob =
        f.value("momentum_bias_prob", c.volatility.momentum_bias_prob);
    c.volatility.size_min = f.value("size_min", c.volatility.size_min);
    c.volatility.size_max = f.value("size_max", c.volatility.size_max);
  }
  if (j.contains("market_maker")) {
    const auto& f = j["market_maker"];
    c.market_maker.levels = f.value("levels", c.market_maker.levels);
    c.market_maker.participation = f.value("participation", c.market_maker.participation);
    c.market_maker.wake_interval = f.value("wake_interval_ns", c.market_maker.wake_interval);
    c.market_maker.beta_min = f.value("beta_min", c.market_maker.beta_min);
    c.market_maker.beta_max = f.value("beta_max", c.market_maker.beta_max);
    c.market_maker.switch_prob = f.value("switch_prob", c.market_maker.switch_prob);
    c.market_maker.hold_window = f.value("hold_window_ns", c.market_maker.hold_window);
    c.market_maker.pov_window = f.value("pov_window_ns", c.market_maker.pov_window);
    c.market_maker.min_total_size = f.value("min_total_size", c.market_maker.min_total_size);
    c.market_maker.size_quantum = f.value("size_quantum", c.market_maker.size_quantum);
    c.market_maker.improve_fraction = f.value("improve_fraction", c.market_maker.improve_fraction);
    c.market_maker.anchor_half_life = f.value("anchor_half_life_ns", c.market_maker.anchor_half_life);
    if (f.contains("driver"))
      c.market_maker.driver = driver_from_name(f["driver"].get<std::string>());
    if (f.contains("hawkes")) {
      const auto& h = f["hawkes"];
      c.market_maker.hawkes.base_rate = h.value("base_rate", c.market_maker.hawkes.base_rate);
      c.market_maker.hawkes.excitation = h.value("excitation", c.market_maker.hawkes.excitation);
      c.market_maker.hawkes.decay_per_s = h.value("decay_per_s", c.market_maker.hawkes.decay_per_s);
      c.market_maker.hawkes.max_rate = h.value("max_rate", c.market_maker.hawkes.max_rate);
    }
  }
  if (j.contains("latency")) {
    c.latency.market_maker = j["latency"].value("market_maker_ns", c.latency.market_maker);
    c.latency.background = j["latency"].value("background_ns", c.latency.background);
  }
  if (j.contains("ground_truth")) {
    c.xi = j["ground_truth"].value("xi", c.xi);
    c.truth_merge_gap = j["ground_truth"].value("merge_gap_ns", c.truth_merge_gap);
  }
  c.snapshot_levels = j.value("snapshot_levels", c.snapshot_levels);
  return c;
}

}  // namespace crumble::sim
