#pragma once

#include <cstdint>
#include <string>

#include "crumble/core/types.hpp"

namespace crumble::sim {

enum class Regime { Baseline, Bull, Bear, HighVol };
enum class RegimeDriver { Bernoulli, Hawkes };

const char* regime_name(Regime r);
const char* driver_name(RegimeDriver d);
Regime regime_from_name(const std::string& n);
RegimeDriver driver_from_name(const std::string& n);

struct FundamentalCfg {
  PriceCents base_price = 10000;      // $100.00
  double mean_reversion_per_s = 0.01;
  double vol_ticks_per_sqrt_s = 1.0;
  double drift_ticks_per_hour = 0.0;  // regime-dependent
  // Poisson jump shocks: permanent value shifts the detector must learn to
  // tell apart from mechanical withdrawal.
  double jumps_per_hour = 120.0;
  int jump_ticks_min = 4;
  int jump_ticks_max = 12;
  TimeNs grid_step = 100 * kNsPerMs;
};

struct NoiseCfg {
  int count = 150;
  double orders_per_agent_per_hour = 1260.0;
  Qty size_min = 10;
  Qty size_max = 60;
};

struct ValueCfg {
  int count = 100;
  double wake_rate_per_s = 0.1;
  double signal_noise_ticks = 10.0;
  Qty order_size = 35;
  PriceCents empty_book_offset = 2;
  PriceCents passive_depth_min = 2;  // passive orders rest this..max ticks behind
  PriceCents passive_depth_max = 5;
};

struct MomentumCfg {
  int count = 5;
  int short_window = 20;
  int long_window = 50;
  double wake_rate_per_s = 1.0;
  Qty order_size = 40;
};

struct VolatilityCfg {
  int count = 0;  // 50 in the high-volatility regime
  double base_wake_rate_per_s = 0.1;
  double size_multiplier = 3.0;
  double momentum_bias_prob = 0.7;
  Qty size_min = 10;
  Qty size_max = 100;
};

struct HawkesCfg {
  double base_rate = 0.03;   // events/s
  double excitation = 0.20;
  double decay_per_s = 0.08;
  double max_rate = 0.3;     // stabilizes the supercritical kernel; low
                             // enough that excited episodes die out
};

struct MarketMakerCfg {
  int levels = 10;
  double participation = 0.025;
  TimeNs wake_interval = 100 * kNsPerMs;
  double beta_min = 0.1;
  double beta_max = 0.9;
  double switch_prob = 0.05;
  TimeNs hold_window = 1 * kNsPerSec;
  TimeNs pov_window = 60 * kNsPerSec;
  Qty min_total_size = 2500;  // POV floor; keeps per-level depth near the
                              // typical market-order size at desk scale
  Qty size_quantum = 100;     // quote size rounded to this, so targets are
                              // stable between regime switches
  double improve_fraction = 0.40;  // a side allocated less than this never
                                   // improves the touch (withdrawal mode)
  TimeNs anchor_half_life = 1 * kNsPerSec;  // smoothing of the quoting
                                            // anchor; keeps the book pinned
                                            // through transient dislocations
  RegimeDriver driver = RegimeDriver::Bernoulli;
  HawkesCfg hawkes;
};

struct LatencyCfg {
  TimeNs market_maker = 100 * kNsPerUs;  // 100 us
  TimeNs background = 1 * kNsPerMs;      // 1 ms
};

struct RunConfig {
  TimeNs session_open = 0;
  TimeNs session_close = 2 * 3600 * kNsPerSec;  // desk scale; --full uses 6.5 h
  std::uint64_t seed = 1;
  Regime regime = Regime::Baseline;
  FundamentalCfg fundamental;
  NoiseCfg noise;
  ValueCfg value;
  MomentumCfg momentum;
  VolatilityCfg volatility;
  MarketMakerCfg market_maker;
  LatencyCfg latency;
  double xi = 0.15;                      // ground-truth indicator threshold
  TimeNs truth_merge_gap = 200 * kNsPerMs;
  int snapshot_levels = 10;

  // Applies the regime's drift / volatility-agent adjustments.
  void apply_regime(Regime r);

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
};

}  // namespace crumble::sim
