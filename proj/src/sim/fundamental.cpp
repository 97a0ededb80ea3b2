#include "crumble/sim/fundamental.hpp"

#include <cmath>
#include <stdexcept>

namespace crumble::sim {

FundamentalProcess::FundamentalProcess(const FundamentalCfg& cfg, TimeNs open, TimeNs close,
                                       std::uint64_t seed)
    : cfg_(cfg), open_(open), close_(close) {
  const auto steps = static_cast<std::size_t>((close - open) / cfg.grid_step) + 1;
  deviation_.resize(steps + 1, 0.0);
  Rng rng(seed, /*stream_id=*/0x46554e44ULL);
  const double dt = seconds(cfg.grid_step);
  const double theta = cfg.mean_reversion_per_s;
  const double sigma = cfg.vol_ticks_per_sqrt_s;
  double decay = 1.0, step_sd = sigma * std::sqrt(dt);
  if (theta > 0.0) {
    decay = std::exp(-theta * dt);
    step_sd = sigma * std::sqrt((1.0 - decay * decay) / (2.0 * theta));
  }
  double x = 0.0;
  for (std::size_t i = 1; i < deviation_.size(); ++i) {
    x = x * decay + step_sd * rng.normal();
    deviation_[i] = x;
  }
  // Jump shocks: permanent shifts layered on top of the mean-reverting part.
  if (cfg.jumps_per_hour > 0.0) {
    Rng jump_rng(seed, /*stream_id=*/0x4a554d50ULL);
    const double rate_per_s = cfg.jumps_per_hour / 3600.0;
    double t = seconds(close - open) + 1.0;
    std::vector<std::pair<double, double>> jumps;
    for (double at = jump_rng.exponential(rate_per_s); at < seconds(close - open);
         at += jump_rng.exponential(rate_per_s)) {
      const double mag = static_cast<double>(
          jump_rng.uniform_int(cfg.jump_ticks_min, cfg.jump_ticks_max));
      jumps.emplace_back(at, jump_rng.bernoulli(0.5) ? mag : -mag);
    }
    (void)t;
    double shift = 0.0;
    std::size_t next = 0;
    const double dt = seconds(cfg.grid_step);
    for (std::size_t i = 0; i < deviation_.size(); ++i) {
      const double now = static_cast<double>(i) * dt;
      while (next < jumps.size() && jumps[next].first <= now) shift += jumps[next++].second;
      deviation_[i] += shift;
    }
  }
}

std::size_t FundamentalProcess::grid_index(TimeNs t) const {
  if (t < open_ || t > close_) throw std::out_of_range("fundamental query outside session");
  return static_cast<std::size_t>((t - open_) / cfg_.grid_step);
}

double FundamentalProcess::deviation_at(TimeNs t) const { return deviation_[grid_index(t)]; }

double FundamentalProcess::drift_ticks_at(TimeNs t) const {
  const double hours = seconds(t - open_) / 3600.0;
  return cfg_.drift_ticks_per_hour * hours;
}

PriceCents FundamentalProcess::value_at(TimeNs t) const {
  const double v = static_cast<double>(cfg_.base_price) + drift_ticks_at(t) + deviation_at(t);
  return static_cast<PriceCents>(std::llround(v));
}

}  // namespace crumble::sim
