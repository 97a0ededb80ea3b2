#pragma once

#include <algorithm>
#include <cmath>

#include "crumble/core/types.hpp"
#include "crumble/sim/config.hpp"

namespace crumble::agents {

// Exponential-kernel self-exciting intensity
//   lambda(t) = lambda0 + sum_{t_i < t} gamma * exp(-omega (t - t_i)),
// maintained recursively in O(1) per query. Query times must be
// non-decreasing; events are recorded after the intensity at their instant
// is observed, so an event exactly at t contributes from t onward.
// `time_unit` sets the clock the rate and decay are expressed in.
class HawkesIntensity {
 public:
  explicit HawkesIntensity(const sim::HawkesCfg& cfg, TimeNs time_unit = kNsPerSec)
      : cfg_(cfg), unit_(time_unit) {}

  double intensity_at(TimeNs t) {
    decay_to(t);
    return std::min(cfg_.base_rate + excitation_, cfg_.max_rate);
  }

  void add_event(TimeNs t) {
    decay_to(t);
    excitation_ += cfg_.excitation;
  }

 private:
  void decay_to(TimeNs t) {
    if (t > last_) {
      const double lag = static_cast<double>(t - last_) / static_cast<double>(unit_);
      excitation_ *= std::exp(-cfg_.decay_per_s * lag);
      last_ = t;
    }
  }
  sim::HawkesCfg cfg_;
  TimeNs unit_;
  double excitation_ = 0.0;
  TimeNs last_ = 0;
};

}  // namespace crumble::agents
