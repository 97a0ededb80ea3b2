#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "crumble/core/types.hpp"
#include "crumble/lob/replay.hpp"

namespace crumble::detect {

struct DetectorParams {
  TimeNs depletion_lookback = 100 * kNsPerMs;  // lookback for queue-exhaustion checks
  double eps_queue = 0.05;                     // residual depth tolerance (fraction of Q_pre)
  double eps_leak = 0.10;                      // unexplained-removal tolerance
  double eps_add = 0.15;                       // replenishment cap during the lookback
  TimeNs cluster_gap = 200 * kNsPerMs;
  TimeNs max_duration = 2 * kNsPerSec;
  int min_steps = 4;
  TimeNs h_pre = 1 * kNsPerSec;
  TimeNs h_post = 1 * kNsPerSec;
  TimeNs h_ref = 1 * kNsPerSec;
  TimeNs h_rev = 3 * kNsPerSec;
  double kappa_miss = 0.05;
  double kappa_repr = 0.20;
  double kappa_eff = 5.0;       // ticks
  double kappa_eff_post = 8.0;  // ticks
  double kappa_opp = 5.0;       // ticks
  double kappa_rev = 0.6;
  double theta_wd = 2.0;
  double theta_sr = 1.0;
  double theta_epd = 6.0;
  double theta_id = 0.3;
  double theta_ds = 0.0;  // absolute fallback; normally percentile-calibrated
  double theta_rr = 0.0;  // absolute fallback; normally percentile-calibrated
  double threshold_percentile = 5.0;
  TimeNs ema_half_life = 1500 * kNsPerMs;
  double epsilon_seconds = 1e-9;  // duration regularizer
  double epsilon_volume = 1.0;    // volume-ratio regularizer (shares)
  double epsilon_price = 1e-9;    // reversion-ratio regularizer (cents)
};

struct DeteriorationStep {
  std::int64_t update_idx = 0;
  TimeNs ts = 0;
  Side side = Side::Bid;
  PriceCents pre_best = 0;
  PriceCents post_best = 0;
  int magnitude = 0;  // ticks, >= 1
  Qty q_pre = 0;      // depth at the pre-step best, left limit
  Qty q_post = 0;     // residual depth there after the step
  lob::FlowVolumes lookback;
};

struct FilterVerdict {
  bool book_consistency = false;
  bool eff_price = false;
  bool opposite_side = false;
  bool transience = false;
  bool all() const { return book_consistency && eff_price && opposite_side && transience; }
};

struct FeatureVector {
  double walk_depth = 0.0;
  double depletion_speed = 0.0;  // shares/s
  double refill_ratio = 0.0;
  double spread_response = 0.0;  // ticks
  double eff_displacement = 0.0;  // ticks, signed
  double impact_decay = 0.0;
  double temporal_gap = 0.0;     // recovery interval, s (labeler context)
  double temporal_count = 0.0;   // recent-event count
  double temporal_ds_sum = 0.0;  // cumulative depletion speed
};

struct CandidateEvent {
  int id = 0;
  Side side = Side::Bid;
  TimeNs t0 = 0;
  TimeNs t1 = 0;
  std::int64_t first_idx = 0;
  std::int64_t last_idx = 0;
  int n_steps = 0;
  std::vector<PriceCents> traversed;  // levels the best quote walked through
  FilterVerdict filters;
  bool gate = false;       // hard-filter eligibility F(e)
  bool features_ok = false;
  double rho_rev = 0.0;
  FeatureVector x;
  int label = 0;   // gated binary rule
  int target = 0;  // ground-truth supervision y_e
};

// Exponentially smoothed microprice over the update sequence (event-time EMA
// with a half-life in wall time; one-sided books carry the last value).
class EfficientPriceSeries {
 public:
  EfficientPriceSeries(const lob::ReplaySeries& series, TimeNs half_life);
  // Value after all updates at or before t; NaN before the first two-sided book.
  double after_time(TimeNs t) const;
  // Left limit at t.
  double before_time(TimeNs t) const { return after_time(t - 1); }
  double at_index(std::int64_t idx) const;

 private:
  const lob::ReplaySeries& series_;
  std::vector<double> value_;
};

struct StepRejects {
  std::int64_t raw = 0;       // best-quote deteriorations seen
  std::int64_t queue = 0;     // residual depth too high
  std::int64_t leak = 0;      // removals below the unexplained-loss bound
  std::int64_t add = 0;       // replenishment above the cap
};

std::vector<DeteriorationStep> detect_steps(const lob::ReplaySeries& series,
                                            const DetectorParams& params,
                                            StepRejects* rejects = nullptr);

std::vector<CandidateEvent> cluster_steps(const std::vector<DeteriorationStep>& steps,
                                          const DetectorParams& params);

struct DetectorRun {
  std::vector<DeteriorationStep> steps;
  std::vector<CandidateEvent> candidates;       // inside-session, features computed
  int boundary_dropped = 0;                      // too close to a session edge
  int degenerate_dropped = 0;                    // empty measurement window
  StepRejects rejects;
};

// Full pipeline on one session: steps, clusters, filters and features.
// Thresholds that are percentile-calibrated (theta_ds / theta_rr) are NOT
// applied here; labels are assigned via binary_label once calibrated.
DetectorRun run_detector(const lob::ReplaySeries& series, const DetectorParams& params,
                         TimeNs session_open, TimeNs session_close);

void apply_hard_filters(CandidateEvent& ev, const lob::ReplaySeries& series,
                        const EfficientPriceSeries& eff, const DetectorParams& params);
bool compute_features(CandidateEvent& ev, const lob::ReplaySeries& series,
                      const EfficientPriceSeries& eff, const DetectorParams& params);

// Linear-interpolation percentile (type-7 order statistics), shared with the
// scaler so every quantile in the system uses one convention.
double percentile_linear(std::vector<double> values, double pct);

// theta_f = empirical `pct` percentile of the feature over filter-passing
// events; falls back to the configured absolute defaults below `min_events`.
struct CalibratedThresholds {
  double theta_ds = 0.0;
  double theta_rr = 0.0;
  bool from_percentile = false;
};
CalibratedThresholds calibrate_percentile_thresholds(const std::vector<CandidateEvent>& events,
                                                     const DetectorParams& params,
                                                     int min_events = 20);

int binary_label(const CandidateEvent& ev, const DetectorParams& params,
                 const CalibratedThresholds& thresholds);

}  // namespace crumble::detect
