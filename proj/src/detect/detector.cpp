#include "crumble/detect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace crumble::detect {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Step-function samples over (a, b]: the value prevailing at a plus every
// defined update value in the window. `get` returns NaN when undefined.
template <typename F>
std::vector<double> window_samples(const lob::ReplaySeries& series, TimeNs a, TimeNs b, F get) {
  std::vector<double> out;
  const std::int64_t ia = series.index_at_or_before(a);
  const std::int64_t ib = series.index_at_or_before(b);
  for (std::int64_t i = ia; i >= 0; --i) {
    const double v = get(series.updates()[static_cast<std::size_t>(i)]);
    if (!std::isnan(v)) {
      out.push_back(v);
      break;
    }
  }
  for (std::int64_t i = ia + 1; i <= ib; ++i) {
    const double v = get(series.updates()[static_cast<std::size_t>(i)]);
    if (!std::isnan(v)) out.push_back(v);
  }
  return out;
}

double mid_of(const lob::UpdateRow& r) {
  if (!r.has_bid || !r.has_ask) return kNaN;
  return 0.5 * static_cast<double>(r.bid + r.ask);
}

double spread_of(const lob::UpdateRow& r) {
  if (!r.has_bid || !r.has_ask) return kNaN;
  return static_cast<double>(r.ask - r.bid);
}

double best_of(const lob::UpdateRow& r, Side s) {
  if (s == Side::Bid) return r.has_bid ? static_cast<double>(r.bid) : kNaN;
  return r.has_ask ? static_cast<double>(r.ask) : kNaN;
}

// Last defined best quote on side s at or before time t.
double carried_best(const lob::ReplaySeries& series, Side s, TimeNs t) {
  for (std::int64_t i = series.index_at_or_before(t); i >= 0; --i) {
    const double v = best_of(series.updates()[static_cast<std::size_t>(i)], s);
    if (!std::isnan(v)) return v;
  }
  return kNaN;
}

}  // namespace

EfficientPriceSeries::EfficientPriceSeries(const lob::ReplaySeries& series, TimeNs half_life)
    : series_(series) {
  value_.resize(series.size(), kNaN);
  double ema = kNaN;
  TimeNs last_ts = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& r = series.updates()[i];
    if (r.has_bid && r.has_ask) {
      const double denom = static_cast<double>(r.d1_bid + r.d1_ask);
      const double micro = (static_cast<double>(r.ask) * static_cast<double>(r.d1_bid) +
                            static_cast<double>(r.bid) * static_cast<double>(r.d1_ask)) /
                           denom;
      if (std::isnan(ema)) {
        ema = micro;
      } else {
        const double w = std::exp2(-static_cast<double>(r.ts - last_ts) /
                                   static_cast<double>(half_life));
        ema = micro + (ema - micro) * w;
      }
      last_ts = r.ts;
    }
    value_[i] = ema;  // one-sided books carry the last value
  }
}

double EfficientPriceSeries::at_index(std::int64_t idx) const {
  if (idx < 0) return kNaN;
  if (idx >= static_cast<std::int64_t>(value_.size())) idx = static_cast<std::int64_t>(value_.size()) - 1;
  return value_[static_cast<std::size_t>(idx)];
}

double EfficientPriceSeries::after_time(TimeNs t) const {
  return at_index(series_.index_at_or_before(t));
}

std::vector<DeteriorationStep> detect_steps(const lob::ReplaySeries& series,
                                            const DetectorParams& params,
                                            StepRejects* rejects) {
  std::vector<DeteriorationStep> out;
  const auto& rows = series.updates();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& pre = rows[i - 1];
    const auto& post = rows[i];
    for (const Side side : {Side::Bid, Side::Ask}) {
      const bool pre_ok = side == Side::Bid ? pre.has_bid : pre.has_ask;
      const bool post_ok = side == Side::Bid ? post.has_bid : post.has_ask;
      if (!pre_ok || !post_ok) continue;  // quote undefined: no step
      const PriceCents p_pre = side == Side::Bid ? pre.bid : pre.ask;
      const PriceCents p_post = side == Side::Bid ? post.bid : post.ask;
      const auto d = static_cast<int>(deterioration_sign(side) * (p_post - p_pre));
      if (d < 1) continue;

      const auto idx = static_cast<std::int64_t>(i);
      const Qty q_pre = series.depth_at_index(side, p_pre, idx - 1);
      const Qty q_post = series.depth_at_index(side, p_pre, idx);
      if (q_pre <= 0) continue;
      // Lookback (t_i - lookback, t_i] resolved in update indices.
      const std::int64_t j0 = series.index_at_or_before(post.ts - params.depletion_lookback);
      const lob::FlowVolumes fl = series.flow_between(side, p_pre, j0, idx);
      const double qpre = static_cast<double>(q_pre);
      const bool exhausted = static_cast<double>(q_post) <= params.eps_queue * qpre;
      const bool removed = static_cast<double>(fl.canceled + fl.executed) >=
                           (1.0 - params.eps_leak) * qpre;
      const bool no_refill = static_cast<double>(fl.added) <= params.eps_add * qpre;
      if (rejects) {
        ++rejects->raw;
        if (!exhausted) ++rejects->queue;
        if (!removed) ++rejects->leak;
        if (!no_refill) ++rejects->add;
      }
      if (!(exhausted && removed && no_refill)) continue;

      DeteriorationStep st;
      st.update_idx = idx;
      st.ts = post.ts;
      st.side = side;
      st.pre_best = p_pre;
      st.post_best = p_post;
      st.magnitude = d;
      st.q_pre = q_pre;
      st.q_post = q_post;
      st.lookback = fl;
      out.push_back(st);
    }
  }
  return out;
}

std::vector<CandidateEvent> cluster_steps(const std::vector<DeteriorationStep>& steps,
                                          const DetectorParams& params) {
  std::vector<CandidateEvent> events;
  for (const Side side : {Side::Bid, Side::Ask}) {
    std::vector<const DeteriorationStep*> run;
    auto flush = [&]() {
      if (static_cast<int>(run.size()) >= params.min_steps) {
        CandidateEvent ev;
        ev.side = side;
        ev.t0 = run.front()->ts;
        ev.t1 = run.back()->ts;
        ev.first_idx = run.front()->update_idx;
        ev.last_idx = run.back()->update_idx;
        ev.n_steps = static_cast<int>(run.size());
        events.push_back(std::move(ev));
      }
      run.clear();
    };
    for (const auto& st : steps) {
      if (st.side != side) continue;
      if (!run.empty()) {
        const bool gap_ok = st.ts - run.back()->ts <= params.cluster_gap;
        const bool dur_ok = st.ts - run.front()->ts <= params.max_duration;
        if (!gap_ok || !dur_ok) flush();
      }
      run.push_back(&st);
    }
    flush();
  }
  std::sort(events.begin(), events.end(), [](const CandidateEvent& a, const CandidateEvent& b) {
    if (a.t0 != b.t0) return a.t0 < b.t0;
    return a.side < b.side;
  });
  for (std::size_t i = 0; i < events.size(); ++i) events[i].id = static_cast<int>(i);
  return events;
}

namespace {

// Distinct best-quote levels on the event side over update indices
// [first_idx-1, last_idx-1], minus the resting post-event best.
std::vector<PriceCents> traversed_levels(const CandidateEvent& ev,
                                         const lob::ReplaySeries& series) {
  std::set<PriceCents> levels;
  const auto& rows = series.updates();
  for (std::int64_t i = std::max<std::int64_t>(0, ev.first_idx - 1); i < ev.last_idx; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (ev.side == Side::Bid) {
      if (r.has_bid) levels.insert(r.bid);
    } else {
      if (r.has_ask) levels.insert(r.ask);
    }
  }
  const auto& last = rows[static_cast<std::size_t>(ev.last_idx)];
  if (ev.side == Side::Bid && last.has_bid) levels.erase(last.bid);
  if (ev.side == Side::Ask && last.has_ask) levels.erase(last.ask);
  return {levels.begin(), levels.end()};
}

struct EventVolumes {
  Qty v0 = 0;
  Qty removed = 0;
  Qty added = 0;
  Qty refilled = 0;
};

EventVolumes event_volumes(const CandidateEvent& ev, const lob::ReplaySeries& series,
                           const DetectorParams& params) {
  EventVolumes v;
  const std::int64_t ref_end = series.index_at_or_before(ev.t1 + params.h_ref);
  for (const PriceCents p : ev.traversed) {
    v.v0 += series.depth_at_index(ev.side, p, ev.first_idx - 1);
    // Event-window flow includes the update at t0 (the first step itself).
    const lob::FlowVolumes in = series.flow_between(ev.side, p, ev.first_idx - 1, ev.last_idx);
    v.removed += in.canceled + in.executed;
    v.added += in.added;
    const lob::FlowVolumes ref = series.flow_between(ev.side, p, ev.last_idx, ref_end);
    v.refilled += ref.added;
  }
  return v;
}

}  // namespace

void apply_hard_filters(CandidateEvent& ev, const lob::ReplaySeries& series,
                        const EfficientPriceSeries& eff, const DetectorParams& params) {
  const EventVolumes vol = event_volumes(ev, series, params);

  // Book consistency: most initial depth accounted for by removals, bounded
  // replenishment.
  const double v0 = static_cast<double>(vol.v0);
  const double vrm = static_cast<double>(vol.removed);
  ev.filters.book_consistency =
      vrm >= (1.0 - params.kappa_miss) * v0 &&
      static_cast<double>(vol.added) / (vrm + params.epsilon_volume) <= params.kappa_repr;

  // Efficient-price stability, during and around the event.
  const double eff_pre = eff.before_time(ev.t0);
  const double eff_post = eff.after_time(ev.t1);
  const double eff_pre_w = eff.before_time(ev.t0 - params.h_pre);
  const double eff_post_w = eff.after_time(ev.t1 + params.h_post);
  ev.filters.eff_price = !std::isnan(eff_pre) && !std::isnan(eff_post) &&
                         !std::isnan(eff_pre_w) && !std::isnan(eff_post_w) &&
                         std::abs(eff_post - eff_pre) <= params.kappa_eff &&
                         std::abs(eff_post_w - eff_pre_w) <= params.kappa_eff_post;

  // Opposite-side stability, with last-value carry when momentarily one-sided.
  const Side opp = opposite(ev.side);
  const double opp_pre = carried_best(series, opp, ev.t0 - 1);
  const double opp_post = carried_best(series, opp, ev.t1);
  ev.filters.opposite_side = std::isnan(opp_pre) || std::isnan(opp_post) ||
                             std::abs(opp_post - opp_pre) <= params.kappa_opp;

  // Transience via the reversion ratio.
  const double m_pre =
      median_of(window_samples(series, ev.t0 - params.h_pre, ev.t0 - 1, mid_of));
  const double m_post = median_of(window_samples(series, ev.t1, ev.t1 + params.h_rev, mid_of));
  const auto ext_samples = window_samples(series, ev.t0, ev.t1, mid_of);
  double m_ext = kNaN;
  if (!ext_samples.empty()) {
    m_ext = ev.side == Side::Ask ? *std::max_element(ext_samples.begin(), ext_samples.end())
                                 : *std::min_element(ext_samples.begin(), ext_samples.end());
  }
  if (std::isnan(m_pre) || std::isnan(m_post) || std::isnan(m_ext)) {
    ev.rho_rev = kNaN;
    ev.filters.transience = false;
  } else {
    ev.rho_rev = std::abs(m_post - m_pre) / (std::abs(m_ext - m_pre) + params.epsilon_price);
    ev.filters.transience = ev.rho_rev <= params.kappa_rev;
  }
  ev.gate = ev.filters.all();
}

bool compute_features(CandidateEvent& ev, const lob::ReplaySeries& series,
                      const EfficientPriceSeries& eff, const DetectorParams& params) {
  const EventVolumes vol = event_volumes(ev, series, params);

  const double p_pre = carried_best(series, ev.side, ev.t0 - 1);
  const double p_post = carried_best(series, ev.side, ev.t1);
  if (std::isnan(p_pre) || std::isnan(p_post)) return false;
  ev.x.walk_depth = deterioration_sign(ev.side) * (p_post - p_pre);

  const double dur = seconds(ev.t1 - ev.t0);
  ev.x.depletion_speed = static_cast<double>(vol.removed) / (dur + params.epsilon_seconds);
  ev.x.refill_ratio =
      static_cast<double>(vol.refilled) / (static_cast<double>(vol.removed) + params.epsilon_volume);

  const double spr_pre =
      median_of(window_samples(series, ev.t0 - params.h_pre, ev.t0 - 1, spread_of));
  const auto spr_window = window_samples(series, ev.t0, ev.t1 + params.h_post, spread_of);
  if (std::isnan(spr_pre) || spr_window.empty()) return false;
  const double s_max = *std::max_element(spr_window.begin(), spr_window.end());
  ev.x.spread_response = s_max - spr_pre;

  const double eff_pre_w = eff.before_time(ev.t0 - params.h_pre);
  const double eff_post_w = eff.after_time(ev.t1 + params.h_post);
  if (std::isnan(eff_pre_w) || std::isnan(eff_post_w)) return false;
  ev.x.eff_displacement = eff_post_w - eff_pre_w;

  if (std::isnan(ev.rho_rev)) return false;
  ev.x.impact_decay = 1.0 - ev.rho_rev;
  return true;
}

DetectorRun run_detector(const lob::ReplaySeries& series, const DetectorParams& params,
                         TimeNs session_open, TimeNs session_close) {
  DetectorRun run;
  run.steps = detect_steps(series, params, &run.rejects);
  auto events = cluster_steps(run.steps, params);
  const EfficientPriceSeries eff(series, params.ema_half_life);
  const TimeNs tail = std::max({params.h_post, params.h_rev, params.h_ref});
  int next_id = 0;
  for (auto& ev : events) {
    if (ev.t0 - params.h_pre < session_open || ev.t1 + tail > session_close) {
      ++run.boundary_dropped;
      continue;
    }
    ev.traversed = traversed_levels(ev, series);
    apply_hard_filters(ev, series, eff, params);
    ev.features_ok = compute_features(ev, series, eff, params);
    if (!ev.features_ok) {
      ++run.degenerate_dropped;
      continue;
    }
    ev.id = next_id++;
    run.candidates.push_back(std::move(ev));
  }
  return run;
}

double percentile_linear(std::vector<double> values, double pct) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

CalibratedThresholds calibrate_percentile_thresholds(const std::vector<CandidateEvent>& events,
                                                     const DetectorParams& params,
                                                     int min_events) {
  std::vector<double> ds, rr;
  for (const auto& ev : events) {
    if (!ev.gate || !ev.features_ok) continue;
    ds.push_back(ev.x.depletion_speed);
    rr.push_back(ev.x.refill_ratio);
  }
  CalibratedThresholds out{params.theta_ds, params.theta_rr, false};
  if (static_cast<int>(ds.size()) >= min_events) {
    out.theta_ds = percentile_linear(ds, params.threshold_percentile);
    out.theta_rr = percentile_linear(rr, params.threshold_percentile);
    out.from_percentile = true;
  }
  return out;
}

int binary_label(const CandidateEvent& ev, const DetectorParams& params,
                 const CalibratedThresholds& thresholds) {
  if (!ev.gate || !ev.features_ok) return 0;
  const bool severe = ev.x.walk_depth >= params.theta_wd &&
                      ev.x.depletion_speed >= thresholds.theta_ds &&
                      ev.x.refill_ratio >= thresholds.theta_rr &&
                      ev.x.spread_response >= params.theta_sr &&
                      ev.x.impact_decay >= params.theta_id &&
                      std::abs(ev.x.eff_displacement) <= params.theta_epd;
  return severe ? 1 : 0;
}

}  // namespace crumble::detect
