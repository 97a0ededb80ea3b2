#include "crumble/label/features.hpp"

#include <algorithm>
#include <cmath>

namespace crumble::label {

void compute_temporal_features(std::vector<detect::CandidateEvent*>& events,
                               TimeNs session_open, TimeNs lookback) {
  std::vector<TimeNs> ends;
  std::vector<double> ds_prefix{0.0};
  ends.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    detect::CandidateEvent& ev = *events[i];
    const TimeNs prev_end = i == 0 ? session_open : events[i - 1]->t1;
    // Time available for replenishment; overlapping events clamp to zero.
    ev.x.temporal_gap = std::max(0.0, seconds(ev.t0 - prev_end));
    const TimeNs cutoff = ev.t0 - lookback;
    // ends[] is ascending; recent predecessors are a suffix.
    const auto it = std::upper_bound(ends.begin(), ends.end(), cutoff);
    const auto first = static_cast<std::size_t>(it - ends.begin());
    ev.x.temporal_count = static_cast<double>(i - first);
    ev.x.temporal_ds_sum = ds_prefix[i] - ds_prefix[first];

    ends.push_back(ev.t1);
    ds_prefix.push_back(ds_prefix.back() + ev.x.depletion_speed);
  }
}

void RobustScaler::fit(const std::vector<std::vector<double>>& rows) {
  median_.clear();
  iqr_.clear();
  constant_ = 0;
  if (rows.empty()) return;
  const std::size_t d = rows.front().size();
  std::vector<double> col(rows.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
    const double med = detect::percentile_linear(col, 50.0);
    const double q1 = detect::percentile_linear(col, 25.0);
    const double q3 = detect::percentile_linear(col, 75.0);
    double iqr = q3 - q1;
    if (iqr == 0.0) {
      iqr = 1.0;
      ++constant_;
    }
    median_.push_back(med);
    iqr_.push_back(iqr);
  }
}

std::vector<double> RobustScaler::transform(const std::vector<double>& x) const {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = std::clamp((x[j] - median_[j]) / iqr_[j], -kClipLimit, kClipLimit);
  }
  return out;
}

}  // namespace crumble::label
