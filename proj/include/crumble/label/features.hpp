#pragma once

#include <vector>

#include "crumble/core/types.hpp"
#include "crumble/detect/detector.hpp"

namespace crumble::label {

// Cross-event temporal context: recovery interval to the previous event's
// end, count of recent events, and their summed depletion speed over the
// lookback. Events must be ordered by end time; both sides pool into one
// timeline. Fills the temporal_* fields in place.
void compute_temporal_features(std::vector<detect::CandidateEvent*>& events_by_end,
                               TimeNs session_open, TimeNs lookback);

// Per-feature median/IQR affine transform; IQR of 0 falls back to 1.
// Transformed values are clamped to +-clip_limit: heavy-tailed features
// (recovery gaps, cumulative depletion) otherwise blow up gradient steps.
class RobustScaler {
 public:
  static constexpr double kClipLimit = 20.0;
  void fit(const std::vector<std::vector<double>>& rows);
  std::vector<double> transform(const std::vector<double>& x) const;
  const std::vector<double>& medians() const { return median_; }
  const std::vector<double>& iqrs() const { return iqr_; }
  int constant_features() const { return constant_; }

 private:
  std::vector<double> median_;
  std::vector<double> iqr_;
  int constant_ = 0;
};

}  // namespace crumble::label
