#pragma once

#include <optional>
#include <vector>

#include "crumble/core/types.hpp"
#include "crumble/lob/io.hpp"

namespace crumble::truth {

struct Interval {
  TimeNs start = 0;
  TimeNs end = 0;
  TimeNs length() const { return end - start; }
};

struct GroundTruthEvent {
  Side side = Side::Bid;
  Interval span;
};

// Side-specific crumble indicators: bid-side crumble when the maker skews
// quotes away from the bid (beta > 0.5 + xi), ask-side mirrored.
inline bool indicator_bid(double beta, double xi) { return beta > 0.5 + xi; }
inline bool indicator_ask(double beta, double xi) { return beta < 0.5 - xi; }
inline bool indicator(Side s, double beta, double xi) {
  return s == Side::Bid ? indicator_bid(beta, xi) : indicator_ask(beta, xi);
}

// Contiguous indicator spans from a regime trace (step interpolation: each
// record's beta holds until the next record; the last holds until
// session_end). Same-side spans separated by less than merge_gap are merged.
std::vector<GroundTruthEvent> build_intervals(const std::vector<lob::RegimeRecord>& trace,
                                              double xi, TimeNs merge_gap, TimeNs session_end);

// Interval IoU; point intervals give 0 unless identical.
double iou(const Interval& a, const Interval& b);

struct MatchEntry {
  std::size_t predicted = 0;                  // index into the predicted list
  std::optional<std::size_t> matched_truth;   // index into the truth list
  double iou = 0.0;
};

struct MatchReport {
  std::vector<MatchEntry> entries;  // one per predicted event, input order
  std::vector<char> targets;        // y_e per predicted event (1 iff TP)
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double threshold = 0.0;
};

// One-to-one greedy matching in descending IoU; a prediction is a true
// positive iff matched with IoU >= threshold. Both lists must be same-side.
MatchReport match_events(const std::vector<Interval>& predicted,
                         const std::vector<Interval>& truth, double threshold);

}  // namespace crumble::truth
