#include "crumble/truth/ground_truth.hpp"

#include <algorithm>

namespace crumble::truth {

std::vector<GroundTruthEvent> build_intervals(const std::vector<lob::RegimeRecord>& trace,
                                              double xi, TimeNs merge_gap, TimeNs session_end) {
  std::vector<GroundTruthEvent> out;
  for (const Side side : {Side::Bid, Side::Ask}) {
    std::vector<Interval> spans;
    TimeNs open_start = 0;
    bool open = false;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const bool on = indicator(side, trace[i].beta, xi);
      const TimeNs t = trace[i].ts;
      if (on && !open) {
        open_start = t;
        open = true;
      }
      if (!on && open) {
        spans.push_back(Interval{open_start, t});
        open = false;
      }
    }
    if (open) spans.push_back(Interval{open_start, session_end});
    // Merge same-side spans separated by less than merge_gap.
    std::vector<Interval> merged;
    for (const auto& sp : spans) {
      if (sp.length() <= 0) continue;
      if (!merged.empty() && sp.start - merged.back().end < merge_gap) {
        merged.back().end = std::max(merged.back().end, sp.end);
      } else {
        merged.push_back(sp);
      }
    }
    for (const auto& sp : merged) out.push_back(GroundTruthEvent{side, sp});
  }
  std::sort(out.begin(), out.end(), [](const GroundTruthEvent& a, const GroundTruthEvent& b) {
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.side < b.side;
  });
  return out;
}

double iou(const Interval& a, const Interval& b) {
  if (a.length() == 0 && b.length() == 0) {
    return a.start == b.start ? 1.0 : 0.0;
  }
  const TimeNs inter_lo = std::max(a.start, b.start);
  const TimeNs inter_hi = std::min(a.end, b.end);
  const TimeNs inter = std::max<TimeNs>(0, inter_hi - inter_lo);
  const TimeNs uni = a.length() + b.length() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

bool augment(std::size_t pred, const std::vector<std::vector<std::size_t>>& adj,
             std::vector<std::optional<std::size_t>>& truth_owner, std::vector<char>& visited) {
  for (const std::size_t t : adj[pred]) {
    if (visited[t]) continue;
    visited[t] = 1;
    if (!truth_owner[t] || augment(*truth_owner[t], adj, truth_owner, visited)) {
      truth_owner[t] = pred;
      return true;
    }
  }
  return false;
}

}  // namespace

MatchReport match_events(const std::vector<Interval>& predicted,
                         const std::vector<Interval>& truth, double threshold) {
  MatchReport report;
  report.threshold = threshold;
  report.entries.resize(predicted.size());
  report.targets.assign(predicted.size(), 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) report.entries[i].predicted = i;

  struct Pair {
    double score;
    std::size_t pred;
    std::size_t truth;
  };
  std::vector<Pair> pairs;
  std::vector<std::vector<std::size_t>> adj(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double s = iou(predicted[i], truth[j]);
      if (s >= threshold && s > 0.0) {
        pairs.push_back(Pair{s, i, j});
        adj[i].push_back(j);
      }
    }
  }
  // Greedy seed in descending IoU (deterministic tie-break), then augmenting
  // paths so the assignment is maximum one-to-one: a prediction is never
  // counted false only because a better-overlapping neighbour consumed its
  // truth interval when an alternative pairing covers both.
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pred != b.pred) return a.pred < b.pred;
    return a.truth < b.truth;
  });
  std::vector<std::optional<std::size_t>> truth_owner(truth.size());
  std::vector<char> pred_used(predicted.size(), 0);
  for (const auto& pr : pairs) {
    if (pred_used[pr.pred] || truth_owner[pr.truth]) continue;
    pred_used[pr.pred] = 1;
    truth_owner[pr.truth] = pr.pred;
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (pred_used[i]) continue;
    std::vector<char> visited(truth.size(), 0);
    if (augment(i, adj, truth_owner, visited)) pred_used[i] = 1;
  }
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (!truth_owner[j]) continue;
    const std::size_t i = *truth_owner[j];
    report.entries[i].matched_truth = j;
    report.entries[i].iou = iou(predicted[i], truth[j]);
    report.targets[i] = 1;
    ++report.tp;
  }
  report.fp = static_cast<int>(predicted.size()) - report.tp;
  report.fn = static_cast<int>(truth.size()) - report.tp;
  return report;
}

}  // namespace crumble::truth
