#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "crumble/core/types.hpp"
#include "crumble/lob/book.hpp"

namespace crumble::lob {

// Cumulative added/canceled/executed shares over an interval.
struct FlowVolumes {
  Qty added = 0;
  Qty canceled = 0;
  Qty executed = 0;
};

// Top-of-book row after applying one logged message.
struct UpdateRow {
  TimeNs ts = 0;
  bool has_bid = false;
  bool has_ask = false;
  PriceCents bid = 0;
  PriceCents ask = 0;
  Qty d1_bid = 0;
  Qty d1_ask = 0;
};

// Cumulative per-level state after a touching update.
struct CurvePoint {
  std::int64_t update_idx = 0;
  Qty cum_added = 0;
  Qty cum_canceled = 0;
  Qty cum_executed = 0;
  Qty depth = 0;
};

class LevelCurve {
 public:
  void push(std::int64_t idx, Qty a, Qty c, Qty e, Qty q) {
    pts_.push_back(CurvePoint{idx, a, c, e, q});
  }
  // State at the last touching update with index <= idx (zeros before the
  // first touch).
  CurvePoint at_index(std::int64_t idx) const;
  bool empty() const { return pts_.empty(); }
  std::span<const CurvePoint> points() const { return pts_; }

 private:
  std::vector<CurvePoint> pts_;
};

// Time-indexed replay of a message log: one UpdateRow per message plus sparse
// cumulative flow/depth curves per (side, price). The log is the source of
// truth; everything here is reconstructed from it alone.
class ReplaySeries {
 public:
  explicit ReplaySeries(std::span<const MarketMessage> log);

  const std::vector<UpdateRow>& updates() const { return updates_; }
  std::size_t size() const { return updates_.size(); }

  // Last update index with ts <= t; -1 when none.
  std::int64_t index_at_or_before(TimeNs t) const;
  // First update index with ts >= t; size() when none.
  std::int64_t index_at_or_after(TimeNs t) const;

  // Flow over updates in the index range (i0, i1] (cumulative difference).
  FlowVolumes flow_between(Side s, PriceCents p, std::int64_t i0, std::int64_t i1) const;
  // Flow over messages with u < ts <= v.
  FlowVolumes flow_volumes(Side s, PriceCents p, TimeNs u, TimeNs v) const;

  // Resting depth after update idx (idx = -1 gives the empty pre-session book).
  Qty depth_at_index(Side s, PriceCents p, std::int64_t idx) const;
  Qty depth_at_time(Side s, PriceCents p, TimeNs t) const;

  // Price levels with any recorded activity on side s.
  std::vector<PriceCents> touched_levels(Side s) const;

 private:
  const LevelCurve* find_curve(Side s, PriceCents p) const;
  std::vector<UpdateRow> updates_;
  std::unordered_map<PriceCents, LevelCurve> curves_[2];
};

}  // namespace crumble::lob
