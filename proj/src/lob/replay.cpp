#include "crumble/lob/replay.hpp"

#include <algorithm>

namespace crumble::lob {

CurvePoint LevelCurve::at_index(std::int64_t idx) const {
  auto it = std::upper_bound(pts_.begin(), pts_.end(), idx,
                             [](std::int64_t v, const CurvePoint& p) { return v < p.update_idx; });
  if (it == pts_.begin()) return CurvePoint{-1, 0, 0, 0, 0};
  return *(it - 1);
}

ReplaySeries::ReplaySeries(std::span<const MarketMessage> log) {
  BookState book;
  updates_.reserve(log.size());
  // Per-level running totals; the curve stores one point per touching update.
  struct Touched {
    Side side;
    PriceCents price;
  };
  std::vector<Touched> touched;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const MarketMessage& msg = log[i];
    touched.clear();
    const BookEffect eff = book.apply(msg);
    const auto idx = static_cast<std::int64_t>(i);
    if (msg.kind == MsgKind::LimitAdd) {
      touched.push_back({msg.side, msg.price});
    }
    for (const auto& f : eff.fills) {
      // Fills land on the side opposite the aggressor.
      touched.push_back({opposite(msg.side), f.price});
    }
    if (msg.kind == MsgKind::Cancel && eff.canceled_price) {
      touched.push_back({msg.side, *eff.canceled_price});
    }
    // Dedup (a crossed add can fill several times at one level).
    std::sort(touched.begin(), touched.end(), [](const Touched& a, const Touched& b) {
      return a.side == b.side ? a.price < b.price : a.side < b.side;
    });
    touched.erase(std::unique(touched.begin(), touched.end(),
                              [](const Touched& a, const Touched& b) {
                                return a.side == b.side && a.price == b.price;
                              }),
                  touched.end());
    for (const auto& tc : touched) {
      const FlowCounters fc = book.flow(tc.side, tc.price);
      curves_[static_cast<int>(tc.side)][tc.price].push(idx, fc.added, fc.canceled, fc.executed,
                                                        book.depth(tc.side, tc.price));
    }
    UpdateRow row;
    row.ts = msg.timestamp;
    const auto bb = book.best_bid();
    const auto ba = book.best_ask();
    row.has_bid = bb.has_value();
    row.has_ask = ba.has_value();
    row.bid = bb.value_or(0);
    row.ask = ba.value_or(0);
    row.d1_bid = bb ? book.depth(Side::Bid, *bb) : 0;
    row.d1_ask = ba ? book.depth(Side::Ask, *ba) : 0;
    updates_.push_back(row);
  }
}

std::int64_t ReplaySeries::index_at_or_before(TimeNs t) const {
  auto it = std::upper_bound(updates_.begin(), updates_.end(), t,
                             [](TimeNs v, const UpdateRow& r) { return v < r.ts; });
  return static_cast<std::int64_t>(it - updates_.begin()) - 1;
}

std::int64_t ReplaySeries::index_at_or_after(TimeNs t) const {
  auto it = std::lower_bound(updates_.begin(), updates_.end(), t,
                             [](const UpdateRow& r, TimeNs v) { return r.ts < v; });
  return static_cast<std::int64_t>(it - updates_.begin());
}

const LevelCurve* ReplaySeries::find_curve(Side s, PriceCents p) const {
  const auto& m = curves_[static_cast<int>(s)];
  auto it = m.find(p);
  return it == m.end() ? nullptr : &it->second;
}

FlowVolumes ReplaySeries::flow_between(Side s, PriceCents p, std::int64_t i0,
                                       std::int64_t i1) const {
  const LevelCurve* c = find_curve(s, p);
  if (!c || i1 <= i0) return {};
  const CurvePoint hi = c->at_index(i1);
  const CurvePoint lo = c->at_index(i0);
  return FlowVolumes{hi.cum_added - lo.cum_added, hi.cum_canceled - lo.cum_canceled,
                     hi.cum_executed - lo.cum_executed};
}

FlowVolumes ReplaySeries::flow_volumes(Side s, PriceCents p, TimeNs u, TimeNs v) const {
  if (v < u) return {};
  return flow_between(s, p, index_at_or_before(u), index_at_or_before(v));
}

Qty ReplaySeries::depth_at_index(Side s, PriceCents p, std::int64_t idx) const {
  const LevelCurve* c = find_curve(s, p);
  if (!c) return 0;
  return c->at_index(idx).depth;
}

Qty ReplaySeries::depth_at_time(Side s, PriceCents p, TimeNs t) const {
  return depth_at_index(s, p, index_at_or_before(t));
}

std::vector<PriceCents> ReplaySeries::touched_levels(Side s) const {
  std::vector<PriceCents> out;
  out.reserve(curves_[static_cast<int>(s)].size());
  for (const auto& [p, _] : curves_[static_cast<int>(s)]) out.push_back(p);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace crumble::lob
