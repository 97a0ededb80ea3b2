#include "crumble/lob/book.hpp"

namespace crumble::lob {

Qty BookState::depth(Side s, PriceCents p) const {
  if (s == Side::Bid) {
    auto it = bids_.find(p);
    return it == bids_.end() ? 0 : it->second.total;
  }
  auto it = asks_.find(p);
  return it == asks_.end() ? 0 : it->second.total;
}

Qty BookState::depth_at_best(Side s) const {
  if (s == Side::Bid) return bids_.empty() ? 0 : bids_.begin()->second.total;
  return asks_.empty() ? 0 : asks_.begin()->second.total;
}

std::vector<Qty> BookState::depth_ladder(Side s, int levels) const {
  std::vector<Qty> out(static_cast<std::size_t>(levels), 0);
  const auto best = s == Side::Bid ? best_bid() : best_ask();
  if (!best) return out;
  const int dir = s == Side::Bid ? -1 : +1;
  for (int k = 0; k < levels; ++k) out[static_cast<std::size_t>(k)] = depth(s, *best + dir * k);
  return out;
}

FlowCounters BookState::flow(Side s, PriceCents p) const {
  const auto& m = s == Side::Bid ? bid_flow_ : ask_flow_;
  auto it = m.find(p);
  return it == m.end() ? FlowCounters{} : it->second;
}

std::vector<std::pair<PriceCents, Qty>> BookState::levels(Side s) const {
  std::vector<std::pair<PriceCents, Qty>> out;
  if (s == Side::Bid) {
    for (const auto& [p, lvl] : bids_) out.emplace_back(p, lvl.total);
  } else {
    for (const auto& [p, lvl] : asks_) out.emplace_back(p, lvl.total);
  }
  return out;
}

Qty BookState::resting_qty(OrderId id) const {
  auto it = order_index_.find(id);
  if (it == order_index_.end()) return 0;
  const auto& [side, price] = it->second;
  const Level* lvl = nullptr;
  if (side == Side::Bid) {
    auto lit = bids_.find(price);
    if (lit != bids_.end()) lvl = &lit->second;
  } else {
    auto lit = asks_.find(price);
    if (lit != asks_.end()) lvl = &lit->second;
  }
  if (!lvl) return 0;
  for (const auto& o : lvl->queue)
    if (o.id == id) return o.qty;
  return 0;
}

template <typename Map>
BookEffect BookState::match_against(Map& levels, Side resting_side, Qty qty, AgentId,
                                    std::optional<PriceCents> limit) {
  BookEffect eff;
  Qty remaining = qty;
  while (remaining > 0 && !levels.empty()) {
    auto lit = levels.begin();
    const PriceCents px = lit->first;
    if (limit) {
      // A buy limit matches asks priced <= limit; a sell limit matches bids
      // priced >= limit.
      if (resting_side == Side::Ask && px > *limit) break;
      if (resting_side == Side::Bid && px < *limit) break;
    }
    Level& lvl = lit->second;
    while (remaining > 0 && !lvl.queue.empty()) {
      RestingOrder& maker = lvl.queue.front();
      const Qty traded = std::min(remaining, maker.qty);
      maker.qty -= traded;
      lvl.total -= traded;
      remaining -= traded;
      flow_mut(resting_side, px).executed += traded;
      eff.fills.push_back(Fill{maker.id, maker.agent, px, traded});
      if (maker.qty == 0) {
        order_index_.erase(maker.id);
        lvl.queue.pop_front();
      }
    }
    if (lvl.total == 0) levels.erase(lit);
  }
  eff.book_changed = !eff.fills.empty();
  return eff;
}

void BookState::insert_resting(const MarketMessage& msg, Qty qty) {
  Level& lvl = msg.side == Side::Bid ? bids_[msg.price] : asks_[msg.price];
  lvl.queue.push_back(RestingOrder{msg.order_id, qty, msg.agent_id});
  lvl.total += qty;
  order_index_[msg.order_id] = OrderRef{msg.side, msg.price};
  flow_mut(msg.side, msg.price).added += qty;
}

BookEffect BookState::apply(const MarketMessage& msg) {
  switch (msg.kind) {
    case MsgKind::LimitAdd: {
      BookEffect eff;
      Qty remaining = msg.quantity;
      // Crossed limits execute immediately at resting prices.
      if (msg.side == Side::Bid) {
        eff = match_against(asks_, Side::Ask, remaining, msg.agent_id, msg.price);
      } else {
        eff = match_against(bids_, Side::Bid, remaining, msg.agent_id, msg.price);
      }
      for (const auto& f : eff.fills) remaining -= f.qty;
      if (remaining > 0) insert_resting(msg, remaining);
      eff.book_changed = true;
      eff.logged_quantity = msg.quantity;
      fill_bests(eff);
      return eff;
    }
    case MsgKind::Cancel: {
      BookEffect eff;
      auto it = order_index_.find(msg.order_id);
      if (it == order_index_.end()) {
        eff.rejected = true;
        ++rejected_cancels_;
        fill_bests(eff);
        return eff;
      }
      const auto [side, price] = it->second;
      Level* lvl = nullptr;
      if (side == Side::Bid) {
        auto lit = bids_.find(price);
        lvl = lit == bids_.end() ? nullptr : &lit->second;
      } else {
        auto lit = asks_.find(price);
        lvl = lit == asks_.end() ? nullptr : &lit->second;
      }
      Qty removed = 0;
      if (lvl) {
        for (auto qit = lvl->queue.begin(); qit != lvl->queue.end(); ++qit) {
          if (qit->id == msg.order_id) {
            removed = qit->qty;
            lvl->total -= removed;
            lvl->queue.erase(qit);
            break;
          }
        }
        if (lvl->total == 0) {
          if (side == Side::Bid)
            bids_.erase(price);
          else
            asks_.erase(price);
        }
      }
      order_index_.erase(it);
      if (removed == 0) {
        eff.rejected = true;
        ++rejected_cancels_;
        fill_bests(eff);
        return eff;
      }
      flow_mut(side, price).canceled += removed;
      eff.book_changed = true;
      eff.logged_quantity = removed;
      eff.canceled_price = price;
      fill_bests(eff);
      return eff;
    }
    case MsgKind::MarketOrder: {
      BookEffect eff;
      if (msg.side == Side::Bid) {
        // A buy market order consumes the ask side.
        eff = match_against(asks_, Side::Ask, msg.quantity, msg.agent_id, std::nullopt);
      } else {
        eff = match_against(bids_, Side::Bid, msg.quantity, msg.agent_id, std::nullopt);
      }
      Qty executed = 0;
      for (const auto& f : eff.fills) executed += f.qty;
      eff.discarded = msg.quantity - executed;
      discarded_qty_ += static_cast<std::uint64_t>(eff.discarded);
      eff.logged_quantity = executed;
      fill_bests(eff);
      return eff;
    }
  }
  return {};
}

}  // namespace crumble::lob
