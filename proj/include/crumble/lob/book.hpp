#pragma once

#include <deque>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "crumble/core/types.hpp"

namespace crumble::lob {

struct Fill {
  OrderId maker_id = 0;
  AgentId maker_agent = 0;
  PriceCents price = 0;
  Qty qty = 0;
};

// Result of applying one message. `logged_quantity` is what belongs in the
// canonical message log: for market orders the executed volume (the
// discarded remainder never touched the book), for cancels the shares
// actually removed.
struct BookEffect {
  std::vector<Fill> fills;
  bool book_changed = false;
  bool rejected = false;  // cancel of unknown/foreign order id
  Qty discarded = 0;      // market-order remainder after the side emptied
  Qty logged_quantity = 0;
  std::optional<PriceCents> canceled_price;  // level a successful cancel touched
  std::optional<PriceCents> best_bid_after;
  std::optional<PriceCents> best_ask_after;
};

struct FlowCounters {
  Qty added = 0;
  Qty canceled = 0;
  Qty executed = 0;
};

struct RestingOrder {
  OrderId id = 0;
  Qty qty = 0;
  AgentId agent = 0;
};

struct Level {
  std::deque<RestingOrder> queue;  // front = oldest (price-time priority)
  Qty total = 0;
};

// Integer-arithmetic limit order book over the cent grid, with per-level
// cumulative add/cancel/execute counters since session open. Single writer;
// matching is price-time priority, crossed limit orders execute immediately
// at resting prices, market-order remainders are discarded.
class BookState {
 public:
  BookEffect apply(const MarketMessage& msg);

  std::optional<PriceCents> best_bid() const {
    return bids_.empty() ? std::nullopt : std::optional(bids_.begin()->first);
  }
  std::optional<PriceCents> best_ask() const {
    return asks_.empty() ? std::nullopt : std::optional(asks_.begin()->first);
  }

  Qty depth(Side s, PriceCents p) const;
  Qty depth_at_best(Side s) const;
  // Depth ladder starting at the best quote, walking away from it on the
  // price grid (one entry per tick, zeros for empty levels).
  std::vector<Qty> depth_ladder(Side s, int levels) const;

  FlowCounters flow(Side s, PriceCents p) const;
  const std::map<PriceCents, FlowCounters>& flow_map(Side s) const {
    return s == Side::Bid ? bid_flow_ : ask_flow_;
  }

  // Levels with resting quantity, best-first.
  std::vector<std::pair<PriceCents, Qty>> levels(Side s) const;

  Qty resting_qty(OrderId id) const;
  std::uint64_t rejected_cancels() const { return rejected_cancels_; }
  std::uint64_t discarded_market_qty() const { return discarded_qty_; }

 private:
  struct OrderRef {
    Side side;
    PriceCents price;
  };

  template <typename Map>
  BookEffect match_against(Map& levels, Side resting_side, Qty qty, AgentId taker,
                           std::optional<PriceCents> limit);
  void insert_resting(const MarketMessage& msg, Qty qty);
  FlowCounters& flow_mut(Side s, PriceCents p) {
    return (s == Side::Bid ? bid_flow_ : ask_flow_)[p];
  }
  void fill_bests(BookEffect& eff) const {
    eff.best_bid_after = best_bid();
    eff.best_ask_after = best_ask();
  }

  std::map<PriceCents, Level, std::greater<PriceCents>> bids_;
  std::map<PriceCents, Level> asks_;
  std::unordered_map<OrderId, OrderRef> order_index_;
  std::map<PriceCents, FlowCounters> bid_flow_;
  std::map<PriceCents, FlowCounters> ask_flow_;
  std::uint64_t rejected_cancels_ = 0;
  std::uint64_t discarded_qty_ = 0;
};

}  // namespace crumble::lob
