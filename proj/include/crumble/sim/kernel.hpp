#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "crumble/core/rng.hpp"
#include "crumble/core/types.hpp"
#include "crumble/lob/book.hpp"
#include "crumble/lob/io.hpp"
#include "crumble/sim/config.hpp"
#include "crumble/sim/fundamental.hpp"

namespace crumble::sim {

// What an agent can see of the market: the exchange publishes one view per
// book-changing message, and an agent waking at t reads the latest view
// published at or before t - latency (market data takes one latency hop).
struct MarketView {
  TimeNs ts = 0;
  bool has_bid = false;
  bool has_ask = false;
  PriceCents bid = 0;
  PriceCents ask = 0;
  Qty d1_bid = 0;
  Qty d1_ask = 0;
  PriceCents last_mid_x2 = 0;  // bid+ask when both sides were last present
  int trade_sign = 0;          // sign of last-trade price minus 10 trades back
  Qty trailing_volume = 0;     // transacted shares over the POV window
};

class SimKernel;

// Agent-facing surface of the kernel. Order submissions reach the exchange
// after the agent's latency; views are latency-lagged symmetrically.
class KernelApi {
 public:
  explicit KernelApi(SimKernel& k) : kernel_(k) {}
  TimeNs now() const;
  TimeNs session_open() const;
  TimeNs session_close() const;
  OrderId submit_limit(AgentId agent, Side side, PriceCents price, Qty qty);
  OrderId submit_market(AgentId agent, Side side, Qty qty);
  void submit_cancel(AgentId agent, OrderId order_id);
  void schedule_wake(AgentId agent, TimeNs t);
  std::optional<MarketView> view(AgentId agent) const;
  const FundamentalProcess& fundamental() const;
  void append_regime(const lob::RegimeRecord& rec);

 private:
  SimKernel& kernel_;
};

class Agent {
 public:
  Agent(AgentId id, TimeNs latency) : id_(id), latency_(latency) {}
  virtual ~Agent() = default;
  virtual void start(KernelApi& api) = 0;
  virtual void on_wake(TimeNs now, KernelApi& api) = 0;
  virtual void on_fill(OrderId, PriceCents, Qty) {}
  virtual bool wants_fill_notices() const { return false; }
  AgentId id() const { return id_; }
  TimeNs latency() const { return latency_; }

 private:
  AgentId id_;
  TimeNs latency_;
};

struct RunResult {
  std::vector<MarketMessage> log;
  std::vector<lob::BookSnapshot> snapshots;
  std::vector<lob::RegimeRecord> regime;
  std::uint64_t rejected_cancels = 0;
  std::uint64_t discarded_market_qty = 0;
};

// Single-threaded deterministic event loop: events pop in (fire_time,
// sequence) order; identical (config, seed) runs yield bit-identical outputs.
class SimKernel {
 public:
  explicit SimKernel(const RunConfig& cfg);
  void add_agent(std::unique_ptr<Agent> agent);
  RunResult run();

  const RunConfig& config() const { return cfg_; }

 private:
  friend class KernelApi;
  enum class EvKind { Wake, Deliver, FillNotice };
  struct Event {
    TimeNs fire = 0;
    std::uint64_t seq = 0;
    EvKind kind = EvKind::Wake;
    AgentId agent = 0;
    MarketMessage msg;  // Deliver payload
    PriceCents fill_price = 0;
    Qty fill_qty = 0;
    OrderId fill_order = 0;
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire != b.fire) return a.fire > b.fire;
      return a.seq > b.seq;
    }
  };

  void push_event(Event ev);
  void deliver_to_exchange(const Event& ev);
  void publish_view();
  lob::BookSnapshot make_snapshot() const;
  std::optional<MarketView> view_at_or_before(TimeNs t) const;

  RunConfig cfg_;
  FundamentalProcess fundamental_;
  std::vector<std::unique_ptr<Agent>> agents_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::uint64_t next_seq_ = 0;
  OrderId next_order_id_ = 1;
  TimeNs now_ = 0;
  bool running_ = false;

  lob::BookState book_;
  RunResult out_;
  std::vector<MarketView> views_;

  // Exchange-side rolling state feeding the views.
  std::deque<std::pair<TimeNs, Qty>> volume_window_;
  Qty volume_sum_ = 0;
  std::deque<PriceCents> recent_trades_;
  PriceCents last_mid_x2_ = 0;
};

}  // namespace crumble::sim
