#include "crumble/sim/kernel.hpp"

#include <algorithm>
#include <stdexcept>

namespace crumble::sim {

TimeNs KernelApi::now() const { return kernel_.now_; }
TimeNs KernelApi::session_open() const { return kernel_.cfg_.session_open; }
TimeNs KernelApi::session_close() const { return kernel_.cfg_.session_close; }
const FundamentalProcess& KernelApi::fundamental() const { return kernel_.fundamental_; }
void KernelApi::append_regime(const lob::RegimeRecord& rec) { kernel_.out_.regime.push_back(rec); }

OrderId KernelApi::submit_limit(AgentId agent, Side side, PriceCents price, Qty qty) {
  SimKernel& k = kernel_;
  const OrderId id = k.next_order_id_++;
  SimKernel::Event ev;
  ev.fire = k.now_ + k.agents_[static_cast<std::size_t>(agent)]->latency();
  ev.kind = SimKernel::EvKind::Deliver;
  ev.agent = agent;
  ev.msg = MarketMessage{ev.fire, MsgKind::LimitAdd, side, price, qty, id, agent};
  k.push_event(std::move(ev));
  return id;
}

OrderId KernelApi::submit_market(AgentId agent, Side side, Qty qty) {
  SimKernel& k = kernel_;
  const OrderId id = k.next_order_id_++;
  SimKernel::Event ev;
  ev.fire = k.now_ + k.agents_[static_cast<std::size_t>(agent)]->latency();
  ev.kind = SimKernel::EvKind::Deliver;
  ev.agent = agent;
  ev.msg = MarketMessage{ev.fire, MsgKind::MarketOrder, side, 0, qty, id, agent};
  k.push_event(std::move(ev));
  return id;
}

void KernelApi::submit_cancel(AgentId agent, OrderId order_id) {
  SimKernel& k = kernel_;
  SimKernel::Event ev;
  ev.fire = k.now_ + k.agents_[static_cast<std::size_t>(agent)]->latency();
  ev.kind = SimKernel::EvKind::Deliver;
  ev.agent = agent;
  ev.msg = MarketMessage{ev.fire, MsgKind::Cancel, Side::Bid, 0, 0, order_id, agent};
  k.push_event(std::move(ev));
}

void KernelApi::schedule_wake(AgentId agent, TimeNs t) {
  SimKernel& k = kernel_;
  SimKernel::Event ev;
  ev.fire = t;
  ev.kind = SimKernel::EvKind::Wake;
  ev.agent = agent;
  k.push_event(std::move(ev));
}

std::optional<MarketView> KernelApi::view(AgentId agent) const {
  const TimeNs lag = kernel_.agents_[static_cast<std::size_t>(agent)]->latency();
  return kernel_.view_at_or_before(kernel_.now_ - lag);
}

SimKernel::SimKernel(const RunConfig& cfg)
    : cfg_(cfg),
      fundamental_(cfg.fundamental, cfg.session_open, cfg.session_close, cfg.seed) {}

void SimKernel::add_agent(std::unique_ptr<Agent> agent) {
  if (running_) throw std::logic_error("agents must be registered before run()");
  if (agent->id() != static_cast<AgentId>(agents_.size()))
    throw std::logic_error("agent ids must be dense and in registration order");
  agents_.push_back(std::move(agent));
}

void SimKernel::push_event(Event ev) {
  if (ev.fire < now_) throw std::logic_error("event scheduled before current time");
  ev.seq = next_seq_++;
  queue_.push(std::move(ev));
}

std::optional<MarketView> SimKernel::view_at_or_before(TimeNs t) const {
  auto it = std::upper_bound(views_.begin(), views_.end(), t,
                             [](TimeNs v, const MarketView& mv) { return v < mv.ts; });
  if (it == views_.begin()) return std::nullopt;
  return *(it - 1);
}

lob::BookSnapshot SimKernel::make_snapshot() const {
  lob::BookSnapshot s;
  s.ts = now_;
  s.bid = book_.best_bid();
  s.ask = book_.best_ask();
  s.d1_bid = book_.depth_at_best(Side::Bid);
  s.d1_ask = book_.depth_at_best(Side::Ask);
  s.bid_ladder = book_.depth_ladder(Side::Bid, cfg_.snapshot_levels);
  s.ask_ladder = book_.depth_ladder(Side::Ask, cfg_.snapshot_levels);
  if (!s.bid) s.d1_bid = 0;
  if (!s.ask) s.d1_ask = 0;
  return s;
}

void SimKernel::publish_view() {
  MarketView v;
  v.ts = now_;
  const auto bb = book_.best_bid();
  const auto ba = book_.best_ask();
  v.has_bid = bb.has_value();
  v.has_ask = ba.has_value();
  v.bid = bb.value_or(0);
  v.ask = ba.value_or(0);
  v.d1_bid = bb ? book_.depth(Side::Bid, *bb) : 0;
  v.d1_ask = ba ? book_.depth(Side::Ask, *ba) : 0;
  if (bb && ba) last_mid_x2_ = *bb + *ba;
  v.last_mid_x2 = last_mid_x2_;
  if (recent_trades_.size() >= 11) {
    const PriceCents newest = recent_trades_.back();
    const PriceCents oldest = recent_trades_[recent_trades_.size() - 11];
    v.trade_sign = newest > oldest ? 1 : (newest < oldest ? -1 : 0);
  }
  v.trailing_volume = volume_sum_;
  views_.push_back(v);
}

void SimKernel::deliver_to_exchange(const Event& ev) {
  MarketMessage msg = ev.msg;
  msg.timestamp = now_;
  const lob::BookEffect eff = book_.apply(msg);
  if (!eff.book_changed) return;  // rejected cancel or unfilled market order

  // Canonical log entry: quantities as applied, cancel side/price resolved.
  MarketMessage logged = msg;
  logged.quantity = eff.logged_quantity;
  if (msg.kind == MsgKind::Cancel && eff.canceled_price) {
    logged.price = *eff.canceled_price;
  }
  out_.log.push_back(logged);
  out_.snapshots.push_back(make_snapshot());

  // Rolling trade state for views.
  if (!eff.fills.empty()) {
    Qty traded = 0;
    for (const auto& f : eff.fills) traded += f.qty;
    volume_window_.emplace_back(now_, traded);
    volume_sum_ += traded;
    recent_trades_.push_back(eff.fills.back().price);
    while (recent_trades_.size() > 16) recent_trades_.pop_front();
  }
  while (!volume_window_.empty() && volume_window_.front().first <= now_ - cfg_.market_maker.pov_window) {
    volume_sum_ -= volume_window_.front().second;
    volume_window_.pop_front();
  }
  publish_view();

  // Fill notices back to makers that asked for them, after their latency.
  for (const auto& f : eff.fills) {
    Agent& maker = *agents_[static_cast<std::size_t>(f.maker_agent)];
    if (!maker.wants_fill_notices()) continue;
    Event notice;
    notice.fire = now_ + maker.latency();
    notice.kind = EvKind::FillNotice;
    notice.agent = f.maker_agent;
    notice.fill_price = f.price;
    notice.fill_qty = f.qty;
    notice.fill_order = f.maker_id;
    push_event(std::move(notice));
  }
}

RunResult SimKernel::run() {
  running_ = true;
  now_ = cfg_.session_open;
  KernelApi api(*this);
  for (auto& a : agents_) a->start(api);

  out_.snapshots.push_back(make_snapshot());  // session open

  while (!queue_.empty()) {
    const Event ev = queue_.top();
    if (ev.fire > cfg_.session_close) break;
    queue_.pop();
    now_ = ev.fire;
    switch (ev.kind) {
      case EvKind::Wake:
        agents_[static_cast<std::size_t>(ev.agent)]->on_wake(now_, api);
        break;
      case EvKind::Deliver:
        deliver_to_exchange(ev);
        break;
      case EvKind::FillNotice:
        agents_[static_cast<std::size_t>(ev.agent)]->on_fill(ev.fill_order, ev.fill_price,
                                                             ev.fill_qty);
        break;
    }
  }

  now_ = cfg_.session_close;
  out_.snapshots.push_back(make_snapshot());  // session close
  out_.rejected_cancels = book_.rejected_cancels();
  out_.discarded_market_qty = book_.discarded_market_qty();
  return std::move(out_);
}

}  // namespace crumble::sim
