#include "crumble/agents/market_maker.hpp"

#include <algorithm>
#include <cmath>

namespace crumble::agents {

RegimeState regime_step_bernoulli(const sim::MarketMakerCfg& cfg, Rng& rng, TimeNs now,
                                  RegimeState state) {
  state.switched = false;
  if (now < state.hold_until) return state;  // beta held fixed
  if (rng.bernoulli(cfg.switch_prob)) {
    state.beta = rng.uniform(cfg.beta_min, cfg.beta_max);
    state.hold_until = now + cfg.hold_window;
    state.switched = true;
  } else {
    state.beta = 0.5;
  }
  return state;
}

// Unlike the memoryless driver, trials are not frozen inside a hold window:
// a mid-hold switch resamples the skew and extends the hold, so excited
// periods chain into prolonged clustered episodes.
RegimeState regime_step_hawkes(const sim::MarketMakerCfg& cfg, HawkesIntensity& intensity,
                               Rng& rng, TimeNs now, TimeNs prev_wake, RegimeState state) {
  state.switched = false;
  const double lambda = intensity.intensity_at(now);
  const double dt = seconds(now - prev_wake);
  const double p = std::min(1.0, lambda * dt);
  if (rng.bernoulli(p)) {
    state.beta = rng.uniform(cfg.beta_min, cfg.beta_max);
    state.hold_until = now + cfg.hold_window;
    state.switched = true;
    intensity.add_event(now);
  } else if (now >= state.hold_until) {
    state.beta = 0.5;
  }
  return state;
}

std::pair<Qty, Qty> split_quote_size(double beta, Qty total) {
  const Qty ask = static_cast<Qty>(std::llround(beta * static_cast<double>(total)));
  return {ask, total - ask};
}

std::vector<std::pair<PriceCents, Qty>> quote_ladder(Side side, PriceCents anchor, Qty total,
                                                     int levels) {
  std::vector<std::pair<PriceCents, Qty>> out;
  if (total <= 0 || levels <= 0) return out;
  const Qty per = total / levels;
  const Qty rem = total % levels;
  const int dir = side == Side::Bid ? -1 : +1;
  for (int k = 0; k < levels; ++k) {
    const PriceCents price = anchor + dir * k;
    // Remainder shares keyed to the absolute price grid: when the ladder
    // slides one tick, interior levels keep their target size, so resting
    // orders there are left untouched (and keep their queue age).
    const auto residue = static_cast<Qty>(((price % levels) + levels) % levels);
    const Qty q = per + (residue < rem ? 1 : 0);
    if (q <= 0) continue;
    out.emplace_back(price, q);
  }
  return out;
}

void MarketMaker::start(sim::KernelApi& api) {
  regime_.hold_until = api.session_open();
  prev_wake_ = api.session_open();
  api.schedule_wake(id(), api.session_open());
}

void MarketMaker::on_fill(OrderId oid, PriceCents, Qty qty) {
  auto it = live_.find(oid);
  if (it == live_.end()) return;
  it->second.qty -= qty;
  if (it->second.qty <= 0) live_.erase(it);
}

void MarketMaker::on_wake(TimeNs now, sim::KernelApi& api) {
  if (cfg_.driver == sim::RegimeDriver::Bernoulli) {
    regime_ = regime_step_bernoulli(cfg_, rng_, now, regime_);
  } else {
    const TimeNs prev = first_wake_ ? now : prev_wake_;
    regime_ = regime_step_hawkes(cfg_, hawkes_, rng_, now, prev, regime_);
  }
  api.append_regime(
      lob::RegimeRecord{now, regime_.beta, sim::driver_name(cfg_.driver), regime_.switched});
  prev_wake_ = now;
  first_wake_ = false;

  const auto view = api.view(id());
  const Qty traded = view ? view->trailing_volume : 0;
  Qty total = std::max(
      cfg_.min_total_size,
      static_cast<Qty>(std::llround(cfg_.participation * static_cast<double>(traded))));
  // Quantize so the ladder is not re-posted on every trade-volume tick.
  if (cfg_.size_quantum > 1) {
    total = std::max(cfg_.size_quantum,
                     (total + cfg_.size_quantum / 2) / cfg_.size_quantum * cfg_.size_quantum);
  }
  const auto [ask_total, bid_total] = split_quote_size(regime_.beta, total);

  PriceCents bid_anchor = fallback_mid_ - 1;
  PriceCents ask_anchor = fallback_mid_ + 1;
  const bool any_withdrawal = 1.0 - regime_.beta < cfg_.improve_fraction ||
                              regime_.beta < cfg_.improve_fraction;
  if (view) {
    const PriceCents mid_x2 = view->last_mid_x2 != 0 ? view->last_mid_x2 : 2 * fallback_mid_;
    // Quote around a smoothed mid. While our own skew is dislocating the
    // book the anchor holds still (the move is self-induced and transient);
    // otherwise it tracks the market.
    if (anchor_mid_x2_ == 0.0) {
      anchor_mid_x2_ = static_cast<double>(mid_x2);
    } else if (!any_withdrawal) {
      const double w = std::exp2(-static_cast<double>(cfg_.wake_interval) /
                                 static_cast<double>(cfg_.anchor_half_life));
      anchor_mid_x2_ = static_cast<double>(mid_x2) + (anchor_mid_x2_ - static_cast<double>(mid_x2)) * w;
    }
    const auto anchor_x2 = static_cast<PriceCents>(std::llround(anchor_mid_x2_));
    bid_anchor = anchor_x2 / 2 - 1;
    ask_anchor = (anchor_x2 + 1) / 2 + 1;
    // Withdrawal mode: the ladder freezes where the side entered the regime
    // and decays; following the eroding touch would replenish the very path
    // being withdrawn from.
    const bool bid_withdrawn_now = 1.0 - regime_.beta < cfg_.improve_fraction;
    const bool ask_withdrawn_now = regime_.beta < cfg_.improve_fraction;
    if (bid_withdrawn_now) {
      if (!frozen_bid_anchor_)
        frozen_bid_anchor_ = view->has_bid ? std::min(bid_anchor, view->bid) : bid_anchor;
      bid_anchor = *frozen_bid_anchor_;
    } else {
      frozen_bid_anchor_.reset();
    }
    if (ask_withdrawn_now) {
      if (!frozen_ask_anchor_)
        frozen_ask_anchor_ = view->has_ask ? std::max(ask_anchor, view->ask) : ask_anchor;
      ask_anchor = *frozen_ask_anchor_;
    } else {
      frozen_ask_anchor_.reset();
    }
    // Never quote across the (lagged) opposite touch.
    if (view->has_ask) bid_anchor = std::min(bid_anchor, view->ask - 1);
    if (view->has_bid) ask_anchor = std::max(ask_anchor, view->bid + 1);
  }

  // Desired ladders, then a minimal diff against live orders. A level is
  // left alone while its resting size is within [target/2, target]: topping
  // up after every partial fill would stamp the whole book as freshly added.
  // A side in withdrawal mode is never topped up at all; its ladder decays
  // until the regime ends.
  std::map<std::pair<int, PriceCents>, Qty> desired;
  for (const auto& [p, q] : quote_ladder(Side::Bid, bid_anchor, bid_total, cfg_.levels))
    desired[{0, p}] = q;
  for (const auto& [p, q] : quote_ladder(Side::Ask, ask_anchor, ask_total, cfg_.levels))
    desired[{1, p}] = q;
  const bool bid_withdrawn = 1.0 - regime_.beta < cfg_.improve_fraction;
  const bool ask_withdrawn = regime_.beta < cfg_.improve_fraction;

  // A withdrawn side never posts; it sheds standing depth instead (below).
  if (bid_withdrawn) {
    for (auto it = desired.begin(); it != desired.end();) {
      it = it->first.first == 0 ? desired.erase(it) : std::next(it);
    }
  }
  if (ask_withdrawn) {
    for (auto it = desired.begin(); it != desired.end();) {
      it = it->first.first == 1 ? desired.erase(it) : std::next(it);
    }
  }

  std::vector<OrderId> to_cancel;
  for (const auto& [oid, o] : live_) {
    const bool withdrawn = o.side == Side::Bid ? bid_withdrawn : ask_withdrawn;
    if (withdrawn) continue;  // handled by the shedding pass
    const auto key = std::make_pair(o.side == Side::Bid ? 0 : 1, o.price);
    auto it = desired.find(key);
    if (it == desired.end()) {
      to_cancel.push_back(oid);
      continue;
    }
    const Qty target = it->second;
    const bool keep = o.qty <= target && 2 * o.qty >= target;
    if (keep) {
      desired.erase(it);
    } else {
      to_cancel.push_back(oid);
    }
  }

  // Withdrawal: pull the most exposed level per wake until the side's
  // resting total is within its allocation. The quote erodes tick by tick as
  // standing depth is cancelled faster than anyone replenishes it.
  auto shed = [&](Side side, Qty target_total) {
    Qty total = 0;
    std::optional<PriceCents> inner;
    for (const auto& [oid, o] : live_) {
      if (o.side != side) continue;
      total += o.qty;
      if (!inner || (side == Side::Bid ? o.price > *inner : o.price < *inner)) inner = o.price;
    }
    if (!inner || total <= target_total) return;
    for (const auto& [oid, o] : live_) {
      if (o.side == side && o.price == *inner) to_cancel.push_back(oid);
    }
  };
  if (bid_withdrawn) shed(Side::Bid, bid_total);
  if (ask_withdrawn) shed(Side::Ask, ask_total);
  // New orders go out before the cancels of replaced ones, so a re-sized
  // level never transiently empties (and never fabricates a quote move).
  for (const auto& [key, qty] : desired) {
    const Side side = key.first == 0 ? Side::Bid : Side::Ask;
    const OrderId oid = api.submit_limit(id(), side, key.second, qty);
    live_[oid] = LiveOrder{side, key.second, qty};
  }
  for (const OrderId oid : to_cancel) {
    api.submit_cancel(id(), oid);
    live_.erase(oid);
  }

  const TimeNs next = now + cfg_.wake_interval;
  if (next <= api.session_close()) api.schedule_wake(id(), next);
}

}  // namespace crumble::agents
