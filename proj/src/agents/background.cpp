#include "crumble/agents/background.hpp"

#include <algorithm>
#include <cmath>

namespace crumble::agents {

void NoiseAgent::start(sim::KernelApi& api) {
  const TimeNs open = api.session_open();
  const TimeNs close = api.session_close();
  const double hours = seconds(close - open) / 3600.0;
  const auto n = static_cast<int>(std::llround(cfg_.orders_per_agent_per_hour * hours));
  const auto span = static_cast<double>(close - open);
  for (int i = 0; i < n; ++i) {
    const auto t = open + static_cast<TimeNs>(rng_.beta_half_half() * span);
    api.schedule_wake(id(), std::min(t, close));
  }
}

void NoiseAgent::on_wake(TimeNs, sim::KernelApi& api) {
  const Side side = rng_.bernoulli(0.5) ? Side::Bid : Side::Ask;
  const Qty qty = rng_.uniform_int(cfg_.size_min, cfg_.size_max);
  api.submit_market(id(), side, qty);
}

void ValueAgent::start(sim::KernelApi& api) {
  const TimeNs first =
      api.session_open() + from_seconds(rng_.exponential(cfg_.wake_rate_per_s));
  if (first <= api.session_close()) api.schedule_wake(id(), first);
}

std::optional<ValueAgent::Decision> ValueAgent::decide(PriceCents valuation,
                                                       const std::optional<sim::MarketView>& view,
                                                       PriceCents empty_book_offset,
                                                       bool buy_on_tie,
                                                       PriceCents passive_depth) {
  if (!view || (!view->has_bid && !view->has_ask)) {
    return Decision{buy_on_tie ? Side::Bid : Side::Ask,
                    buy_on_tie ? valuation - empty_book_offset : valuation + empty_book_offset};
  }
  if (view->has_ask && valuation > view->ask) return Decision{Side::Bid, valuation};
  if (view->has_bid && valuation < view->bid) return Decision{Side::Ask, valuation};
  if (view->has_bid && view->has_ask) {
    // Passive inside the valuation band, one tick behind the touch: depth
    // accumulates under the quote instead of churning it.
    const bool buy = 2 * valuation >= view->bid + view->ask;
    if (buy) {
      return Decision{Side::Bid, std::min(valuation, view->bid - passive_depth)};
    }
    return Decision{Side::Ask, std::max(valuation, view->ask + passive_depth)};
  }
  if (view->has_ask) {
    // No bid side: post a passive buy under the ask, capped by valuation.
    return Decision{Side::Bid, std::min(valuation, view->ask - 1)};
  }
  // No ask side: post a passive sell above the bid, floored by valuation.
  return Decision{Side::Ask, std::max(valuation, view->bid + 1)};
}

void ValueAgent::on_wake(TimeNs now, sim::KernelApi& api) {
  const TimeNs next = now + from_seconds(rng_.exponential(cfg_.wake_rate_per_s));
  if (next <= api.session_close()) api.schedule_wake(id(), next);

  const double signal = rng_.normal(0.0, cfg_.signal_noise_ticks);
  const PriceCents valuation =
      api.fundamental().value_at(now) + static_cast<PriceCents>(std::llround(signal));
  const bool buy_on_tie = rng_.bernoulli(0.5);
  const auto depth = static_cast<PriceCents>(
      rng_.uniform_int(cfg_.passive_depth_min, cfg_.passive_depth_max));
  const auto d = decide(valuation, api.view(id()), cfg_.empty_book_offset, buy_on_tie, depth);
  if (!d) return;
  // An unchanged passive target keeps the resting order in place instead of
  // churning it (a stale-or-filled cancel is rejected harmlessly).
  if (resting_ && d->side == resting_side_ && d->price == resting_price_) return;
  if (resting_) api.submit_cancel(id(), *resting_);
  resting_ = api.submit_limit(id(), d->side, d->price, cfg_.order_size);
  resting_side_ = d->side;
  resting_price_ = d->price;
}

int MomentumAgent::crossover_signal(const std::deque<PriceCents>& mids_x2, int short_window,
                                    int long_window) {
  if (static_cast<int>(mids_x2.size()) < long_window) return 0;
  std::int64_t short_sum = 0, long_sum = 0;
  const auto n = static_cast<int>(mids_x2.size());
  for (int i = n - short_window; i < n; ++i) short_sum += mids_x2[static_cast<std::size_t>(i)];
  for (int i = n - long_window; i < n; ++i) long_sum += mids_x2[static_cast<std::size_t>(i)];
  // short_mean vs long_mean, exact in integers.
  const std::int64_t lhs = short_sum * long_window;
  const std::int64_t rhs = long_sum * short_window;
  return lhs > rhs ? 1 : (lhs < rhs ? -1 : 0);
}

void MomentumAgent::start(sim::KernelApi& api) {
  const TimeNs first =
      api.session_open() + from_seconds(rng_.exponential(cfg_.wake_rate_per_s));
  if (first <= api.session_close()) api.schedule_wake(id(), first);
}

void MomentumAgent::on_wake(TimeNs now, sim::KernelApi& api) {
  const TimeNs next = now + from_seconds(rng_.exponential(cfg_.wake_rate_per_s));
  if (next <= api.session_close()) api.schedule_wake(id(), next);

  const auto view = api.view(id());
  if (!view || !view->has_bid || !view->has_ask) return;
  mids_x2_.push_back(view->bid + view->ask);
  while (static_cast<int>(mids_x2_.size()) > cfg_.long_window) mids_x2_.pop_front();
  const int sig = crossover_signal(mids_x2_, cfg_.short_window, cfg_.long_window);
  if (sig == 0) return;
  api.submit_market(id(), sig > 0 ? Side::Bid : Side::Ask, cfg_.order_size);
}

double volatility_intensity_multiplier(TimeNs t, TimeNs open, TimeNs close) {
  const double mid = 0.5 * (static_cast<double>(open) + static_cast<double>(close));
  const double half = 0.5 * static_cast<double>(close - open);
  const double dist = std::abs(static_cast<double>(t) - mid) / half;
  return 1.0 + 2.0 * dist;
}

void VolatilityAgent::start(sim::KernelApi& api) {
  // Thinning: propose at the peak rate, accept with lambda(t)/peak.
  const double peak = 3.0 * cfg_.base_wake_rate_per_s;
  const TimeNs first = api.session_open() + from_seconds(rng_.exponential(peak));
  if (first <= api.session_close()) api.schedule_wake(id(), first);
}

void VolatilityAgent::on_wake(TimeNs now, sim::KernelApi& api) {
  const double peak = 3.0 * cfg_.base_wake_rate_per_s;
  const TimeNs next = now + from_seconds(rng_.exponential(peak));
  if (next <= api.session_close()) api.schedule_wake(id(), next);

  const double mult = volatility_intensity_multiplier(now, api.session_open(), api.session_close());
  if (!rng_.bernoulli(mult / 3.0)) return;

  const auto view = api.view(id());
  if (rng_.bernoulli(0.5)) {
    // Oversized market order.
    const Qty base = rng_.uniform_int(cfg_.size_min, cfg_.size_max);
    const auto qty = static_cast<Qty>(std::llround(cfg_.size_multiplier * static_cast<double>(base)));
    const Side side = rng_.bernoulli(0.5) ? Side::Bid : Side::Ask;
    api.submit_market(id(), side, std::max<Qty>(1, qty));
    return;
  }
  if (!view || !view->has_bid || !view->has_ask) return;
  // Momentum-biased limit joining the touch.
  int dir = view->trade_sign;
  if (dir == 0 || !rng_.bernoulli(cfg_.momentum_bias_prob)) {
    dir = rng_.bernoulli(0.5) ? 1 : -1;
  }
  const Qty qty = rng_.uniform_int(cfg_.size_min, cfg_.size_max);
  if (dir > 0) {
    api.submit_limit(id(), Side::Bid, view->bid, qty);
  } else {
    api.submit_limit(id(), Side::Ask, view->ask, qty);
  }
}

}  // namespace crumble::agents
