#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crumble/core/rng.hpp"
#include "crumble/detect/detector.hpp"
#include "crumble/lob/replay.hpp"

using namespace crumble;
using detect::DetectorParams;

namespace {

MarketMessage add(TimeNs ts, Side s, PriceCents p, Qty q, OrderId id, AgentId agent = 0) {
  return {ts, MsgKind::LimitAdd, s, p, q, id, agent};
}
MarketMessage market(TimeNs ts, Side s, Qty q, OrderId id) {
  return {ts, MsgKind::MarketOrder, s, 0, q, id, 1};
}
MarketMessage cancel_of(TimeNs ts, OrderId id, Side s, PriceCents p, Qty q) {
  return {ts, MsgKind::Cancel, s, p, q, id, 0};
}

// Two-sided resting book around 10000, both sides 3 deep.
std::vector<MarketMessage> base_book(OrderId& next_id) {
  std::vector<MarketMessage> log;
  const TimeNs t0 = 0;
  for (int k = 0; k < 3; ++k) {
    log.push_back(add(t0 + k, Side::Bid, 9999 - k, 100, next_id++));
    log.push_back(add(t0 + k, Side::Ask, 10001 + k, 100, next_id++));
  }
  return log;
}

}  // namespace

TEST_CASE("a depletion-consistent quote move is a step; replenished moves are not") {
  DetectorParams p;

  // Scenario A: the 10001 ask level is fully canceled after resting; the ask
  // moves 10001 -> 10003 because 10002 is empty.
  {
    OrderId id = 1;
    std::vector<MarketMessage> log;
    log.push_back(add(0, Side::Bid, 9999, 100, id++));
    const OrderId best_ask = id;
    log.push_back(add(1, Side::Ask, 10001, 100, id++));
    log.push_back(add(2, Side::Ask, 10003, 100, id++));
    // resting for a full second, then pulled
    log.push_back(cancel_of(kNsPerSec, best_ask, Side::Ask, 10001, 100));
    const lob::ReplaySeries series(log);
    const auto steps = detect::detect_steps(series, p);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].side == Side::Ask);
    CHECK(steps[0].pre_best == 10001);
    CHECK(steps[0].post_best == 10003);
    CHECK(steps[0].magnitude == 2);
    CHECK(steps[0].q_pre == 100);
    CHECK(steps[0].q_post == 0);
  }

  // Scenario B: same move but half the pre-depth was re-added inside the
  // lookback: replenishment cap (iv) rejects it.
  {
    OrderId id = 1;
    std::vector<MarketMessage> log;
    log.push_back(add(0, Side::Bid, 9999, 100, id++));
    const OrderId a1 = id;
    log.push_back(add(1, Side::Ask, 10001, 50, id++));
    log.push_back(add(2, Side::Ask, 10003, 100, id++));
    const OrderId a2 = id;
    log.push_back(add(kNsPerSec - 10 * kNsPerMs, Side::Ask, 10001, 50, id++));  // fresh refill
    log.push_back(cancel_of(kNsPerSec, a1, Side::Ask, 10001, 50));
    log.push_back(cancel_of(kNsPerSec + 1, a2, Side::Ask, 10001, 50));
    const lob::ReplaySeries series(log);
    const auto steps = detect::detect_steps(series, p);
    CHECK(steps.empty());
  }
}

TEST_CASE("steps recomputed from the raw log satisfy all depletion inequalities") {
  // fuzzed flow, then re-derive each emitted step's conditions independently
  Rng rng(21);
  OrderId id = 1;
  std::vector<MarketMessage> raw;
  lob::BookState book;
  std::vector<OrderId> live;
  TimeNs ts = 0;
  for (int i = 0; i < 4000; ++i) {
    ts += rng.uniform_int(0, 40 * kNsPerMs);
    MarketMessage m;
    const double u = rng.uniform01();
    if (u < 0.45 || live.empty()) {
      m = add(ts, rng.bernoulli(0.5) ? Side::Bid : Side::Ask, 10000 + rng.uniform_int(-8, 8),
              rng.uniform_int(1, 80), id++);
    } else if (u < 0.8) {
      m = {ts, MsgKind::Cancel, Side::Bid, 0, 0,
           live[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(live.size()) - 1))],
           0};
    } else {
      m = market(ts, rng.bernoulli(0.5) ? Side::Bid : Side::Ask, rng.uniform_int(1, 120), id++);
    }
    const auto eff = book.apply(m);
    if (!eff.book_changed) continue;
    MarketMessage logged = m;
    logged.quantity = eff.logged_quantity;
    if (m.kind == MsgKind::Cancel && eff.canceled_price) logged.price = *eff.canceled_price;
    raw.push_back(logged);
    if (m.kind == MsgKind::LimitAdd && book.resting_qty(m.order_id) > 0) live.push_back(m.order_id);
    if (m.kind == MsgKind::Cancel)
      live.erase(std::remove(live.begin(), live.end(), m.order_id), live.end());
  }
  const lob::ReplaySeries series(raw);
  DetectorParams p;
  const auto steps = detect::detect_steps(series, p);
  REQUIRE(!steps.empty());
  for (const auto& st : steps) {
    // recompute from the series with the stated inequalities
    const double qpre = static_cast<double>(st.q_pre);
    CHECK(st.magnitude >= 1);
    CHECK(static_cast<double>(st.q_post) <= p.eps_queue * qpre);
    CHECK(static_cast<double>(st.lookback.canceled + st.lookback.executed) >=
          (1.0 - p.eps_leak) * qpre);
    CHECK(static_cast<double>(st.lookback.added) <= p.eps_add * qpre);
    // and against a direct time-window flow query
    const auto fl = series.flow_volumes(st.side, st.pre_best, st.ts - p.depletion_lookback, st.ts);
    CHECK(fl.added <= st.lookback.added);
  }
}

TEST_CASE("clustering: gap rule, duration split and minimum count") {
  DetectorParams p;
  auto mk_step = [](TimeNs ts, Side s) {
    detect::DeteriorationStep st;
    st.ts = ts;
    st.side = s;
    st.update_idx = ts / kNsPerMs;
    st.magnitude = 1;
    return st;
  };
  // 4 steps at 0,50,100,150 ms -> one event
  {
    std::vector<detect::DeteriorationStep> steps;
    for (const TimeNs t : {0, 50, 100, 150})
      steps.push_back(mk_step(t * kNsPerMs, Side::Bid));
    const auto events = detect::cluster_steps(steps, p);
    REQUIRE(events.size() == 1);
    CHECK(events[0].t0 == 0);
    CHECK(events[0].t1 == 150 * kNsPerMs);
    CHECK(events[0].n_steps == 4);
  }
  // 4 steps, 300 ms gap, 4 steps -> two events
  {
    std::vector<detect::DeteriorationStep> steps;
    for (const TimeNs t : {0, 50, 100, 150, 450, 500, 550, 600})
      steps.push_back(mk_step(t * kNsPerMs, Side::Bid));
    CHECK(detect::cluster_steps(steps, p).size() == 2);
  }
  // 3 steps only -> no event
  {
    std::vector<detect::DeteriorationStep> steps;
    for (const TimeNs t : {0, 50, 100})
      steps.push_back(mk_step(t * kNsPerMs, Side::Bid));
    CHECK(detect::cluster_steps(steps, p).empty());
  }
  // duration split: steps every 150 ms for 3 s -> split at the 2 s bound
  {
    std::vector<detect::DeteriorationStep> steps;
    for (TimeNs t = 0; t <= 3000; t += 150)
      steps.push_back(mk_step(t * kNsPerMs, Side::Ask));
    const auto events = detect::cluster_steps(steps, p);
    REQUIRE(events.size() >= 2);
    for (const auto& ev : events) CHECK(ev.t1 - ev.t0 <= p.max_duration);
  }
  // sides cluster independently
  {
    std::vector<detect::DeteriorationStep> steps;
    for (const TimeNs t : {0, 50, 100, 150}) {
      steps.push_back(mk_step(t * kNsPerMs, Side::Bid));
      steps.push_back(mk_step((t + 10) * kNsPerMs, Side::Ask));
    }
    std::sort(steps.begin(), steps.end(),
              [](const auto& a, const auto& b) { return a.ts < b.ts; });
    CHECK(detect::cluster_steps(steps, p).size() == 2);
  }
}

TEST_CASE("microprice and its smoothing") {
  OrderId id = 1;
  std::vector<MarketMessage> log;
  log.push_back(add(0, Side::Bid, 10000, 30, id++));
  log.push_back(add(1, Side::Ask, 10002, 10, id++));
  const lob::ReplaySeries series(log);
  const detect::EfficientPriceSeries eff(series, 500 * kNsPerMs);
  // micro = (a*Db + b*Da) / (Da + Db) = (10002*30 + 10000*10) / 40 = 10001.5
  CHECK(eff.after_time(1) == doctest::Approx(10001.5));

  // equal depths -> midprice
  std::vector<MarketMessage> log2;
  id = 1;
  log2.push_back(add(0, Side::Bid, 10000, 25, id++));
  log2.push_back(add(1, Side::Ask, 10002, 25, id++));
  const lob::ReplaySeries s2(log2);
  const detect::EfficientPriceSeries e2(s2, 500 * kNsPerMs);
  CHECK(e2.after_time(1) == doctest::Approx(10001.0));

  // constant book: the smoothed series converges to the microprice
  std::vector<MarketMessage> log3;
  id = 1;
  log3.push_back(add(0, Side::Bid, 10000, 30, id++));
  log3.push_back(add(1, Side::Ask, 10002, 10, id++));
  for (int k = 0; k < 50; ++k) {
    log3.push_back(add(kNsPerSec * (k + 1), Side::Bid, 9990, 1, id++));  // far level, book at top unchanged
  }
  const lob::ReplaySeries s3(log3);
  const detect::EfficientPriceSeries e3(s3, 500 * kNsPerMs);
  CHECK(e3.after_time(51 * kNsPerSec) == doctest::Approx(10001.5).epsilon(1e-9));
}

namespace {

// A synthetic pure-withdrawal episode: deep two-sided book, the bid ladder is
// pulled level by level (4 one-tick steps), then fully restored so the
// midprice reverts. Everything rests > 1 s before the event.
struct Scenario {
  std::vector<MarketMessage> log;
  TimeNs t0 = 0, t1 = 0;
  OrderId bid_ids[8];
};

Scenario pure_withdrawal() {
  Scenario sc;
  OrderId id = 1;
  auto& log = sc.log;
  // reference depth far on both sides plus 4 bid levels to walk through
  log.push_back(add(0, Side::Ask, 10001, 200, id++));
  log.push_back(add(1, Side::Ask, 10002, 200, id++));
  for (int k = 0; k < 4; ++k) {
    sc.bid_ids[k] = id;
    log.push_back(add(2 + k, Side::Bid, 10000 - k, 100, id++));
  }
  log.push_back(add(10, Side::Bid, 9990, 300, id++));  // floor level
  // quiet pre-window with heartbeat updates far from the touch
  for (int k = 1; k <= 20; ++k)
    log.push_back(add(k * 100 * kNsPerMs, Side::Ask, 10050 + k, 1, id++));

  const TimeNs start = 2 * kNsPerSec + 500 * kNsPerMs;
  for (int k = 0; k < 4; ++k) {
    log.push_back(cancel_of(start + k * 100 * kNsPerMs, sc.bid_ids[k], Side::Bid,
                            10000 - k, 100));
  }
  sc.t0 = start;
  sc.t1 = start + 300 * kNsPerMs;
  // restore the bid ladder right after the event so the mid reverts
  for (int k = 0; k < 4; ++k) {
    log.push_back(add(sc.t1 + 200 * kNsPerMs + k, Side::Bid, 10000 - k, 100, id++));
  }
  // post-window heartbeats
  for (int k = 1; k <= 40; ++k)
    log.push_back(add(sc.t1 + 200 * kNsPerMs + k * 100 * kNsPerMs, Side::Ask, 10090 + k, 1,
                      id++));
  return sc;
}

}  // namespace

TEST_CASE("pure withdrawal episode passes every hard filter; features match hand values") {
  DetectorParams p;
  const auto sc = pure_withdrawal();
  const lob::ReplaySeries series(sc.log);
  auto run = detect::run_detector(series, p, 0, sc.log.back().timestamp + kNsPerSec);
  REQUIRE(run.candidates.size() == 1);
  const auto& ev = run.candidates[0];
  CHECK(ev.side == Side::Bid);
  CHECK(ev.t0 == sc.t0);
  CHECK(ev.t1 == sc.t1);
  CHECK(ev.n_steps == 4);
  CHECK(ev.filters.book_consistency);
  CHECK(ev.filters.eff_price);
  CHECK(ev.filters.opposite_side);
  CHECK(ev.filters.transience);
  CHECK(ev.gate);
  // WD: bid walked 10000 -> 9990 across the event boundary = 10 ticks
  CHECK(ev.x.walk_depth == doctest::Approx(10.0));
  // DS: 400 shares removed over 0.3 s
  CHECK(ev.x.depletion_speed == doctest::Approx(400.0 / 0.3).epsilon(1e-6));
  // RR: all 400 restored within the refill window
  CHECK(ev.x.refill_ratio == doctest::Approx(400.0 / 401.0));
  CHECK(ev.x.impact_decay == doctest::Approx(1.0 - ev.rho_rev));
}

TEST_CASE("two-sided permanent repricing fails stability and transience") {
  DetectorParams p;
  OrderId id = 1;
  std::vector<MarketMessage> log;
  // book with 4 bid levels, one working ask, and a bid floor
  for (int k = 0; k < 4; ++k) log.push_back(add(k, Side::Bid, 10000 - k, 80, id++));
  OrderId ask_id = id;
  log.push_back(add(4, Side::Ask, 10002, 80, id++));
  log.push_back(add(8, Side::Bid, 9985, 400, id++));
  for (int k = 1; k <= 20; ++k)
    log.push_back(add(k * 100 * kNsPerMs, Side::Ask, 10050 + k, 1, id++));

  // both sides shift ~8 ticks down permanently: sells walk the bid while the
  // working ask is re-quoted lower after every step
  const TimeNs start = 2 * kNsPerSec + 500 * kNsPerMs;
  TimeNs t = start;
  for (int k = 0; k < 4; ++k) {
    log.push_back(market(t, Side::Ask, 80, id++));  // eat one bid level
    const PriceCents new_ask = 10000 - 2 * k;       // 10000, 9998, 9996, 9994
    const OrderId replacement = id;
    log.push_back(add(t + 1, Side::Ask, new_ask, 80, id++));
    log.push_back(cancel_of(t + 2, ask_id, Side::Ask, k == 0 ? 10002 : 10002 - 2 * k, 80));
    ask_id = replacement;
    t += 100 * kNsPerMs;
  }
  // permanent lower book
  for (int k = 1; k <= 40; ++k)
    log.push_back(add(t + k * 100 * kNsPerMs, Side::Bid, 9960 - k, 1, id++));

  const lob::ReplaySeries series(log);
  auto run = detect::run_detector(series, p, 0, log.back().timestamp + kNsPerSec);
  bool found_bid_event = false;
  for (const auto& ev : run.candidates) {
    if (ev.side != Side::Bid) continue;
    found_bid_event = true;
    CHECK(!ev.filters.opposite_side);  // ask moved 8 ticks
    CHECK(!ev.filters.transience);     // no reversion
    CHECK(!ev.gate);
  }
  CHECK(found_bid_event);
}

TEST_CASE("reversion ratio arithmetic example") {
  // m_pre = 10000, m_ext = 10005, m_post = 10001 -> rho = 1/5 <= 0.6
  const double rho = std::abs(10001.0 - 10000.0) / (std::abs(10005.0 - 10000.0) + 1e-9);
  CHECK(rho == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(rho <= 0.6);
}

TEST_CASE("boundary events are dropped, not failed") {
  DetectorParams p;
  const auto sc = pure_withdrawal();
  const lob::ReplaySeries series(sc.log);
  // session ends right at the last step: post windows do not fit
  auto run = detect::run_detector(series, p, 0, sc.t1 + kNsPerMs);
  CHECK(run.candidates.empty());
  CHECK(run.boundary_dropped == 1);
}

TEST_CASE("relaxing any tolerance never turns a passing event failing") {
  DetectorParams p;
  const auto sc = pure_withdrawal();
  const lob::ReplaySeries series(sc.log);
  const TimeNs close = sc.log.back().timestamp + kNsPerSec;
  auto base = detect::run_detector(series, p, 0, close);
  REQUIRE(base.candidates.size() == 1);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    DetectorParams q = p;
    q.kappa_miss = p.kappa_miss + rng.uniform(0, 0.5);
    q.kappa_repr = p.kappa_repr + rng.uniform(0, 0.5);
    q.kappa_eff = p.kappa_eff + rng.uniform(0, 10);
    q.kappa_eff_post = p.kappa_eff_post + rng.uniform(0, 10);
    q.kappa_opp = p.kappa_opp + rng.uniform(0, 10);
    q.kappa_rev = p.kappa_rev + rng.uniform(0, 0.4);
    auto relaxed = detect::run_detector(series, q, 0, close);
    REQUIRE(relaxed.candidates.size() == 1);
    CHECK(relaxed.candidates[0].gate);
  }
}

TEST_CASE("detector output is invariant to stripping agent ids") {
  const auto sc = pure_withdrawal();
  auto stripped = sc.log;
  for (auto& m : stripped) m.agent_id = 0;
  DetectorParams p;
  const TimeNs close = sc.log.back().timestamp + kNsPerSec;
  const lob::ReplaySeries s1(sc.log), s2(stripped);
  const auto r1 = detect::run_detector(s1, p, 0, close);
  const auto r2 = detect::run_detector(s2, p, 0, close);
  REQUIRE(r1.candidates.size() == r2.candidates.size());
  REQUIRE(r1.steps.size() == r2.steps.size());
  for (std::size_t i = 0; i < r1.candidates.size(); ++i) {
    CHECK(r1.candidates[i].t0 == r2.candidates[i].t0);
    CHECK(r1.candidates[i].gate == r2.candidates[i].gate);
    CHECK(r1.candidates[i].x.walk_depth == r2.candidates[i].x.walk_depth);
    CHECK(r1.candidates[i].x.eff_displacement == r2.candidates[i].x.eff_displacement);
  }
}

TEST_CASE("mirrored logs swap sides, preserve features and negate the displacement") {
  const auto sc = pure_withdrawal();
  // reflect about 2*K so integer prices stay integers: p' = K - p
  const PriceCents K = 25000;
  auto mirrored = sc.log;
  for (auto& m : mirrored) {
    m.side = opposite(m.side);
    if (m.kind != MsgKind::MarketOrder) m.price = K - m.price;
  }
  DetectorParams p;
  const TimeNs close = sc.log.back().timestamp + kNsPerSec;
  const lob::ReplaySeries s1(sc.log), s2(mirrored);
  const auto r1 = detect::run_detector(s1, p, 0, close);
  const auto r2 = detect::run_detector(s2, p, 0, close);
  REQUIRE(r1.steps.size() == r2.steps.size());
  for (std::size_t i = 0; i < r1.steps.size(); ++i) {
    CHECK(r1.steps[i].side == opposite(r2.steps[i].side));
    CHECK(r1.steps[i].magnitude == r2.steps[i].magnitude);
    CHECK(r1.steps[i].ts == r2.steps[i].ts);
  }
  REQUIRE(r1.candidates.size() == r2.candidates.size());
  for (std::size_t i = 0; i < r1.candidates.size(); ++i) {
    const auto& a = r1.candidates[i];
    const auto& b = r2.candidates[i];
    CHECK(a.side == opposite(b.side));
    CHECK(a.x.walk_depth == doctest::Approx(b.x.walk_depth).epsilon(1e-12));
    CHECK(a.x.depletion_speed == doctest::Approx(b.x.depletion_speed).epsilon(1e-12));
    CHECK(a.x.refill_ratio == doctest::Approx(b.x.refill_ratio).epsilon(1e-12));
    CHECK(a.x.spread_response == doctest::Approx(b.x.spread_response).epsilon(1e-12));
    CHECK(a.x.impact_decay == doctest::Approx(b.x.impact_decay).epsilon(1e-12));
    CHECK(a.x.eff_displacement == doctest::Approx(-b.x.eff_displacement).epsilon(1e-12));
    CHECK(a.gate == b.gate);
  }
}

TEST_CASE("percentile interpolation matches the order-statistics oracle") {
  // 100 values 1..100, 5th percentile with type-7 interpolation = 5.95
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(detect::percentile_linear(v, 5.0) == doctest::Approx(5.95));
  // all-equal -> that value
  CHECK(detect::percentile_linear(std::vector<double>(20, 3.5), 5.0) == doctest::Approx(3.5));
  // randomized vs independent computation
  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(1, 60));
    std::vector<double> x;
    for (int i = 0; i < n; ++i) x.push_back(rng.uniform(-10, 10));
    const double pct = rng.uniform(0, 100);
    auto sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const double h = (n - 1) * pct / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double expect = lo + 1 >= sorted.size()
                              ? sorted.back()
                              : sorted[lo] + (h - static_cast<double>(lo)) *
                                                 (sorted[lo + 1] - sorted[lo]);
    CHECK(detect::percentile_linear(x, pct) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("threshold calibration uses filter-passing events and falls back when scarce") {
  DetectorParams p;
  p.theta_ds = 123.0;
  p.theta_rr = 0.77;
  std::vector<detect::CandidateEvent> events;
  for (int i = 1; i <= 100; ++i) {
    detect::CandidateEvent ev;
    ev.gate = true;
    ev.features_ok = true;
    ev.x.depletion_speed = i;
    ev.x.refill_ratio = i / 100.0;
    events.push_back(ev);
  }
  const auto thr = detect::calibrate_percentile_thresholds(events, p);
  CHECK(thr.from_percentile);
  CHECK(thr.theta_ds == doctest::Approx(5.95));
  CHECK(thr.theta_rr == doctest::Approx(0.0595));
  // too few -> configured absolute defaults with a warning flag
  events.resize(5);
  const auto fallback = detect::calibrate_percentile_thresholds(events, p);
  CHECK(!fallback.from_percentile);
  CHECK(fallback.theta_ds == 123.0);
  CHECK(fallback.theta_rr == 0.77);
}

TEST_CASE("gated binary label: dominance and inclusive boundaries") {
  DetectorParams p;
  detect::CalibratedThresholds thr{10.0, 0.2, true};
  detect::CandidateEvent ev;
  ev.features_ok = true;
  ev.gate = false;
  ev.x = {100, 100, 1.0, 5, 0, 1.0, 0, 0, 0};
  CHECK(detect::binary_label(ev, p, thr) == 0);  // gate dominates

  ev.gate = true;
  ev.x.walk_depth = p.theta_wd;
  ev.x.depletion_speed = thr.theta_ds;
  ev.x.refill_ratio = thr.theta_rr;
  ev.x.spread_response = p.theta_sr;
  ev.x.impact_decay = p.theta_id;
  ev.x.eff_displacement = p.theta_epd;  // |EPD| == theta passes (inclusive)
  CHECK(detect::binary_label(ev, p, thr) == 1);

  ev.x.walk_depth = 1.0;  // below theta_wd = 2
  CHECK(detect::binary_label(ev, p, thr) == 0);
  ev.x.walk_depth = p.theta_wd;
  ev.x.eff_displacement = p.theta_epd + 0.5;
  CHECK(detect::binary_label(ev, p, thr) == 0);
}
