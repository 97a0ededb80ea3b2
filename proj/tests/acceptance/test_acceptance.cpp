// Acceptance suite: one test case per criterion, one printed verdict line
// each. Heavier end-to-end cases share a pool of experiment runs executed
// once up front.
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "crumble/agents/hawkes.hpp"
#include "crumble/core/rng.hpp"
#include "crumble/detect/detector.hpp"
#include "crumble/eval/metrics.hpp"
#include "crumble/eval/pipeline.hpp"
#include "crumble/label/features.hpp"
#include "crumble/label/mlp.hpp"
#include "crumble/lob/book.hpp"
#include "crumble/lob/io.hpp"
#include "crumble/lob/replay.hpp"
#include "crumble/sim/session.hpp"
#include "crumble/truth/ground_truth.hpp"

using namespace crumble;
namespace fs = std::filesystem;

namespace {

void verdict(int criterion, bool pass, const std::string& detail) {
  std::printf("[criterion %d] %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunPool {
  // (regime, driver, seed) -> result, with bulky session data removed.
  std::map<std::string, eval::ExperimentResult> results;
  std::map<std::string, std::string> dirs;
  fs::path root;

  static RunPool& instance() {
    static RunPool pool = build();
    return pool;
  }

  static std::string key(sim::Regime r, sim::RegimeDriver d, std::uint64_t seed) {
    return std::string(sim::regime_name(r)) + "/" + sim::driver_name(d) + "/" +
           std::to_string(seed);
  }

  static RunPool build() {
    RunPool pool;
    pool.root = fs::temp_directory_path() / "crumble_acceptance";
    fs::remove_all(pool.root);
    fs::create_directories(pool.root);

    struct Job {
      sim::Regime regime;
      sim::RegimeDriver driver;
      std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto regime :
         {sim::Regime::Baseline, sim::Regime::Bull, sim::Regime::Bear, sim::Regime::HighVol}) {
      for (const std::uint64_t seed : {1, 2, 3}) {
        jobs.push_back({regime, sim::RegimeDriver::Bernoulli, seed});
      }
    }
    for (const std::uint64_t seed : {1, 2, 3}) {
      jobs.push_back({sim::Regime::Baseline, sim::RegimeDriver::Hawkes, seed});
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::pair<std::string, eval::ExperimentResult>> done(jobs.size());
    std::vector<std::string> dirs(jobs.size());
    auto worker = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        const Job& job = jobs[i];
        eval::ExperimentConfig cfg;
        cfg.run.apply_regime(job.regime);
        cfg.run.market_maker.driver = job.driver;
        cfg.run.seed = job.seed;
        const std::string k = key(job.regime, job.driver, job.seed);
        std::string dir = (RunPool::instance_root() / k).string();
        fs::create_directories(dir);
        auto result = eval::run_experiment(cfg, dir);
        // Session logs are bulky; only the run-level artifacts are needed.
        for (int s = 0; s < cfg.sessions; ++s) {
          fs::remove(fs::path(dir) / ("session_" + std::to_string(s)) / "messages.jsonl");
          fs::remove(fs::path(dir) / ("session_" + std::to_string(s)) / "snapshots.csv");
        }
        done[i] = {k, std::move(result)};
        dirs[i] = dir;
      }
    };
    std::thread t1(worker), t2(worker);
    t1.join();
    t2.join();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      pool.results[done[i].first] = done[i].second;
      pool.dirs[done[i].first] = dirs[i];
    }
    return pool;
  }

  static fs::path instance_root() { return fs::temp_directory_path() / "crumble_acceptance"; }

  double avg_auc(sim::Regime r, sim::RegimeDriver d, const std::string& method) const {
    double sum = 0;
    for (const std::uint64_t seed : {1, 2, 3}) {
      const auto& res = results.at(key(r, d, seed));
      sum += res.methods.at(method).auc.value_or(0.0);
    }
    return sum / 3.0;
  }
};

std::vector<MarketMessage> fuzz_session(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<MarketMessage> log;
  std::vector<OrderId> live;
  OrderId next_id = 1;
  TimeNs ts = 0;
  lob::BookState book;
  for (int i = 0; i < n; ++i) {
    ts += rng.uniform_int(0, 500'000);
    MarketMessage m;
    const double u = rng.uniform01();
    if (u < 0.5 || live.empty()) {
      m = {ts, MsgKind::LimitAdd, rng.bernoulli(0.5) ? Side::Bid : Side::Ask,
           10000 + rng.uniform_int(-15, 15), rng.uniform_int(1, 100), next_id++, 0};
    } else if (u < 0.78) {
      m = {ts, MsgKind::Cancel, Side::Bid, 0, 0,
           live[static_cast<std::size_t>(
               rng.uniform_int(0, static_cast<std::int64_t>(live.size()) - 1))],
           0};
    } else {
      m = {ts, MsgKind::MarketOrder, rng.bernoulli(0.5) ? Side::Bid : Side::Ask, 0,
           rng.uniform_int(1, 140), next_id++, 0};
    }
    const auto eff = book.apply(m);
    if (!eff.book_changed) continue;
    MarketMessage logged = m;
    logged.quantity = eff.logged_quantity;
    if (m.kind == MsgKind::Cancel && eff.canceled_price) logged.price = *eff.canceled_price;
    log.push_back(logged);
    if (m.kind == MsgKind::LimitAdd && book.resting_qty(m.order_id) > 0)
      live.push_back(m.order_id);
    if (m.kind == MsgKind::Cancel)
      live.erase(std::remove(live.begin(), live.end(), m.order_id), live.end());
  }
  return log;
}

}  // namespace

TEST_CASE("criterion 1: exact accounting over a fuzzed session") {
  const auto t_start = std::chrono::steady_clock::now();
  const auto log = fuzz_session(2024, 100'000);
  REQUIRE(log.size() > 50'000);
  const lob::ReplaySeries series(log);
  Rng rng(55);
  const TimeNs t_end = log.back().timestamp;
  bool ok = true;
  std::int64_t checks = 0;
  for (int k = 0; k < 1000; ++k) {
    TimeNs u = rng.uniform_int(0, t_end);
    TimeNs v = rng.uniform_int(0, t_end);
    if (u > v) std::swap(u, v);
    for (const Side s : {Side::Bid, Side::Ask}) {
      for (const PriceCents p : series.touched_levels(s)) {
        const auto fl = series.flow_volumes(s, p, u, v);
        const Qty dq = series.depth_at_time(s, p, v) - series.depth_at_time(s, p, u);
        ++checks;
        if (dq != fl.added - fl.canceled - fl.executed) ok = false;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                          .count();
  const bool in_time = secs < 10.0;
  verdict(1, ok && in_time,
          "identity exact over " + std::to_string(checks) + " level-interval checks in " +
              std::to_string(secs) + " s");
  CHECK(ok);
  CHECK(in_time);
}

TEST_CASE("criterion 2: byte-identical reruns of the experiment pipeline") {
  eval::ExperimentConfig cfg;
  cfg.run.session_close = 20 * 60 * kNsPerSec;  // compact run, full pipeline
  cfg.sessions = 1;
  cfg.run.seed = 77;
  const auto root = fs::temp_directory_path() / "crumble_determinism";
  fs::remove_all(root);
  const std::string a = (root / "a").string();
  const std::string b = (root / "b").string();
  eval::run_experiment(cfg, a);
  eval::run_experiment(cfg, b);
  bool ok = true;
  std::string which;
  for (const std::string rel :
       {"session_0/messages.jsonl", "candidates.csv", "model.json", "metrics.json",
        "scores.csv"}) {
    if (slurp(a + "/" + rel) != slurp(b + "/" + rel)) {
      ok = false;
      which += rel + " ";
    }
  }
  verdict(2, ok, ok ? "messages.jsonl, candidates.csv, model.json, metrics.json identical"
                    : "mismatch in: " + which);
  CHECK(ok);
  fs::remove_all(root);
}

TEST_CASE("criterion 3: implementations match brute-force oracles") {
  Rng rng(808);
  bool all_ok = true;
  std::string fail;

  // IoU: rational arithmetic against exact integer overlap.
  for (int i = 0; i < 150; ++i) {
    const TimeNs a0 = rng.uniform_int(0, 1000), a1 = a0 + rng.uniform_int(0, 400);
    const TimeNs b0 = rng.uniform_int(0, 1000), b1 = b0 + rng.uniform_int(0, 400);
    const TimeNs inter =
        std::max<TimeNs>(0, std::min(a1, b1) - std::max(a0, b0));
    const TimeNs uni = (a1 - a0) + (b1 - b0) - inter;
    double expect;
    if ((a1 == a0) && (b1 == b0))
      expect = a0 == b0 ? 1.0 : 0.0;
    else
      expect = uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
    if (truth::iou({a0, a1}, {b0, b1}) != expect) {
      all_ok = false;
      fail += "iou ";
      break;
    }
  }

  // Interval merging vs a linear scan.
  for (int rep = 0; rep < 120 && all_ok; ++rep) {
    std::vector<lob::RegimeRecord> trace;
    TimeNs ts = 0;
    for (int i = 0; i < 120; ++i) {
      ts += rng.uniform_int(1, 100) * kNsPerMs;
      trace.push_back({ts, rng.uniform(0.1, 0.9), "bernoulli", false});
    }
    const TimeNs gap = rng.uniform_int(0, 250) * kNsPerMs;
    const TimeNs session_end = ts + kNsPerSec;
    const auto events = truth::build_intervals(trace, 0.15, gap, session_end);
    for (const Side side : {Side::Bid, Side::Ask}) {
      std::vector<truth::Interval> spans;
      std::optional<TimeNs> open;
      for (const auto& r : trace) {
        const bool on = truth::indicator(side, r.beta, 0.15);
        if (on && !open) open = r.ts;
        if (!on && open) {
          spans.push_back({*open, r.ts});
          open.reset();
        }
      }
      if (open) spans.push_back({*open, session_end});
      std::vector<truth::Interval> merged;
      for (const auto& sp : spans) {
        if (!merged.empty() && sp.start - merged.back().end < gap)
          merged.back().end = sp.end;
        else
          merged.push_back(sp);
      }
      std::vector<truth::Interval> got;
      for (const auto& ev : events)
        if (ev.side == side) got.push_back(ev.span);
      if (got.size() != merged.size()) {
        all_ok = false;
        fail += "merge ";
        break;
      }
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (got[i].start != merged[i].start || got[i].end != merged[i].end) {
          all_ok = false;
          fail += "merge ";
          break;
        }
      }
    }
  }

  // Event matching vs exhaustive assignment enumeration.
  int matching_checked = 0;
  for (int rep = 0; rep < 150 && all_ok; ++rep) {
    const int np = static_cast<int>(rng.uniform_int(0, 8));
    const int ng = static_cast<int>(rng.uniform_int(0, 8));
    std::vector<truth::Interval> preds, gts;
    for (int i = 0; i < np; ++i) {
      const TimeNs a = rng.uniform_int(0, 1200);
      preds.push_back({a, a + rng.uniform_int(20, 260)});
    }
    for (int j = 0; j < ng; ++j) {
      const TimeNs a = rng.uniform_int(0, 1200);
      gts.push_back({a, a + rng.uniform_int(20, 260)});
    }
    const auto rep_match = truth::match_events(preds, gts, 0.3);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(np));
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < ng; ++j)
        if (truth::iou(preds[static_cast<std::size_t>(i)],
                       gts[static_cast<std::size_t>(j)]) >= 0.3)
          adj[static_cast<std::size_t>(i)].push_back(j);
    std::vector<char> used(static_cast<std::size_t>(ng), 0);
    std::function<int(int)> enumerate = [&](int i) -> int {
      if (i == np) return 0;
      int best = enumerate(i + 1);
      for (const int j : adj[static_cast<std::size_t>(i)]) {
        if (used[static_cast<std::size_t>(j)]) continue;
        used[static_cast<std::size_t>(j)] = 1;
        best = std::max(best, 1 + enumerate(i + 1));
        used[static_cast<std::size_t>(j)] = 0;
      }
      return best;
    };
    const int maximum = enumerate(0);
    ++matching_checked;
    if (rep_match.tp != maximum) {
      all_ok = false;
      fail += "matching ";
    }
  }

  // ROC/AUC vs the pairwise U statistic.
  for (int rep = 0; rep < 120 && all_ok; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(4, 120));
    std::vector<double> scores;
    std::vector<int> labels;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      scores.push_back(static_cast<double>(rng.uniform_int(0, 12)));
      const int y = rng.bernoulli(0.5) ? 1 : 0;
      pos += y;
      labels.push_back(y);
    }
    if (pos == 0 || pos == n) continue;
    const auto r = eval::roc_auc(scores, labels);
    double u = 0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!labels[i]) continue;
      for (std::size_t j = 0; j < scores.size(); ++j) {
        if (labels[j]) continue;
        ++pairs;
        u += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
      }
    }
    const double expect = u / static_cast<double>(pairs);
    if (std::abs(r->auc - expect) > 1e-10 * std::max(1.0, std::abs(expect))) {
      all_ok = false;
      fail += "auc ";
    }
  }

  // Percentile thresholds and robust scaling vs the stated convention.
  for (int rep = 0; rep < 120 && all_ok; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(1, 80));
    std::vector<double> x;
    for (int i = 0; i < n; ++i) x.push_back(rng.uniform(-50, 50));
    const double pct = rng.uniform(0, 100);
    auto sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const double h = (n - 1) * pct / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double expect =
        lo + 1 >= sorted.size()
            ? sorted.back()
            : sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
    const double got = detect::percentile_linear(x, pct);
    if (std::abs(got - expect) > 1e-10 * std::max(1.0, std::abs(expect))) {
      all_ok = false;
      fail += "percentile ";
    }
    // scaler: median/IQR from the same convention
    std::vector<std::vector<double>> rows;
    for (const double v : x) rows.push_back({v});
    label::RobustScaler sc;
    sc.fit(rows);
    const double med = detect::percentile_linear(x, 50.0);
    double iqr = detect::percentile_linear(x, 75.0) - detect::percentile_linear(x, 25.0);
    if (iqr == 0) iqr = 1.0;
    const double probe = rng.uniform(-60, 60);
    const double want = std::clamp((probe - med) / iqr, -label::RobustScaler::kClipLimit,
                                   label::RobustScaler::kClipLimit);
    if (std::abs(sc.transform({probe})[0] - want) > 1e-10) {
      all_ok = false;
      fail += "scaler ";
    }
  }

  // Hawkes recursion vs the direct kernel sum.
  {
    sim::HawkesCfg hcfg;
    hcfg.max_rate = 1e12;
    agents::HawkesIntensity h(hcfg);
    std::vector<double> times;
    TimeNs t = 0;
    for (int i = 0; i < 2000 && all_ok; ++i) {
      t += rng.uniform_int(1, 3 * kNsPerSec);
      const double lam = h.intensity_at(t);
      double direct = hcfg.base_rate;
      for (const double ti : times)
        direct += hcfg.excitation * std::exp(-hcfg.decay_per_s * (seconds(t) - ti));
      if (std::abs(lam - direct) > 1e-10 * std::max(1.0, direct)) {
        all_ok = false;
        fail += "hawkes ";
      }
      h.add_event(t);
      times.push_back(seconds(t));
    }
  }

  // Temporal features vs the quadratic oracle.
  for (int rep = 0; rep < 100 && all_ok; ++rep) {
    std::vector<detect::CandidateEvent> evs;
    TimeNs ts = 0;
    const int n = static_cast<int>(rng.uniform_int(1, 60));
    for (int i = 0; i < n; ++i) {
      ts += rng.uniform_int(kNsPerMs, 4 * kNsPerSec);
      detect::CandidateEvent ev;
      ev.t0 = ts;
      ev.t1 = ts + rng.uniform_int(kNsPerMs, kNsPerSec);
      ev.x.depletion_speed = rng.uniform(0, 50);
      ts = ev.t1;
      evs.push_back(ev);
    }
    std::vector<detect::CandidateEvent*> ptrs;
    for (auto& e : evs) ptrs.push_back(&e);
    const TimeNs lb = 60 * kNsPerSec;
    label::compute_temporal_features(ptrs, 0, lb);
    for (std::size_t i = 0; i < evs.size() && all_ok; ++i) {
      const TimeNs prev_end = i == 0 ? 0 : evs[i - 1].t1;
      const double gap = std::max(0.0, seconds(evs[i].t0 - prev_end));
      int count = 0;
      double sum = 0;
      for (std::size_t j = 0; j < i; ++j)
        if (evs[j].t1 > evs[i].t0 - lb) {
          ++count;
          sum += evs[j].x.depletion_speed;
        }
      if (std::abs(evs[i].x.temporal_gap - gap) > 1e-10 ||
          evs[i].x.temporal_count != count ||
          std::abs(evs[i].x.temporal_ds_sum - sum) > 1e-10 * std::max(1.0, sum)) {
        all_ok = false;
        fail += "temporal ";
      }
    }
  }

  verdict(3, all_ok,
          all_ok ? "iou, merging, matching (" + std::to_string(matching_checked) +
                       " instances), auc, percentiles, scaler, hawkes, temporal all agree"
                 : "oracle mismatch: " + fail);
  CHECK(all_ok);
}

TEST_CASE("criterion 4: analytic gradients match finite differences") {
  label::MlpConfig cfg;
  cfg.input_dim = 9;
  cfg.dropout = 0.0;
  label::Mlp model(cfg, 3);
  Rng rng(99);
  double worst = 0.0;
  for (int batch = 0; batch < 20; ++batch) {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 16; ++i) {
      std::vector<double> x(9);
      for (auto& v : x) v = rng.uniform(-2, 2);
      xs.push_back(std::move(x));
      ys.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
    }
    auto loss_at = [&](const label::Mlp& m) {
      double total = 0;
      for (std::size_t i = 0; i < xs.size(); ++i)
        total += label::bce_loss(label::sigmoid(m.score(xs[i])), ys[i]);
      return total / static_cast<double>(xs.size());
    };
    std::vector<double> grad(model.param_count(), 0.0);
    label::Mlp::Tape tape;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double s = model.forward(xs[i], nullptr, tape);
      model.backward(tape, (label::sigmoid(s) - ys[i]) / static_cast<double>(xs.size()), grad);
    }
    Rng pick(7 + static_cast<std::uint64_t>(batch));
    for (int probe = 0; probe < 25; ++probe) {
      const auto j = static_cast<std::size_t>(
          pick.uniform_int(0, static_cast<std::int64_t>(model.param_count()) - 1));
      const double h = 1e-6 * std::max(1.0, std::abs(model.params()[j]));
      label::Mlp up = model, dn = model;
      up.params()[j] += h;
      dn.params()[j] -= h;
      const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
      const double rel =
          std::abs(fd - grad[j]) / std::max({1e-8, std::abs(fd), std::abs(grad[j])});
      worst = std::max(worst, rel);
    }
  }
  const bool ok = worst <= 1e-4;
  verdict(4, ok, "worst relative error " + std::to_string(worst) + " over 20 batches");
  CHECK(ok);
}

TEST_CASE("criterion 5: detector recall and the LOB-only property") {
  // Single desk-scale baseline session, exactly as stated: 2 simulated
  // hours, switch probability 0.05, hold window 1 s.
  sim::RunConfig rc;
  rc.apply_regime(sim::Regime::Baseline);
  rc.seed = 1;
  const auto sim_out = sim::run_session(rc);
  const auto gts = truth::build_intervals(sim_out.regime, rc.xi, rc.truth_merge_gap,
                                          rc.session_close);
  detect::DetectorParams params;
  const lob::ReplaySeries series(sim_out.log);
  const auto det = detect::run_detector(series, params, rc.session_open, rc.session_close);
  int tp = 0, fn = 0;
  for (const Side side : {Side::Bid, Side::Ask}) {
    std::vector<truth::Interval> preds, gt;
    for (const auto& ev : det.candidates)
      if (ev.side == side) preds.push_back({ev.t0, ev.t1});
    for (const auto& g : gts)
      if (g.side == side) gt.push_back(g.span);
    const auto rep = truth::match_events(preds, gt, 0.3);
    tp += rep.tp;
    fn += rep.fn;
  }
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const bool recall_ok = recall >= 0.5;

  // LOB-only: strip agent ids and regime data; detector output must be
  // identical.
  auto stripped = sim_out.log;
  for (auto& m : stripped) m.agent_id = 0;
  const lob::ReplaySeries series2(stripped);
  const auto det2 = detect::run_detector(series2, params, rc.session_open, rc.session_close);
  bool lob_only = det.steps.size() == det2.steps.size() &&
                  det.candidates.size() == det2.candidates.size();
  if (lob_only) {
    for (std::size_t i = 0; i < det.candidates.size(); ++i) {
      const auto& a = det.candidates[i];
      const auto& b = det2.candidates[i];
      if (a.t0 != b.t0 || a.t1 != b.t1 || a.side != b.side || a.gate != b.gate ||
          a.x.walk_depth != b.x.walk_depth || a.x.depletion_speed != b.x.depletion_speed ||
          a.x.eff_displacement != b.x.eff_displacement) {
        lob_only = false;
        break;
      }
    }
  }
  verdict(5, recall_ok && lob_only,
          "recall " + std::to_string(recall) + " (>= 0.5), lob-only invariance " +
              (lob_only ? "holds" : "violated"));
  CHECK(recall_ok);
  CHECK(lob_only);
}

TEST_CASE("criterion 6: method ordering on the baseline regime") {
  const auto t_start = std::chrono::steady_clock::now();
  const auto& pool = RunPool::instance();
  const double bin = pool.avg_auc(sim::Regime::Baseline, sim::RegimeDriver::Bernoulli,
                                  "binary_rule");
  const double rff = pool.avg_auc(sim::Regime::Baseline, sim::RegimeDriver::Bernoulli, "rff");
  const double mlp = pool.avg_auc(sim::Regime::Baseline, sim::RegimeDriver::Bernoulli, "mlp");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  const bool order = mlp > rff && rff > bin;
  const bool margin = mlp - bin >= 0.10;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "AUC binary %.3f < rff %.3f < mlp %.3f, margin %.3f (pool wall %.0f s)", bin,
                rff, mlp, mlp - bin, secs);
  verdict(6, order && margin, buf);
  CHECK(order);
  CHECK(margin);
}

TEST_CASE("criterion 7: ordering holds across stressed regimes") {
  const auto& pool = RunPool::instance();
  bool all_ok = true;
  std::string detail;
  for (const auto regime : {sim::Regime::Bull, sim::Regime::Bear, sim::Regime::HighVol}) {
    const double need = regime == sim::Regime::HighVol ? 0.05 : 0.10;
    const double bin = pool.avg_auc(regime, sim::RegimeDriver::Bernoulli, "binary_rule");
    const double rff = pool.avg_auc(regime, sim::RegimeDriver::Bernoulli, "rff");
    const double mlp = pool.avg_auc(regime, sim::RegimeDriver::Bernoulli, "mlp");
    const bool ok = mlp > rff && rff > bin && mlp - bin >= need;
    all_ok = all_ok && ok;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %.3f/%.3f/%.3f ", sim::regime_name(regime), bin, rff,
                  mlp);
    detail += buf;
    CHECK(ok);
  }
  verdict(7, all_ok, detail + "(binary/rff/mlp per regime)");
}

TEST_CASE("criterion 8: temporal features and clustering under the hawkes driver") {
  const auto& pool = RunPool::instance();
  const double mlp = pool.avg_auc(sim::Regime::Baseline, sim::RegimeDriver::Hawkes, "mlp");
  const double mlp_t =
      pool.avg_auc(sim::Regime::Baseline, sim::RegimeDriver::Hawkes, "mlp_temporal");
  bool cov_ok = true;
  double min_cov = 1e9;
  double bern_cov = 0.0;
  for (const std::uint64_t seed : {1, 2, 3}) {
    const double cov =
        pool.results.at(RunPool::key(sim::Regime::Baseline, sim::RegimeDriver::Hawkes, seed))
            .switch_cov;
    min_cov = std::min(min_cov, cov);
    if (cov <= 1.0) cov_ok = false;
    bern_cov += pool.results
                    .at(RunPool::key(sim::Regime::Baseline, sim::RegimeDriver::Bernoulli, seed))
                    .switch_cov /
                3.0;
  }
  const bool temporal_ok = mlp_t >= mlp;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "AUC mlp %.3f vs mlp+temporal %.3f; hawkes min CoV %.2f > 1 (bernoulli %.2f)",
                mlp, mlp_t, min_cov, bern_cov);
  verdict(8, temporal_ok && cov_ok, buf);
  CHECK(temporal_ok);
  CHECK(cov_ok);
}

TEST_CASE("criterion 9: gate dominance in every produced scores file") {
  const auto& pool = RunPool::instance();
  bool ok = true;
  std::int64_t gated_out = 0;
  for (const auto& [k, dir] : pool.dirs) {
    const auto events = eval::read_scores_csv(dir + "/scores.csv");
    for (const auto& e : events) {
      if (e.gate) continue;
      ++gated_out;
      if (e.p_mlp != 0.0 || e.p_mlp_temporal != 0.0 || e.p_rff != 0.0) ok = false;
    }
  }
  verdict(9, ok,
          "probability exactly 0 for all " + std::to_string(gated_out) +
              " gated-out events across " + std::to_string(pool.dirs.size()) + " runs");
  CHECK(ok);
}
