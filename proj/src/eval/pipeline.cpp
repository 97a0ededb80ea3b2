#include "crumble/eval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "crumble/eval/figures.hpp"
#include "crumble/label/features.hpp"
#include "crumble/lob/io.hpp"
#include "crumble/lob/replay.hpp"
#include "crumble/sim/session.hpp"
#include "crumble/core/rng.hpp"
#include "crumble/truth/ground_truth.hpp"

namespace crumble::eval {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void ExperimentConfig::apply_full_protocol() {
  sessions = 5;
  run.session_close = run.session_open + static_cast<TimeNs>(6.5 * 3600.0 * 1e9);
}

std::string ExperimentConfig::to_json() const {
  ordered_json j;
  j["run"] = ordered_json::parse(run.to_json());
  const auto& d = detector;
  j["detector"] = {{"depletion_lookback_ns", d.depletion_lookback},
                   {"eps_queue", d.eps_queue},
                   {"eps_leak", d.eps_leak},
                   {"eps_add", d.eps_add},
                   {"cluster_gap_ns", d.cluster_gap},
                   {"max_duration_ns", d.max_duration},
                   {"min_steps", d.min_steps},
                   {"h_pre_ns", d.h_pre},
                   {"h_post_ns", d.h_post},
                   {"h_ref_ns", d.h_ref},
                   {"h_rev_ns", d.h_rev},
                   {"kappa_miss", d.kappa_miss},
                   {"kappa_repr", d.kappa_repr},
                   {"kappa_eff", d.kappa_eff},
                   {"kappa_eff_post", d.kappa_eff_post},
                   {"kappa_opp", d.kappa_opp},
                   {"kappa_rev", d.kappa_rev},
                   {"theta_wd", d.theta_wd},
                   {"theta_sr", d.theta_sr},
                   {"theta_epd", d.theta_epd},
                   {"theta_id", d.theta_id},
                   {"theta_ds_fallback", d.theta_ds},
                   {"theta_rr_fallback", d.theta_rr},
                   {"threshold_percentile", d.threshold_percentile},
                   {"ema_half_life_ns", d.ema_half_life}};
  j["labeler"] = {{"hidden", hidden},
                  {"dropout", dropout},
                  {"lr", optimizer.lr},
                  {"weight_decay", optimizer.weight_decay},
                  {"batch_size", batch_size},
                  {"max_epochs", max_epochs},
                  {"patience", patience},
                  {"restarts", restarts},
                  {"rff_features", rff.num_features},
                  {"temporal_lookback_ns", temporal_lookback}};
  j["sessions"] = sessions;
  j["theta_iou"] = theta_iou;
  j["continuous_targets"] = continuous_targets;
  j["split"] = {{"train", split_train}, {"val", split_val}};
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  const auto j = ordered_json::parse(text);
  ExperimentConfig c;
  if (j.contains("run")) c.run = sim::RunConfig::from_json(j["run"].dump());
  if (j.contains("detector")) {
    const auto& d = j["detector"];
    auto& p = c.detector;
    p.depletion_lookback = d.value("depletion_lookback_ns", p.depletion_lookback);
    p.eps_queue = d.value("eps_queue", p.eps_queue);
    p.eps_leak = d.value("eps_leak", p.eps_leak);
    p.eps_add = d.value("eps_add", p.eps_add);
    p.cluster_gap = d.value("cluster_gap_ns", p.cluster_gap);
    p.max_duration = d.value("max_duration_ns", p.max_duration);
    p.min_steps = d.value("min_steps", p.min_steps);
    p.h_pre = d.value("h_pre_ns", p.h_pre);
    p.h_post = d.value("h_post_ns", p.h_post);
    p.h_ref = d.value("h_ref_ns", p.h_ref);
    p.h_rev = d.value("h_rev_ns", p.h_rev);
    p.kappa_miss = d.value("kappa_miss", p.kappa_miss);
    p.kappa_repr = d.value("kappa_repr", p.kappa_repr);
    p.kappa_eff = d.value("kappa_eff", p.kappa_eff);
    p.kappa_eff_post = d.value("kappa_eff_post", p.kappa_eff_post);
    p.kappa_opp = d.value("kappa_opp", p.kappa_opp);
    p.kappa_rev = d.value("kappa_rev", p.kappa_rev);
    p.theta_wd = d.value("theta_wd", p.theta_wd);
    p.theta_sr = d.value("theta_sr", p.theta_sr);
    p.theta_epd = d.value("theta_epd", p.theta_epd);
    p.theta_id = d.value("theta_id", p.theta_id);
    p.theta_ds = d.value("theta_ds_fallback", p.theta_ds);
    p.theta_rr = d.value("theta_rr_fallback", p.theta_rr);
    p.threshold_percentile = d.value("threshold_percentile", p.threshold_percentile);
    p.ema_half_life = d.value("ema_half_life_ns", p.ema_half_life);
  }
  if (j.contains("labeler")) {
    const auto& l = j["labeler"];
    c.hidden = l.value("hidden", c.hidden);
    c.dropout = l.value("dropout", c.dropout);
    c.optimizer.lr = l.value("lr", c.optimizer.lr);
    c.optimizer.weight_decay = l.value("weight_decay", c.optimizer.weight_decay);
    c.batch_size = l.value("batch_size", c.batch_size);
    c.max_epochs = l.value("max_epochs", c.max_epochs);
    c.patience = l.value("patience", c.patience);
    c.restarts = l.value("restarts", c.restarts);
    c.rff.num_features = l.value("rff_features", c.rff.num_features);
    c.temporal_lookback = l.value("temporal_lookback_ns", c.temporal_lookback);
  }
  c.sessions = j.value("sessions", c.sessions);
  c.theta_iou = j.value("theta_iou", c.theta_iou);
  c.continuous_targets = j.value("continuous_targets", c.continuous_targets);
  if (j.contains("split")) {
    c.split_train = j["split"].value("train", c.split_train);
    c.split_val = j["split"].value("val", c.split_val);
  }
  return c;
}

namespace {

struct PipelineEvent {
  detect::CandidateEvent ev;
  int session = 0;
  Split split = Split::Train;
  double overlap = 0.0;
  double p_mlp = 0.0;
  double p_mlp_temporal = 0.0;
  double p_rff = 0.0;
};

std::vector<double> full_features(const detect::FeatureVector& x) {
  return {x.walk_depth,       x.depletion_speed, x.refill_ratio,
          x.spread_response,  x.eff_displacement, x.impact_decay,
          x.temporal_gap,     x.temporal_count,   x.temporal_ds_sum};
}

double cov_of_intervals(const std::vector<double>& gaps) {
  if (gaps.size() < 2) return 0.0;
  const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) /
                      static_cast<double>(gaps.size());
  if (mean <= 0.0) return 0.0;
  double var = 0.0;
  for (const double g : gaps) var += (g - mean) * (g - mean);
  var /= static_cast<double>(gaps.size());
  return std::sqrt(var) / mean;
}

// Per-method event-level precision/recall on the test span: predicted
// positives (p >= 0.5 / binary label) matched one-to-one against the truth
// intervals that start inside each session's test region.
PrecisionRecall method_event_pr(const std::vector<EventRecord>& events,
                                const std::vector<TruthRecord>& truth, double theta_iou,
                                const std::function<int(const EventRecord&)>& predict) {
  std::map<int, TimeNs> test_start;
  for (const auto& e : events) {
    if (e.split != Split::Test) continue;
    auto it = test_start.find(e.session);
    if (it == test_start.end() || e.t0 < it->second) test_start[e.session] = e.t0;
  }
  int tp = 0, fp = 0, fn = 0;
  for (const auto& [session, start] : test_start) {
    for (const Side side : {Side::Bid, Side::Ask}) {
      std::vector<truth::Interval> preds, gts;
      for (const auto& e : events) {
        if (e.session != session || e.side != side || e.split != Split::Test) continue;
        if (predict(e)) preds.push_back({e.t0, e.t1});
      }
      for (const auto& t : truth) {
        if (t.session != session || t.side != side || t.start < start) continue;
        gts.push_back({t.start, t.end});
      }
      const auto rep = truth::match_events(preds, gts, theta_iou);
      tp += rep.tp;
      fp += rep.fp;
      fn += rep.fn;
    }
  }
  return precision_recall(tp, fp, fn);
}

MethodMetrics method_metrics(const std::vector<EventRecord>& events,
                             const std::vector<TruthRecord>& truth, double theta_iou,
                             const std::function<double(const EventRecord&)>& score,
                             const std::function<int(const EventRecord&)>& predict) {
  MethodMetrics m;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& e : events) {
    if (e.split != Split::Test) continue;
    scores.push_back(score(e));
    labels.push_back(e.target);
  }
  if (const auto roc = roc_auc(scores, labels)) {
    m.auc = roc->auc;
    m.roc = roc->points;
  }
  m.event_pr = method_event_pr(events, truth, theta_iou, predict);
  return m;
}

struct LoadedArtifacts {
  ExperimentConfig cfg;
  std::vector<EventRecord> events;
  std::vector<TruthRecord> truth;
  std::vector<std::vector<lob::RegimeRecord>> regimes;
};

LoadedArtifacts load_run_dir(const std::string& run_dir) {
  LoadedArtifacts a;
  std::ifstream cin(run_dir + "/config.resolved.json");
  if (!cin) throw std::runtime_error("missing config.resolved.json in " + run_dir);
  std::string text((std::istreambuf_iterator<char>(cin)), std::istreambuf_iterator<char>());
  a.cfg = ExperimentConfig::from_json(text);
  a.events = read_scores_csv(run_dir + "/scores.csv");
  a.truth = read_truth_csv(run_dir + "/ground_truth_events.csv");
  for (int s = 0; s < a.cfg.sessions; ++s) {
    a.regimes.push_back(
        lob::read_regime_csv(run_dir + "/session_" + std::to_string(s) + "/regime.csv"));
  }
  return a;
}

ExperimentResult compute_result(const ExperimentConfig& cfg,
                                const std::vector<EventRecord>& events,
                                const std::vector<TruthRecord>& truth,
                                const std::vector<std::vector<lob::RegimeRecord>>& regimes) {
  ExperimentResult r;
  r.n_candidates = static_cast<int>(events.size());
  for (const auto& e : events) {
    if (e.gate) ++r.n_gated;
    if (e.target) ++r.n_positive;
    if (e.target && !e.gate) ++r.gate_misses;
  }
  r.truth_events = static_cast<int>(truth.size());

  // Whole-run detector matching, per session and side.
  int tp = 0, fp = 0, fn = 0;
  for (int s = 0; s < cfg.sessions; ++s) {
    for (const Side side : {Side::Bid, Side::Ask}) {
      std::vector<truth::Interval> preds, gts;
      for (const auto& e : events)
        if (e.session == s && e.side == side) preds.push_back({e.t0, e.t1});
      for (const auto& t : truth)
        if (t.session == s && t.side == side) gts.push_back({t.start, t.end});
      const auto rep = truth::match_events(preds, gts, cfg.theta_iou);
      tp += rep.tp;
      fp += rep.fp;
      fn += rep.fn;
    }
  }
  r.detector_pr = precision_recall(tp, fp, fn);

  r.methods["binary_rule"] = method_metrics(
      events, truth, cfg.theta_iou,
      [](const EventRecord& e) { return static_cast<double>(e.label); },
      [](const EventRecord& e) { return e.label; });
  r.methods["rff"] = method_metrics(
      events, truth, cfg.theta_iou, [](const EventRecord& e) { return e.p_rff; },
      [](const EventRecord& e) { return e.p_rff >= 0.5 ? 1 : 0; });
  r.methods["mlp"] = method_metrics(
      events, truth, cfg.theta_iou, [](const EventRecord& e) { return e.p_mlp; },
      [](const EventRecord& e) { return e.p_mlp >= 0.5 ? 1 : 0; });
  r.methods["mlp_temporal"] = method_metrics(
      events, truth, cfg.theta_iou, [](const EventRecord& e) { return e.p_mlp_temporal; },
      [](const EventRecord& e) { return e.p_mlp_temporal >= 0.5 ? 1 : 0; });

  // Regime-switch clustering: inter-switch gaps pooled across sessions.
  std::vector<double> gaps;
  int switches = 0;
  for (const auto& trace : regimes) {
    std::optional<TimeNs> prev;
    for (const auto& rec : trace) {
      if (!rec.switched) continue;
      ++switches;
      if (prev) gaps.push_back(seconds(rec.ts - *prev));
      prev = rec.ts;
    }
  }
  r.switches = switches;
  r.switch_cov = cov_of_intervals(gaps);
  return r;
}

struct TrainedStack {
  ModelArtifact artifact;
  std::map<std::string, std::vector<label::EpochStats>> history;
};

// Fits the scaler on the train split, trains both MLP variants and the RFF
// baseline with restart selection, and fills the gated probabilities into
// `events` in place.
TrainedStack train_and_score(const ExperimentConfig& cfg, const std::string& digest,
                             std::vector<EventRecord>& events) {
  std::vector<std::vector<double>> train_rows;
  for (const auto& e : events)
    if (e.split == Split::Train) train_rows.push_back(full_features(e.x));
  label::RobustScaler scaler;
  scaler.fit(train_rows);

  auto examples = [&](Split split, int dims) {
    std::vector<label::LabeledExample> out;
    for (const auto& e : events) {
      if (e.split != split) continue;
      auto x = scaler.transform(full_features(e.x));
      x.resize(static_cast<std::size_t>(dims));
      out.emplace_back(std::move(x), e.gate, e.target,
                       cfg.continuous_targets ? e.target_overlap
                                              : static_cast<double>(e.target));
    }
    return out;
  };

  label::TrainConfig tc;
  tc.optimizer = cfg.optimizer;
  tc.batch_size = cfg.batch_size;
  tc.max_epochs = cfg.max_epochs;
  tc.patience = cfg.patience;
  tc.dropout = cfg.dropout;
  tc.model.hidden = cfg.hidden;
  tc.model.dropout = cfg.dropout;

  // Model selection by validation AUC across deterministic restarts; single
  // runs at this data scale are dominated by initialization luck.
  auto fit_mlp = [&](int dims) {
    const auto train_set = examples(Split::Train, dims);
    const auto val_set = examples(Split::Val, dims);
    tc.model.input_dim = dims;
    label::TrainResult best;
    for (int k = 0; k < cfg.restarts; ++k) {
      tc.seed = splitmix64(cfg.run.seed ^ (0xABCDULL + static_cast<std::uint64_t>(k)));
      auto r = label::train_mlp(train_set, val_set, tc);
      if (best.best_epoch < 0 || r.best_val_auc > best.best_val_auc) best = std::move(r);
    }
    return best;
  };
  label::TrainResult mlp6, mlp9;
  bool trainable = true;
  try {
    mlp6 = fit_mlp(6);
    mlp9 = fit_mlp(9);
  } catch (const std::runtime_error&) {
    // Single-class training split: leave every probability at zero and
    // report undefined AUCs downstream.
    trainable = false;
  }

  // Same restart discipline for the kernel baseline (its random feature draw
  // is its initialization).
  const auto val6 = examples(Split::Val, 6);
  label::RffLogistic rff;
  double rff_best_val = -1.0;
  for (int k = 0; trainable && k < cfg.restarts; ++k) {
    label::RffConfig rff_cfg = cfg.rff;
    rff_cfg.seed = splitmix64(cfg.run.seed ^ (0x5244ULL + static_cast<std::uint64_t>(k)));
    auto cand = label::RffLogistic::fit(examples(Split::Train, 6), rff_cfg);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& ex : val6) {
      scores.push_back(ex.gate ? label::sigmoid(cand.score(ex.x)) : 0.0);
      labels.push_back(ex.target);
    }
    const auto roc = roc_auc(scores, labels);
    const double v = roc ? roc->auc : 0.0;
    if (v > rff_best_val) {
      rff_best_val = v;
      rff = std::move(cand);
    }
  }

  for (auto& e : events) {
    if (!trainable) break;
    const auto x9 = scaler.transform(full_features(e.x));
    auto x6 = x9;
    x6.resize(6);
    e.p_mlp = e.gate ? label::sigmoid(mlp6.model.score(x6)) : 0.0;
    e.p_mlp_temporal = e.gate ? label::sigmoid(mlp9.model.score(x9)) : 0.0;
    e.p_rff = e.gate ? label::sigmoid(rff.score(x6)) : 0.0;
  }

  TrainedStack out;
  out.artifact.architecture = tc.model;  // the temporal variant ships
  out.artifact.architecture.input_dim = 9;
  out.artifact.weights = trainable ? mlp9.model.params() : std::vector<double>{};
  out.artifact.scaler_median = scaler.medians();
  out.artifact.scaler_iqr = scaler.iqrs();
  out.artifact.seed = cfg.run.seed;
  out.artifact.config_digest = digest;
  out.artifact.best_epoch = mlp9.best_epoch;
  out.artifact.best_val_auc = mlp9.best_val_auc;
  out.artifact.gate_misses = mlp9.gate_misses;
  out.history["mlp"] = mlp6.history;
  out.history["mlp_temporal"] = mlp9.history;
  return out;
}

ordered_json method_to_json(const MethodMetrics& m) {
  ordered_json j;
  if (m.auc)
    j["auc"] = *m.auc;
  else
    j["auc"] = nullptr;
  ordered_json roc = ordered_json::array();
  for (const auto& p : m.roc) roc.push_back({p.fpr, p.tpr});
  j["roc"] = std::move(roc);
  j["precision"] = m.event_pr.precision;
  j["recall"] = m.event_pr.recall;
  j["f1"] = m.event_pr.f1;
  j["tp"] = m.event_pr.tp;
  j["fp"] = m.event_pr.fp;
  j["fn"] = m.event_pr.fn;
  return j;
}

}  // namespace

std::string metrics_to_json(const ExperimentResult& r, const ExperimentConfig& cfg) {
  ordered_json j;
  j["regime"] = sim::regime_name(cfg.run.regime);
  j["driver"] = sim::driver_name(cfg.run.market_maker.driver);
  j["seed"] = cfg.run.seed;
  j["sessions"] = cfg.sessions;
  j["theta_iou"] = cfg.theta_iou;
  j["counts"] = {{"candidates", r.n_candidates},
                 {"gated", r.n_gated},
                 {"positives", r.n_positive},
                 {"gate_misses", r.gate_misses},
                 {"truth_events", r.truth_events},
                 {"boundary_dropped", r.boundary_dropped},
                 {"degenerate_dropped", r.degenerate_dropped}};
  j["detector"] = {{"precision", r.detector_pr.precision},
                   {"recall", r.detector_pr.recall},
                   {"f1", r.detector_pr.f1},
                   {"tp", r.detector_pr.tp},
                   {"fp", r.detector_pr.fp},
                   {"fn", r.detector_pr.fn}};
  j["thresholds"] = {{"theta_ds", r.theta_ds}, {"theta_rr", r.theta_rr}};
  for (const auto& [name, m] : r.methods) j["methods"][name] = method_to_json(m);
  j["regime_switches"] = {{"count", r.switches}, {"inter_switch_cov", r.switch_cov}};
  return j.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg_in, const std::string& out_dir) {
  ExperimentConfig cfg = cfg_in;
  fs::create_directories(out_dir);
  const std::string resolved = cfg.to_json();
  {
    std::ofstream out(out_dir + "/config.resolved.json");
    out << resolved;
  }
  const std::string digest = config_digest(resolved);

  std::vector<PipelineEvent> pool;
  std::vector<TruthRecord> truth;
  std::vector<std::pair<int, detect::DeteriorationStep>> all_steps;
  std::vector<std::vector<lob::RegimeRecord>> regimes;
  int boundary_dropped = 0, degenerate_dropped = 0;

  for (int s = 0; s < cfg.sessions; ++s) {
    sim::RunConfig rc = cfg.run;
    rc.seed = cfg.run.seed + 1000003ULL * static_cast<std::uint64_t>(s);
    const std::string sdir = out_dir + "/session_" + std::to_string(s);
    fs::create_directories(sdir);
    const sim::RunResult sim_out = sim::run_session(rc);
    lob::write_messages_jsonl(sdir + "/messages.jsonl", sim_out.log);
    lob::write_snapshots_csv(sdir + "/snapshots.csv", sim_out.snapshots);
    lob::write_regime_csv(sdir + "/regime.csv", sim_out.regime);
    {
      std::ofstream out(sdir + "/config.resolved.json");
      out << rc.to_json();
    }
    regimes.push_back(sim_out.regime);

    // Ground truth from the regime trace.
    const auto gts =
        truth::build_intervals(sim_out.regime, rc.xi, rc.truth_merge_gap, rc.session_close);
    for (const auto& g : gts) truth.push_back({s, g.side, g.span.start, g.span.end});

    // LOB-only detection on the message log.
    const lob::ReplaySeries series(sim_out.log);
    detect::DetectorRun det =
        detect::run_detector(series, cfg.detector, rc.session_open, rc.session_close);
    boundary_dropped += det.boundary_dropped;
    degenerate_dropped += det.degenerate_dropped;
    for (const auto& st : det.steps) all_steps.emplace_back(s, st);

    // Temporal context within the session, both sides pooled by end time.
    std::vector<detect::CandidateEvent*> by_end;
    for (auto& ev : det.candidates) by_end.push_back(&ev);
    std::sort(by_end.begin(), by_end.end(),
              [](const detect::CandidateEvent* a, const detect::CandidateEvent* b) {
                if (a->t1 != b->t1) return a->t1 < b->t1;
                return a->t0 < b->t0;
              });
    label::compute_temporal_features(by_end, rc.session_open, cfg.temporal_lookback);

    // Supervision: y_e = 1 iff a same-side truth interval overlaps at or
    // above the IoU threshold (existence, not one-to-one consumption; the
    // one-to-one discipline is for detector TP/FP counting).
    for (auto& ev : det.candidates) {
      for (const auto& g : gts) {
        if (g.side != ev.side) continue;
        if (truth::iou({ev.t0, ev.t1}, g.span) >= cfg.theta_iou) {
          ev.target = 1;
          break;
        }
      }
    }

    for (auto& ev : det.candidates) {
      PipelineEvent pe;
      // Continuous supervision variant: largest overlapped fraction of the
      // event across same-side truth intervals.
      for (const auto& g : gts) {
        if (g.side != ev.side || ev.t1 <= ev.t0) continue;
        const TimeNs inter = std::min(ev.t1, g.span.end) - std::max(ev.t0, g.span.start);
        if (inter > 0) {
          pe.overlap = std::max(pe.overlap,
                                static_cast<double>(inter) / static_cast<double>(ev.t1 - ev.t0));
        }
      }
      pe.ev = std::move(ev);
      pe.session = s;
      pool.push_back(std::move(pe));
    }
  }
  write_truth_csv(out_dir + "/ground_truth_events.csv", truth);
  write_steps_csv(out_dir + "/steps.csv", all_steps);

  // Chronological split over (session, end time).
  std::sort(pool.begin(), pool.end(), [](const PipelineEvent& a, const PipelineEvent& b) {
    if (a.session != b.session) return a.session < b.session;
    if (a.ev.t1 != b.ev.t1) return a.ev.t1 < b.ev.t1;
    return a.ev.t0 < b.ev.t0;
  });
  const auto n = pool.size();
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.split_train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.split_val * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    pool[i].split = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
    pool[i].ev.id = static_cast<int>(i);
  }

  // Percentile thresholds from the gate-passing training events, then the
  // gated binary rule for everything.
  std::vector<detect::CandidateEvent> train_events;
  for (const auto& pe : pool)
    if (pe.split == Split::Train) train_events.push_back(pe.ev);
  const auto thr = detect::calibrate_percentile_thresholds(train_events, cfg.detector);
  for (auto& pe : pool) pe.ev.label = detect::binary_label(pe.ev, cfg.detector, thr);

  // Flatten to records, then train and score in place.
  std::vector<EventRecord> events;
  events.reserve(pool.size());
  for (const auto& pe : pool) {
    EventRecord e;
    e.session = pe.session;
    e.id = pe.ev.id;
    e.side = pe.ev.side;
    e.t0 = pe.ev.t0;
    e.t1 = pe.ev.t1;
    e.n_steps = pe.ev.n_steps;
    e.filters = pe.ev.filters;
    e.gate = pe.ev.gate ? 1 : 0;
    e.x = pe.ev.x;
    e.label = pe.ev.label;
    e.target = pe.ev.target;
    e.target_overlap = pe.overlap;
    e.split = pe.split;
    events.push_back(e);
  }
  const TrainedStack stack = train_and_score(cfg, digest, events);
  write_candidates_csv(out_dir + "/candidates.csv", events);
  write_scores_csv(out_dir + "/scores.csv", events);

  std::map<std::string, truth::MatchReport> side_reports;  // whole-run, for the report file
  for (const Side side : {Side::Bid, Side::Ask}) {
    std::vector<truth::Interval> preds, gts;
    for (const auto& e : events)
      if (e.side == side) preds.push_back({e.t0, e.t1});
    for (const auto& t : truth)
      if (t.side == side) gts.push_back({t.start, t.end});
    side_reports[side_name(side)] = truth::match_events(preds, gts, cfg.theta_iou);
  }
  write_match_report_json(out_dir + "/match_report.json", side_reports, cfg.theta_iou);

  write_model_json(out_dir + "/model.json", stack.artifact);
  write_history_csv(out_dir + "/training_history.csv", stack.history);

  ExperimentResult result = compute_result(cfg, events, truth, regimes);
  result.out_dir = out_dir;
  result.boundary_dropped = boundary_dropped;
  result.degenerate_dropped = degenerate_dropped;
  result.theta_ds = thr.theta_ds;
  result.theta_rr = thr.theta_rr;
  {
    std::ofstream out(out_dir + "/metrics.json");
    out << metrics_to_json(result, cfg);
  }
  return result;
}

ExperimentResult recompute_metrics(const std::string& run_dir, bool write_metrics) {
  const LoadedArtifacts a = load_run_dir(run_dir);
  ExperimentResult result = compute_result(a.cfg, a.events, a.truth, a.regimes);
  result.out_dir = run_dir;

  // Counts that come from pipeline internals are restored from the stored
  // metrics so recomputation stays artifact-pure on the evaluated fields.
  std::ifstream min(run_dir + "/metrics.json");
  if (min) {
    const auto j = ordered_json::parse(min);
    result.boundary_dropped = j["counts"].value("boundary_dropped", 0);
    result.degenerate_dropped = j["counts"].value("degenerate_dropped", 0);
    result.theta_ds = j["thresholds"].value("theta_ds", 0.0);
    result.theta_rr = j["thresholds"].value("theta_rr", 0.0);
  }
  if (write_metrics) {
    std::ofstream out(run_dir + "/metrics.json");
    out << metrics_to_json(result, a.cfg);
  }
  return result;
}

ExperimentResult train_from_candidates(const ExperimentConfig& cfg, const std::string& run_dir) {
  auto events = read_candidates_csv(run_dir + "/candidates.csv");
  const std::string digest = config_digest(cfg.to_json());
  const TrainedStack stack = train_and_score(cfg, digest, events);
  write_scores_csv(run_dir + "/scores.csv", events);
  write_model_json(run_dir + "/model.json", stack.artifact);
  write_history_csv(run_dir + "/training_history.csv", stack.history);

  std::vector<TruthRecord> truth;
  if (fs::exists(run_dir + "/ground_truth_events.csv")) {
    truth = read_truth_csv(run_dir + "/ground_truth_events.csv");
  }
  std::vector<std::vector<lob::RegimeRecord>> regimes;
  for (int s = 0; s < cfg.sessions; ++s) {
    const std::string path = run_dir + "/session_" + std::to_string(s) + "/regime.csv";
    if (fs::exists(path)) regimes.push_back(lob::read_regime_csv(path));
  }
  ExperimentResult result = compute_result(cfg, events, truth, regimes);
  result.out_dir = run_dir;
  {
    std::ofstream out(run_dir + "/metrics.json");
    out << metrics_to_json(result, cfg);
  }
  return result;
}

void score_with_model(const std::string& run_dir) {
  auto events = read_candidates_csv(run_dir + "/candidates.csv");
  const ModelArtifact art = read_model_json(run_dir + "/model.json");
  label::Mlp model(art.architecture, /*init_seed=*/art.seed);
  model.params() = art.weights;
  // Keep probabilities from an earlier scoring pass when available.
  if (fs::exists(run_dir + "/scores.csv")) {
    const auto prev = read_scores_csv(run_dir + "/scores.csv");
    if (prev.size() == events.size()) {
      for (std::size_t i = 0; i < events.size(); ++i) {
        events[i].p_mlp = prev[i].p_mlp;
        events[i].p_rff = prev[i].p_rff;
      }
    }
  }
  for (auto& e : events) {
    const auto raw = full_features(e.x);
    std::vector<double> x(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
      x[j] = std::clamp((raw[j] - art.scaler_median[j]) / art.scaler_iqr[j],
                        -label::RobustScaler::kClipLimit, label::RobustScaler::kClipLimit);
    }
    x.resize(static_cast<std::size_t>(art.architecture.input_dim));
    e.p_mlp_temporal = e.gate ? label::sigmoid(model.score(x)) : 0.0;
  }
  write_scores_csv(run_dir + "/scores.csv", events);
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  struct Job {
    ExperimentConfig cfg;
    std::string dir;
    std::string regime;
    std::string driver;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto regime : spec.regimes) {
    for (const auto driver : spec.drivers) {
      for (const auto seed : spec.seeds) {
        ExperimentConfig cfg = spec.base;
        cfg.run.apply_regime(regime);
        cfg.run.market_maker.driver = driver;
        cfg.run.seed = seed;
        Job job;
        job.cfg = cfg;
        job.regime = sim::regime_name(regime);
        job.driver = sim::driver_name(driver);
        job.seed = seed;
        job.dir = out_dir + "/run_" + job.regime + "_" + job.driver + "_s" +
                  std::to_string(seed);
        jobs.push_back(std::move(job));
      }
    }
  }

  std::vector<ExperimentResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(spec.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        results[i] = run_experiment(jobs[i].cfg, jobs[i].dir);
      }
    });
  }
  for (auto& t : threads) t.join();

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (const auto& [method, m] : results[i].methods) {
      SweepRow row;
      row.regime = jobs[i].regime;
      row.driver = jobs[i].driver;
      row.seed = jobs[i].seed;
      row.method = method;
      row.auc = m.auc.value_or(std::numeric_limits<double>::quiet_NaN());
      row.precision = m.event_pr.precision;
      row.recall = m.event_pr.recall;
      row.f1 = m.event_pr.f1;
      rows.push_back(std::move(row));
    }
  }
  write_aggregate_csv(out_dir + "/aggregate.csv", rows);

  // Figures: one ROC panel per (regime, driver), the temporal-ablation ROC
  // for Hawkes runs, and a price/probability trace for the first Hawkes run.
  fs::create_directories(out_dir + "/figures");
  for (const auto regime : spec.regimes) {
    for (const auto driver : spec.drivers) {
      // First seed's run represents the cell.
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].regime != sim::regime_name(regime) ||
            jobs[i].driver != sim::driver_name(driver) || jobs[i].seed != spec.seeds.front())
          continue;
        write_roc_figure(out_dir + "/figures/roc_" + jobs[i].regime + "_" + jobs[i].driver +
                             ".svg",
                         "ROC - " + jobs[i].regime + " (" + jobs[i].driver + ")", results[i]);
        if (driver == sim::RegimeDriver::Hawkes) {
          write_temporal_ablation_figure(
              out_dir + "/figures/roc_temporal_" + jobs[i].regime + ".svg",
              "Temporal context - " + jobs[i].regime, results[i]);
          write_trace_figure(out_dir + "/figures/trace_" + jobs[i].regime + "_hawkes.svg",
                             jobs[i].dir);
        }
      }
    }
  }
  return rows;
}

void write_aggregate_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  std::fprintf(f, "regime,driver,seed,method,auc,precision,recall,f1\n");
  auto emit = [&](const std::string& regime, const std::string& driver, const std::string& seed,
                  const std::string& method, double auc, double precision, double recall,
                  double f1) {
    std::fprintf(f, "%s,%s,%s,%s,%.17g,%.17g,%.17g,%.17g\n", regime.c_str(), driver.c_str(),
                 seed.c_str(), method.c_str(), auc, precision, recall, f1);
  };
  for (const auto& r : rows) {
    emit(r.regime, r.driver, std::to_string(r.seed), r.method, r.auc, r.precision, r.recall,
         r.f1);
  }
  // Mean / std rows per (regime, driver, method).
  std::map<std::string, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) groups[r.regime + "," + r.driver + "," + r.method].push_back(&r);
  for (const auto& [key, members] : groups) {
    double mean = 0.0, meanp = 0.0, meanr = 0.0, meanf = 0.0;
    for (const auto* m : members) {
      mean += m->auc;
      meanp += m->precision;
      meanr += m->recall;
      meanf += m->f1;
    }
    const double k = static_cast<double>(members.size());
    mean /= k;
    meanp /= k;
    meanr /= k;
    meanf /= k;
    double var = 0.0;
    for (const auto* m : members) var += (m->auc - mean) * (m->auc - mean);
    var = members.size() > 1 ? var / (k - 1.0) : 0.0;
    const auto& first = *members.front();
    emit(first.regime, first.driver, "mean", first.method, mean, meanp, meanr, meanf);
    emit(first.regime, first.driver, "std", first.method, std::sqrt(var), 0.0, 0.0, 0.0);
  }
  std::fclose(f);
}

}  // namespace crumble::eval
