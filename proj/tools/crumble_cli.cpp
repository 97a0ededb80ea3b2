// Command-line front end: simulate / detect / label / train / evaluate /
// sweep / report. Exit codes: 0 success, 2 configuration error, 1 runtime
// failure.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "crumble/eval/figures.hpp"
#include "crumble/eval/pipeline.hpp"
#include "crumble/label/features.hpp"
#include "crumble/lob/io.hpp"
#include "crumble/lob/replay.hpp"
#include "crumble/sim/session.hpp"
#include "crumble/truth/ground_truth.hpp"

namespace fs = std::filesystem;
using namespace crumble;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string regime = "baseline";
  bool regime_set = false;
  std::string driver = "bernoulli";
  bool driver_set = false;
  bool full = false;
};

eval::ExperimentConfig load_experiment(const CommonOpts& o) {
  eval::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = eval::ExperimentConfig::from_json(read_file(o.config_path));
  if (o.regime_set || o.config_path.empty()) cfg.run.apply_regime(sim::regime_from_name(o.regime));
  if (o.driver_set) cfg.run.market_maker.driver = sim::driver_from_name(o.driver);
  if (o.seed_set) cfg.run.seed = o.seed;
  if (o.full) cfg.apply_full_protocol();
  return cfg;
}

void add_common(CLI::App* app, CommonOpts& o) {
  app->add_option("--config", o.config_path, "experiment config JSON");
  app->add_option("--out", o.out_dir, "output directory");
  app->add_option("--seed", o.seed, "master seed")->each([&](const std::string&) {
    o.seed_set = true;
  });
  app->add_option("--regime", o.regime, "baseline|bull|bear|high_vol")->each([&](const std::string&) {
    o.regime_set = true;
  });
  app->add_option("--driver", o.driver, "bernoulli|hawkes")->each([&](const std::string&) {
    o.driver_set = true;
  });
  app->add_flag("--full", o.full, "full protocol: 5 sessions x 6.5 h");
}

int cmd_simulate(const CommonOpts& o) {
  const auto cfg = load_experiment(o);
  fs::create_directories(o.out_dir);
  {
    std::ofstream out(o.out_dir + "/config.resolved.json");
    out << cfg.to_json();
  }
  for (int s = 0; s < cfg.sessions; ++s) {
    sim::RunConfig rc = cfg.run;
    rc.seed = cfg.run.seed + 1000003ULL * static_cast<std::uint64_t>(s);
    const std::string sdir = o.out_dir + "/session_" + std::to_string(s);
    fs::create_directories(sdir);
    const auto out = sim::run_session(rc);
    lob::write_messages_jsonl(sdir + "/messages.jsonl", out.log);
    lob::write_messages_csv(sdir + "/messages.csv", out.log);
    lob::write_snapshots_csv(sdir + "/snapshots.csv", out.snapshots);
    lob::write_regime_csv(sdir + "/regime.csv", out.regime);
    std::ofstream cf(sdir + "/config.resolved.json");
    cf << rc.to_json();
    std::cout << "session " << s << ": " << out.log.size() << " messages, "
              << out.regime.size() << " regime records\n";
  }
  return 0;
}

// Standalone detection over an existing run directory (messages.jsonl +
// snapshots.csv per session). Thresholds are calibrated on the detected set
// itself; the experiment pipeline calibrates on its training split instead.
int cmd_detect(const CommonOpts& o, const std::string& run_dir) {
  const auto cfg = load_experiment(o);
  std::vector<std::pair<int, detect::DeteriorationStep>> steps;
  std::vector<eval::EventRecord> events;
  std::vector<detect::CandidateEvent> all;
  std::vector<int> sessions;
  std::vector<eval::TruthRecord> truth_rows;
  for (int s = 0;; ++s) {
    const std::string sdir = run_dir + "/session_" + std::to_string(s);
    if (!fs::exists(sdir + "/messages.jsonl")) break;
    const auto log = lob::read_messages_jsonl(sdir + "/messages.jsonl");
    const auto snaps = lob::read_snapshots_csv(sdir + "/snapshots.csv");
    TimeNs close = cfg.run.session_close;
    if (!snaps.empty()) close = std::max(close, snaps.back().ts);
    const lob::ReplaySeries series(log);
    auto det = detect::run_detector(series, cfg.detector, cfg.run.session_open, close);
    for (const auto& st : det.steps) steps.emplace_back(s, st);
    // Supervision if the regime trace is available.
    if (fs::exists(sdir + "/regime.csv")) {
      const auto trace = lob::read_regime_csv(sdir + "/regime.csv");
      const auto gts = truth::build_intervals(trace, cfg.run.xi, cfg.run.truth_merge_gap, close);
      for (const auto& g : gts) truth_rows.push_back({s, g.side, g.span.start, g.span.end});
      for (const Side side : {Side::Bid, Side::Ask}) {
        std::vector<truth::Interval> preds, gt_side;
        std::vector<detect::CandidateEvent*> side_events;
        for (auto& ev : det.candidates) {
          if (ev.side != side) continue;
          side_events.push_back(&ev);
          preds.push_back({ev.t0, ev.t1});
        }
        for (const auto& g : gts)
          if (g.side == side) gt_side.push_back(g.span);
        const auto rep = truth::match_events(preds, gt_side, cfg.theta_iou);
        for (std::size_t i = 0; i < side_events.size(); ++i)
          side_events[i]->target = rep.targets[i];
      }
    }
    std::vector<detect::CandidateEvent*> by_end;
    for (auto& ev : det.candidates) by_end.push_back(&ev);
    std::sort(by_end.begin(), by_end.end(),
              [](const auto* a, const auto* b) { return a->t1 < b->t1; });
    label::compute_temporal_features(by_end, cfg.run.session_open, cfg.temporal_lookback);
    for (auto& ev : det.candidates) {
      all.push_back(std::move(ev));
      sessions.push_back(s);
    }
  }
  const auto thr = detect::calibrate_percentile_thresholds(all, cfg.detector);
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& ev = all[i];
    ev.label = detect::binary_label(ev, cfg.detector, thr);
    eval::EventRecord e;
    e.session = sessions[i];
    e.id = static_cast<int>(i);
    e.side = ev.side;
    e.t0 = ev.t0;
    e.t1 = ev.t1;
    e.n_steps = ev.n_steps;
    e.filters = ev.filters;
    e.gate = ev.gate ? 1 : 0;
    e.x = ev.x;
    e.label = ev.label;
    e.target = ev.target;
    events.push_back(e);
  }
  // Chronological split so the training verbs can run from this directory.
  const auto n = events.size();
  const auto n_train = static_cast<std::size_t>(cfg.split_train * static_cast<double>(n));
  const auto n_val = static_cast<std::size_t>(cfg.split_val * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    events[i].split = i < n_train ? eval::Split::Train
                                  : (i < n_train + n_val ? eval::Split::Val : eval::Split::Test);
  }
  eval::write_steps_csv(run_dir + "/steps.csv", steps);
  eval::write_candidates_csv(run_dir + "/candidates.csv", events);
  eval::write_truth_csv(run_dir + "/ground_truth_events.csv", truth_rows);
  std::cout << "steps: " << steps.size() << ", candidates: " << events.size()
            << " (theta_ds=" << thr.theta_ds << ", theta_rr=" << thr.theta_rr << ")\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& o) {
  const auto cfg = load_experiment(o);
  const auto result = eval::run_experiment(cfg, o.out_dir);
  std::cout << "run dir: " << result.out_dir << "\n";
  std::cout << "candidates=" << result.n_candidates << " gated=" << result.n_gated
            << " positives=" << result.n_positive << " truth=" << result.truth_events << "\n";
  std::cout << "detector recall=" << result.detector_pr.recall
            << " precision=" << result.detector_pr.precision << "\n";
  for (const auto& [name, m] : result.methods) {
    std::cout << name << ": auc=";
    if (m.auc)
      std::cout << *m.auc;
    else
      std::cout << "NA";
    std::cout << " f1=" << m.event_pr.f1 << "\n";
  }
  return 0;
}

int cmd_report(const std::string& run_dir, bool figures) {
  const auto result = eval::recompute_metrics(run_dir, /*write_metrics=*/true);
  if (figures) {
    fs::create_directories(run_dir + "/figures");
    eval::write_roc_figure(run_dir + "/figures/roc.svg", "ROC", result);
    eval::write_trace_figure(run_dir + "/figures/trace.svg", run_dir);
  }
  std::cout << "metrics recomputed for " << run_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crumble: LOB market simulator, crumbling-quote detector and labeler"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string run_dir;
  std::string regimes_csv = "baseline";
  std::string drivers_csv = "bernoulli";
  std::string seeds_csv = "1";
  int workers = 2;
  bool figures = true;

  auto* sim_cmd = app.add_subcommand("simulate", "run market sessions, write logs");
  add_common(sim_cmd, opts);

  auto* det_cmd = app.add_subcommand("detect", "detect candidate events from logs");
  add_common(det_cmd, opts);
  det_cmd->add_option("--run-dir", run_dir, "directory with session_*/ logs")->required();

  auto* lab_cmd = app.add_subcommand("label", "score candidates with a stored model");
  add_common(lab_cmd, opts);
  lab_cmd->add_option("--run-dir", run_dir, "directory with candidates.csv + model.json")
      ->required();

  auto* trn_cmd = app.add_subcommand("train", "train labeling models on candidates");
  add_common(trn_cmd, opts);
  trn_cmd->add_option("--run-dir", run_dir, "directory with candidates.csv")->required();

  auto* evl_cmd = app.add_subcommand("evaluate", "full pipeline: simulate .. metrics");
  add_common(evl_cmd, opts);

  auto* swp_cmd = app.add_subcommand("sweep", "regimes x drivers x seeds grid");
  add_common(swp_cmd, opts);
  swp_cmd->add_option("--regimes", regimes_csv, "comma-separated regimes");
  swp_cmd->add_option("--drivers", drivers_csv, "comma-separated drivers");
  swp_cmd->add_option("--seeds", seeds_csv, "comma-separated seeds");
  swp_cmd->add_option("--workers", workers, "parallel runs");

  auto* rep_cmd = app.add_subcommand("report", "recompute metrics/figures from artifacts");
  rep_cmd->add_option("--run-dir", run_dir, "existing run directory")->required();
  rep_cmd->add_flag("--figures,!--no-figures", figures, "render figures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(opts);
    if (det_cmd->parsed()) return cmd_detect(opts, run_dir);
    if (evl_cmd->parsed()) return cmd_evaluate(opts);
    if (rep_cmd->parsed()) return cmd_report(run_dir, figures);
    if (trn_cmd->parsed()) {
      // Train the labeling models from the stored candidates (no simulation).
      auto cfg = opts.config_path.empty() && fs::exists(run_dir + "/config.resolved.json")
                     ? eval::ExperimentConfig::from_json(
                           read_file(run_dir + "/config.resolved.json"))
                     : load_experiment(opts);
      const auto result = eval::train_from_candidates(cfg, run_dir);
      std::cout << "trained models in " << run_dir << "\n";
      for (const auto& [name, m] : result.methods) {
        std::cout << name << ": auc=" << (m.auc ? std::to_string(*m.auc) : "NA") << "\n";
      }
      return 0;
    }
    if (lab_cmd->parsed()) {
      eval::score_with_model(run_dir);
      std::cout << "scored candidates with the stored model: " << run_dir << "/scores.csv\n";
      return 0;
    }
    if (swp_cmd->parsed()) {
      eval::SweepSpec spec;
      spec.base = load_experiment(opts);
      std::stringstream rs(regimes_csv), ds(drivers_csv), ss(seeds_csv);
      std::string tok;
      while (std::getline(rs, tok, ',')) spec.regimes.push_back(sim::regime_from_name(tok));
      while (std::getline(ds, tok, ',')) spec.drivers.push_back(sim::driver_from_name(tok));
      while (std::getline(ss, tok, ',')) spec.seeds.push_back(std::stoull(tok));
      if (spec.regimes.empty() || spec.drivers.empty() || spec.seeds.empty()) {
        std::cerr << "empty sweep grid\n";
        return 2;
      }
      spec.workers = workers;
      const auto rows = eval::run_sweep(spec, opts.out_dir);
      std::cout << "sweep complete: " << rows.size() << " rows -> " << opts.out_dir
                << "/aggregate.csv\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
