#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crumble/detect/detector.hpp"
#include "crumble/eval/artifacts.hpp"
#include "crumble/eval/metrics.hpp"
#include "crumble/label/mlp.hpp"
#include "crumble/label/rff.hpp"
#include "crumble/sim/config.hpp"

namespace crumble::eval {

struct ExperimentConfig {
  sim::RunConfig run;
  detect::DetectorParams detector;
  label::AdamWConfig optimizer;
  int batch_size = 32;
  int max_epochs = 300;
  int patience = 40;
  int restarts = 7;
  double dropout = 0.1;
  std::vector<int> hidden = {64, 32};
  label::RffConfig rff;
  int sessions = 3;
  double theta_iou = 0.3;
  double split_train = 0.70;
  double split_val = 0.15;
  bool continuous_targets = false;  // train on max-overlap fractions
  TimeNs temporal_lookback = 60 * kNsPerSec;

  // 5 sessions of 6.5 h instead of the 1 x 2 h desk default.
  void apply_full_protocol();

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
};

struct MethodMetrics {
  std::optional<double> auc;
  std::vector<RocPoint> roc;
  PrecisionRecall event_pr;  // at theta_iou over the test span, cut at p >= 0.5
};

struct ExperimentResult {
  std::string out_dir;
  int n_candidates = 0;
  int n_gated = 0;
  int n_positive = 0;
  int gate_misses = 0;
  int boundary_dropped = 0;
  int degenerate_dropped = 0;
  int truth_events = 0;
  PrecisionRecall detector_pr;  // whole-run candidate matching
  std::map<std::string, MethodMetrics> methods;  // binary_rule, rff, mlp, mlp_temporal
  double switch_cov = 0.0;  // coefficient of variation of inter-switch times
  int switches = 0;
  double theta_ds = 0.0;
  double theta_rr = 2.0;
};

// Full pipeline: simulate -> ground truth -> detect -> calibrate -> label ->
// train -> score -> evaluate. Writes every artifact into out_dir; reruns with
// the same config are byte-identical.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

// Pure recomputation of metrics.json from the stored artifacts.
ExperimentResult recompute_metrics(const std::string& run_dir, bool write_metrics);

// Trains the labeling models from a stored candidates.csv (no simulation),
// writing model.json, training_history.csv and scores.csv.
ExperimentResult train_from_candidates(const ExperimentConfig& cfg, const std::string& run_dir);

// Scores a stored candidates.csv with a stored model.json, refreshing the
// shipped model's probabilities in scores.csv.
void score_with_model(const std::string& run_dir);

std::string metrics_to_json(const ExperimentResult& r, const ExperimentConfig& cfg);

struct SweepSpec {
  std::vector<sim::Regime> regimes;
  std::vector<sim::RegimeDriver> drivers;
  std::vector<std::uint64_t> seeds;
  ExperimentConfig base;
  int workers = 2;
};

struct SweepRow {
  std::string regime;
  std::string driver;
  std::uint64_t seed = 0;
  std::string method;
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Runs the grid in a worker pool (each run writes its own directory), then
// aggregates per-seed rows plus mean/std summaries and renders figures.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::string& out_dir);

void write_aggregate_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace crumble::eval
