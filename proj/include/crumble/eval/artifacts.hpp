#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crumble/detect/detector.hpp"
#include "crumble/eval/metrics.hpp"
#include "crumble/label/features.hpp"
#include "crumble/label/mlp.hpp"
#include "crumble/truth/ground_truth.hpp"

namespace crumble::eval {

enum class Split : int { Train = 0, Val = 1, Test = 2 };
const char* split_name(Split s);

// One candidate event as it flows through the pipeline files.
struct EventRecord {
  int session = 0;
  int id = 0;  // unique within the run
  Side side = Side::Bid;
  TimeNs t0 = 0;
  TimeNs t1 = 0;
  int n_steps = 0;
  detect::FilterVerdict filters;
  int gate = 0;
  detect::FeatureVector x;
  int label = 0;
  int target = 0;
  double target_overlap = 0.0;  // max |e ∩ e*| / |e| over same-side truth
  Split split = Split::Train;
  double p_mlp = 0.0;
  double p_mlp_temporal = 0.0;
  double p_rff = 0.0;
};

struct TruthRecord {
  int session = 0;
  Side side = Side::Bid;
  TimeNs start = 0;
  TimeNs end = 0;
};

void write_candidates_csv(const std::string& path, const std::vector<EventRecord>& events);
std::vector<EventRecord> read_candidates_csv(const std::string& path);

void write_steps_csv(const std::string& path,
                     const std::vector<std::pair<int, detect::DeteriorationStep>>& steps);

void write_scores_csv(const std::string& path, const std::vector<EventRecord>& events);
std::vector<EventRecord> read_scores_csv(const std::string& path);

void write_truth_csv(const std::string& path, const std::vector<TruthRecord>& truth);
std::vector<TruthRecord> read_truth_csv(const std::string& path);

void write_match_report_json(const std::string& path,
                             const std::map<std::string, truth::MatchReport>& reports,
                             double theta_iou);

struct ModelArtifact {
  label::MlpConfig architecture;
  std::vector<double> weights;
  std::vector<double> scaler_median;
  std::vector<double> scaler_iqr;
  std::uint64_t seed = 0;
  std::string config_digest;
  int best_epoch = -1;
  double best_val_auc = 0.0;
  int gate_misses = 0;
};

void write_model_json(const std::string& path, const ModelArtifact& art);
ModelArtifact read_model_json(const std::string& path);

void write_history_csv(const std::string& path,
                       const std::map<std::string, std::vector<label::EpochStats>>& by_model);

// FNV-1a digest of a config blob, for provenance stamping.
std::string config_digest(const std::string& text);

}  // namespace crumble::eval
