#pragma once

#include <string>

#include "crumble/eval/pipeline.hpp"

namespace crumble::eval {

// Per-method ROC panel for one run.
void write_roc_figure(const std::string& path, const std::string& title,
                      const ExperimentResult& result);

// MLP with vs. without temporal context (plus baselines).
void write_temporal_ablation_figure(const std::string& path, const std::string& title,
                                    const ExperimentResult& result);

// Midprice trajectory with detection markers on top, per-event crumbling
// probabilities beneath, shared time axis. Reads session_0 artifacts from
// run_dir.
void write_trace_figure(const std::string& path, const std::string& run_dir);

}  // namespace crumble::eval
