#pragma once

#include <optional>
#include <vector>

namespace crumble::eval {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // (0,0) .. (1,1), threshold sweep, ties grouped
  double auc = 0.0;
};

// Threshold sweep over distinct scores with ties grouped; AUC by the
// trapezoidal rule (equals the Mann-Whitney U statistic with half credit for
// ties). Returns nullopt when labels are single-class.
std::optional<RocResult> roc_auc(const std::vector<double>& scores,
                                 const std::vector<int>& labels);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

PrecisionRecall precision_recall(int tp, int fp, int fn);

}  // namespace crumble::eval
