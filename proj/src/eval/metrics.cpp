#include "crumble/eval/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace crumble::eval {

std::optional<RocResult> roc_auc(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (const int y : labels)
    if (y > 0) ++pos;
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult out;
  out.points.push_back(RocPoint{0.0, 0.0});
  double auc = 0.0;
  std::size_t tp = 0, fp = 0;
  double prev_tpr = 0.0, prev_fpr = 0.0;
  std::size_t i = 0;
  while (i < n) {
    // Group score ties into one sweep step.
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] > 0)
        ++tp;
      else
        ++fp;
      ++j;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    out.points.push_back(RocPoint{fpr, tpr});
    prev_tpr = tpr;
    prev_fpr = fpr;
    i = j;
  }
  out.auc = auc;
  return out;
}

PrecisionRecall precision_recall(int tp, int fp, int fn) {
  PrecisionRecall pr;
  pr.tp = tp;
  pr.fp = fp;
  pr.fn = fn;
  pr.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  pr.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  pr.f1 = pr.precision + pr.recall > 0.0
              ? 2.0 * pr.precision * pr.recall / (pr.precision + pr.recall)
              : 0.0;
  return pr;
}

}  // namespace crumble::eval
