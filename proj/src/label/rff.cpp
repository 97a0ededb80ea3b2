#include "crumble/label/rff.hpp"

#include <algorithm>
#include <cmath>

#include "crumble/detect/detector.hpp"
#include "crumble/kern/kernels.hpp"

namespace crumble::label {

std::vector<double> RffLogistic::features(const std::vector<double>& x) const {
  const auto& k = kern::active();
  std::vector<double> out(static_cast<std::size_t>(num_features_));
  if (num_features_ == 0) return out;
  k.matvec(proj_.data(), phase_.data(), x.data(), out.data(),
           static_cast<std::size_t>(num_features_), static_cast<std::size_t>(input_dim_));
  const double scale = std::sqrt(2.0 / static_cast<double>(num_features_));
  for (auto& v : out) v = scale * std::cos(v);
  return out;
}

double RffLogistic::score(const std::vector<double>& x) const {
  const auto phi = features(x);
  return kern::active().dot(weights_.data(), phi.data(), phi.size()) + weights_.back();
}

double RffLogistic::median_pairwise_distance(const std::vector<std::vector<double>>& rows,
                                             std::size_t max_rows) {
  const std::size_t n = std::min(rows.size(), max_rows);
  std::vector<double> dists;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t d = 0; d < rows[i].size(); ++d) {
        const double diff = rows[i][d] - rows[j][d];
        acc += diff * diff;
      }
      dists.push_back(std::sqrt(acc));
    }
  }
  if (dists.empty()) return 1.0;
  const double med = detect::percentile_linear(dists, 50.0);
  return med > 0.0 ? med : 1.0;
}

RffLogistic RffLogistic::fit(const std::vector<LabeledExample>& train, const RffConfig& cfg) {
  RffLogistic model;
  model.num_features_ = cfg.num_features;

  std::vector<std::vector<double>> usable;
  std::vector<double> targets;
  for (const auto& ex : train) {
    if (!ex.gate) continue;
    usable.push_back(ex.x);
    targets.push_back(ex.target_value);
  }
  model.input_dim_ = usable.empty() ? 0 : static_cast<int>(usable.front().size());
  model.sigma_ = median_pairwise_distance(usable);

  Rng rng(cfg.seed, 0x524646ULL);
  model.proj_.resize(static_cast<std::size_t>(cfg.num_features) *
                     static_cast<std::size_t>(model.input_dim_));
  model.phase_.resize(static_cast<std::size_t>(cfg.num_features));
  for (auto& w : model.proj_) w = rng.normal() / model.sigma_;
  for (auto& b : model.phase_) b = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

  // Full-batch logistic regression on the mapped features.
  const std::size_t dim = static_cast<std::size_t>(cfg.num_features) + 1;
  model.weights_.assign(dim, 0.0);
  if (usable.empty()) return model;

  std::vector<std::vector<double>> phi(usable.size());
  for (std::size_t i = 0; i < usable.size(); ++i) phi[i] = model.features(usable[i]);

  AdamW opt(dim, AdamWConfig{cfg.lr, 0.0, 0.9, 0.999, 1e-8});
  std::vector<double> grad(dim);
  const double inv_n = 1.0 / static_cast<double>(usable.size());
  for (int it = 0; it < cfg.max_iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < usable.size(); ++i) {
      const double s =
          kern::active().dot(model.weights_.data(), phi[i].data(), phi[i].size()) +
          model.weights_.back();
      const double err = (sigmoid(s) - targets[i]) * inv_n;
      kern::active().axpy(err, phi[i].data(), grad.data(), phi[i].size());
      grad.back() += err;
    }
    for (std::size_t j = 0; j + 1 < dim; ++j) grad[j] += cfg.l2 * model.weights_[j];
    opt.step(model.weights_, grad);
  }
  return model;
}

}  // namespace crumble::label
