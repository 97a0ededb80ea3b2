#pragma once

#include <cstdint>
#include <vector>

#include "crumble/label/mlp.hpp"

namespace crumble::label {

// Random Fourier feature map approximating an RBF kernel with bandwidth from
// the median pairwise distance heuristic, followed by logistic regression.
struct RffConfig {
  int num_features = 256;
  double l2 = 1e-4;
  int max_iters = 3000;
  double lr = 0.05;
  std::uint64_t seed = 1;
};

class RffLogistic {
 public:
  RffLogistic() = default;

  // phi(x) = sqrt(2/D) cos(Wx + b), rows of W ~ N(0, I / sigma^2).
  std::vector<double> features(const std::vector<double>& x) const;
  double score(const std::vector<double>& x) const;
  double bandwidth() const { return sigma_; }

  static double median_pairwise_distance(const std::vector<std::vector<double>>& rows,
                                         std::size_t max_rows = 512);

  static RffLogistic fit(const std::vector<LabeledExample>& train, const RffConfig& cfg);

 private:
  int input_dim_ = 0;
  int num_features_ = 0;
  double sigma_ = 1.0;
  std::vector<double> proj_;    // num_features x input_dim
  std::vector<double> phase_;   // num_features
  std::vector<double> weights_; // num_features + 1 (bias last)
};

}  // namespace crumble::label
