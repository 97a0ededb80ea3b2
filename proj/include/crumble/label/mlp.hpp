#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crumble/core/rng.hpp"

namespace crumble::label {

// Feedforward scorer: per hidden block Linear -> LayerNorm -> GELU ->
// Dropout, then a linear output producing one logit. Double precision
// throughout; inference is deterministic (dropout only during training).
struct MlpConfig {
  int input_dim = 9;
  std::vector<int> hidden = {64, 32};
  double dropout = 0.1;
  double ln_epsilon = 1e-5;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(const MlpConfig& cfg, std::uint64_t init_seed);

  double score(const std::vector<double>& x) const;

  // Training-mode forward with dropout (pass nullptr to disable), then
  // backward accumulating parameter gradients for dloss/dscore.
  struct Tape;
  double forward(const std::vector<double>& x, Rng* dropout_rng, Tape& tape) const;
  void backward(const Tape& tape, double dscore, std::vector<double>& grad) const;

  const std::vector<double>& params() const { return params_; }
  std::vector<double>& params() { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const MlpConfig& config() const { return cfg_; }

  struct Tape {
    std::vector<std::vector<double>> input;     // per block
    std::vector<std::vector<double>> pre_norm;  // z = Wx+b
    std::vector<std::vector<double>> normed;    // (z-mu)/sd
    std::vector<std::vector<double>> activated; // gelu(ln_out)
    std::vector<std::vector<double>> mask;      // dropout scale per unit
    std::vector<double> sd;                     // layernorm sd per block
    std::vector<double> final_input;
  };

 private:
  struct Block {
    int in = 0;
    int out = 0;
    std::size_t w = 0;   // offsets into params_
    std::size_t b = 0;
    std::size_t gain = 0;
    std::size_t bias = 0;
  };
  MlpConfig cfg_;
  std::vector<Block> blocks_;
  std::size_t out_w_ = 0;
  std::size_t out_b_ = 0;
  int out_in_ = 0;
  std::vector<double> params_;
};

double gelu(double x);
double gelu_grad(double x);
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Decoupled weight-decay Adam.
struct AdamWConfig {
  double lr = 5e-3;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamW {
 public:
  AdamW(std::size_t n, const AdamWConfig& cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}
  // lr_scale rescales the configured rate for this step (schedules).
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr_scale = 1.0);
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

struct TrainConfig {
  MlpConfig model;
  AdamWConfig optimizer;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 20;
  double dropout = 0.1;
  std::uint64_t seed = 1;
};

struct LabeledExample {
  std::vector<double> x;
  int gate = 1;               // hard-filter eligibility
  int target = 0;             // binary y_e (used for AUC)
  double target_value = 0.0;  // loss target; equals y_e unless the
                              // continuous overlap target is enabled
  LabeledExample() = default;
  LabeledExample(std::vector<double> features, int gate_bit, int y,
                 double loss_target = -1.0)
      : x(std::move(features)),
        gate(gate_bit),
        target(y),
        target_value(loss_target < 0.0 ? static_cast<double>(y) : loss_target) {}
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;
};

struct TrainResult {
  Mlp model;
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_auc = 0.0;
  int gate_misses = 0;  // y=1 events rejected by the hard gate (excluded from loss)
};

// Gated BCE loss and dloss/dscore for one example (gate==1).
double bce_loss(double prob, double y);

// Trains on gate-passing examples; gated-out events contribute no loss
// (p = 0 exactly). Model selection by validation AUC with early stopping.
TrainResult train_mlp(const std::vector<LabeledExample>& train,
                      const std::vector<LabeledExample>& val, const TrainConfig& cfg);

// Gated probability: 0 exactly when the gate is closed.
inline double gated_probability(const Mlp& model, const std::vector<double>& x, int gate) {
  return gate ? sigmoid(model.score(x)) : 0.0;
}

}  // namespace crumble::label
