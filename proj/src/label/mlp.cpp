#include "crumble/label/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "crumble/eval/metrics.hpp"
#include "crumble/kern/kernels.hpp"

namespace crumble::label {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

Mlp::Mlp(const MlpConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  std::size_t off = 0;
  int in = cfg.input_dim;
  for (const int out : cfg.hidden) {
    Block b;
    b.in = in;
    b.out = out;
    b.w = off;
    off += static_cast<std::size_t>(out) * static_cast<std::size_t>(in);
    b.b = off;
    off += static_cast<std::size_t>(out);
    b.gain = off;
    off += static_cast<std::size_t>(out);
    b.bias = off;
    off += static_cast<std::size_t>(out);
    blocks_.push_back(b);
    in = out;
  }
  out_in_ = in;
  out_w_ = off;
  off += static_cast<std::size_t>(in);
  out_b_ = off;
  off += 1;
  params_.assign(off, 0.0);

  // Kaiming-style init for weights, unit gains, zero biases.
  Rng rng(init_seed, 0x4d4c50ULL);
  for (const auto& b : blocks_) {
    const double sd = std::sqrt(2.0 / static_cast<double>(b.in));
    for (int i = 0; i < b.out * b.in; ++i) params_[b.w + static_cast<std::size_t>(i)] = sd * rng.normal();
    for (int i = 0; i < b.out; ++i) params_[b.gain + static_cast<std::size_t>(i)] = 1.0;
  }
  const double sd = std::sqrt(1.0 / static_cast<double>(out_in_));
  for (int i = 0; i < out_in_; ++i) params_[out_w_ + static_cast<std::size_t>(i)] = sd * rng.normal();
}

double Mlp::forward(const std::vector<double>& x, Rng* dropout_rng, Tape& tape) const {
  const auto& k = kern::active();
  tape.input.assign(blocks_.size(), {});
  tape.pre_norm.assign(blocks_.size(), {});
  tape.normed.assign(blocks_.size(), {});
  tape.activated.assign(blocks_.size(), {});
  tape.mask.assign(blocks_.size(), {});
  tape.sd.assign(blocks_.size(), 0.0);

  std::vector<double> cur = x;
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    tape.input[bi] = cur;
    std::vector<double> z(static_cast<std::size_t>(b.out));
    k.matvec(params_.data() + b.w, params_.data() + b.b, cur.data(), z.data(),
             static_cast<std::size_t>(b.out), static_cast<std::size_t>(b.in));
    tape.pre_norm[bi] = z;

    const double n = static_cast<double>(b.out);
    const double mean = k.sum(z.data(), z.size()) / n;
    const double var = k.sumsq(z.data(), mean, z.size()) / n;
    const double sd = std::sqrt(var + cfg_.ln_epsilon);
    tape.sd[bi] = sd;
    std::vector<double> normed(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) normed[i] = (z[i] - mean) / sd;
    tape.normed[bi] = normed;

    std::vector<double> act(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double y = params_[b.gain + i] * normed[i] + params_[b.bias + i];
      act[i] = gelu(y);
    }
    tape.activated[bi] = act;

    std::vector<double> mask(z.size(), 1.0);
    if (dropout_rng && cfg_.dropout > 0.0) {
      const double keep = 1.0 - cfg_.dropout;
      for (auto& m : mask) m = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    }
    tape.mask[bi] = mask;
    cur.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) cur[i] = act[i] * mask[i];
  }
  tape.final_input = cur;
  return k.dot(params_.data() + out_w_, cur.data(), cur.size()) + params_[out_b_];
}

double Mlp::score(const std::vector<double>& x) const {
  Tape tape;
  return forward(x, nullptr, tape);
}

void Mlp::backward(const Tape& tape, double dscore, std::vector<double>& grad) const {
  const auto& k = kern::active();
  // Output layer.
  k.axpy(dscore, tape.final_input.data(), grad.data() + out_w_, tape.final_input.size());
  grad[out_b_] += dscore;
  std::vector<double> dcur(static_cast<std::size_t>(out_in_));
  for (std::size_t i = 0; i < dcur.size(); ++i) dcur[i] = dscore * params_[out_w_ + i];

  for (std::size_t bi = blocks_.size(); bi-- > 0;) {
    const Block& b = blocks_[bi];
    const auto n = static_cast<std::size_t>(b.out);
    // Dropout.
    std::vector<double> dact(n);
    for (std::size_t i = 0; i < n; ++i) dact[i] = dcur[i] * tape.mask[bi][i];
    // GELU at y = gain*normed + bias.
    std::vector<double> dy(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = params_[b.gain + i] * tape.normed[bi][i] + params_[b.bias + i];
      dy[i] = dact[i] * gelu_grad(y);
    }
    // LayerNorm affine.
    std::vector<double> dnormed(n);
    for (std::size_t i = 0; i < n; ++i) {
      grad[b.gain + i] += dy[i] * tape.normed[bi][i];
      grad[b.bias + i] += dy[i];
      dnormed[i] = dy[i] * params_[b.gain + i];
    }
    // LayerNorm standardization.
    const double nd = static_cast<double>(n);
    const double mean_dn = k.sum(dnormed.data(), n) / nd;
    double mean_dn_x = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_dn_x += dnormed[i] * tape.normed[bi][i];
    mean_dn_x /= nd;
    std::vector<double> dz(n);
    for (std::size_t i = 0; i < n; ++i) {
      dz[i] = (dnormed[i] - mean_dn - tape.normed[bi][i] * mean_dn_x) / tape.sd[bi];
    }
    // Linear.
    k.ger(grad.data() + b.w, dz.data(), tape.input[bi].data(), n,
          static_cast<std::size_t>(b.in));
    for (std::size_t i = 0; i < n; ++i) grad[b.b + i] += dz[i];
    dcur.resize(static_cast<std::size_t>(b.in));
    k.matvec_t(params_.data() + b.w, dz.data(), dcur.data(), n, static_cast<std::size_t>(b.in));
  }
}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grad, double lr_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.lr * lr_scale;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.epsilon) +
                       cfg_.weight_decay * params[i]);
  }
}

double bce_loss(double prob, double y) {
  constexpr double tiny = 1e-300;
  return -(y * std::log(std::max(prob, tiny)) +
           (1.0 - y) * std::log(std::max(1.0 - prob, tiny)));
}

TrainResult train_mlp(const std::vector<LabeledExample>& train,
                      const std::vector<LabeledExample>& val, const TrainConfig& cfg) {
  TrainResult result;
  result.model = Mlp(cfg.model, cfg.seed);

  // Only gate-passing events carry loss; y=1 behind a closed gate would be an
  // infinite-loss hazard, so those are excluded and counted.
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].gate) {
      usable.push_back(i);
    } else if (train[i].target) {
      ++result.gate_misses;
    }
  }
  int pos = 0, neg = 0;
  for (const std::size_t i : usable) (train[i].target ? pos : neg) += 1;
  if (pos == 0 || neg == 0) {
    throw std::runtime_error("single-class training split: " + std::to_string(pos) +
                             " positive / " + std::to_string(neg) +
                             " negative gate-passing events");
  }

  Rng shuffle_rng(cfg.seed, 0x5348ULL);
  Rng dropout_rng(cfg.seed, 0x4452ULL);
  AdamW opt(result.model.param_count(), cfg.optimizer);
  std::vector<double> grad(result.model.param_count(), 0.0);
  Mlp::Tape tape;

  auto evaluate = [&](const Mlp& m, const std::vector<LabeledExample>& data, double& loss,
                      double& auc) {
    loss = 0.0;
    std::size_t counted = 0;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& ex : data) {
      const double p = gated_probability(m, ex.x, ex.gate);
      scores.push_back(p);
      labels.push_back(ex.target);
      if (ex.gate) {
        loss += bce_loss(p, ex.target_value);
        ++counted;
      }
    }
    loss = counted ? loss / static_cast<double>(counted) : 0.0;
    const auto roc = eval::roc_auc(scores, labels);
    auc = roc ? roc->auc : 0.5;
  };

  std::vector<double> best_params = result.model.params();
  int best_epoch = -1;
  double best_auc = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Deterministic Fisher-Yates shuffle.
    for (std::size_t i = usable.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(usable[i - 1], usable[j]);
    }
    // Cosine decay from the configured rate.
    const double lr_scale =
        0.5 * (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(epoch) /
                              static_cast<double>(cfg.max_epochs)));
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < usable.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(usable.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train[usable[i]];
        Rng* drop = cfg.dropout > 0.0 ? &dropout_rng : nullptr;
        const double s = result.model.forward(ex.x, drop, tape);
        const double p = sigmoid(s);
        epoch_loss += bce_loss(p, ex.target_value);
        ++seen;
        result.model.backward(tape, (p - ex.target_value) * inv, grad);
      }
      opt.step(result.model.params(), grad, lr_scale);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = seen ? epoch_loss / static_cast<double>(seen) : 0.0;
    evaluate(result.model, val, st.val_loss, st.val_auc);
    result.history.push_back(st);

    if (st.val_auc > best_auc) {
      best_auc = st.val_auc;
      best_epoch = epoch;
      best_params = result.model.params();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  result.model.params() = best_params;
  result.best_epoch = best_epoch;
  result.best_val_auc = best_auc;
  return result;
}

}  // namespace crumble::label
