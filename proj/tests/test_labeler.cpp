#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crumble/core/rng.hpp"
#include "crumble/detect/detector.hpp"
#include "crumble/label/features.hpp"
#include "crumble/label/mlp.hpp"
#include "crumble/label/rff.hpp"

using namespace crumble;
using label::LabeledExample;

namespace {

detect::CandidateEvent ev_at(TimeNs t0, TimeNs t1, double ds) {
  detect::CandidateEvent ev;
  ev.t0 = t0;
  ev.t1 = t1;
  ev.x.depletion_speed = ds;
  return ev;
}

}  // namespace

TEST_CASE("temporal features: gaps, counts and sums") {
  // two events ending/starting at 10 s and 12 s -> gap = 2 s
  std::vector<detect::CandidateEvent> evs;
  evs.push_back(ev_at(8 * kNsPerSec, 10 * kNsPerSec, 5.0));
  evs.push_back(ev_at(12 * kNsPerSec, 13 * kNsPerSec, 7.0));
  std::vector<detect::CandidateEvent*> ptrs{&evs[0], &evs[1]};
  label::compute_temporal_features(ptrs, 0, 60 * kNsPerSec);
  CHECK(evs[0].x.temporal_gap == doctest::Approx(8.0));  // session-open sentinel
  CHECK(evs[0].x.temporal_count == 0);
  CHECK(evs[0].x.temporal_ds_sum == 0);
  CHECK(evs[1].x.temporal_gap == doctest::Approx(2.0));
  CHECK(evs[1].x.temporal_count == 1);
  CHECK(evs[1].x.temporal_ds_sum == doctest::Approx(5.0));

  // three prior events inside the lookback
  std::vector<detect::CandidateEvent> e2;
  e2.push_back(ev_at(1 * kNsPerSec, 2 * kNsPerSec, 1.0));
  e2.push_back(ev_at(3 * kNsPerSec, 4 * kNsPerSec, 2.0));
  e2.push_back(ev_at(5 * kNsPerSec, 6 * kNsPerSec, 3.0));
  e2.push_back(ev_at(7 * kNsPerSec, 8 * kNsPerSec, 4.0));
  std::vector<detect::CandidateEvent*> p2;
  for (auto& e : e2) p2.push_back(&e);
  label::compute_temporal_features(p2, 0, 60 * kNsPerSec);
  CHECK(e2[3].x.temporal_count == 3);
  CHECK(e2[3].x.temporal_ds_sum == doctest::Approx(6.0));
}

TEST_CASE("temporal features match a quadratic oracle on random events") {
  Rng rng(42);
  std::vector<detect::CandidateEvent> evs;
  TimeNs t = 0;
  for (int i = 0; i < 200; ++i) {
    t += rng.uniform_int(kNsPerMs, 5 * kNsPerSec);
    const TimeNs dur = rng.uniform_int(kNsPerMs, 2 * kNsPerSec);
    evs.push_back(ev_at(t, t + dur, rng.uniform(0, 100)));
    t += dur;
  }
  // shuffle then sort by end time like the pipeline does
  std::vector<detect::CandidateEvent*> ptrs;
  for (auto& e : evs) ptrs.push_back(&e);
  const TimeNs lookback = 60 * kNsPerSec;
  label::compute_temporal_features(ptrs, 0, lookback);
  for (std::size_t i = 0; i < evs.size(); ++i) {
    const TimeNs prev_end = i == 0 ? 0 : evs[i - 1].t1;
    const double gap = std::max(0.0, seconds(evs[i].t0 - prev_end));
    int count = 0;
    double sum = 0;
    for (std::size_t j = 0; j < i; ++j) {
      if (evs[j].t1 > evs[i].t0 - lookback) {
        ++count;
        sum += evs[j].x.depletion_speed;
      }
    }
    REQUIRE(evs[i].x.temporal_gap == doctest::Approx(gap).epsilon(1e-12));
    REQUIRE(evs[i].x.temporal_count == doctest::Approx(count));
    REQUIRE(evs[i].x.temporal_ds_sum == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("robust scaler: order-statistics example and constant features") {
  label::RobustScaler sc;
  sc.fit({{1}, {2}, {3}, {4}, {5}});
  CHECK(sc.medians()[0] == doctest::Approx(3.0));
  CHECK(sc.iqrs()[0] == doctest::Approx(2.0));
  CHECK(sc.transform({5.0})[0] == doctest::Approx(1.0));
  CHECK(sc.transform({3.0})[0] == doctest::Approx(0.0));

  label::RobustScaler flat;
  flat.fit({{7}, {7}, {7}});
  CHECK(flat.constant_features() == 1);
  CHECK(flat.transform({7.0})[0] == doctest::Approx(0.0));
  CHECK(flat.transform({9.0})[0] == doctest::Approx(2.0));  // divisor falls back to 1
}

TEST_CASE("robust scaler: transformed training data has median 0 and IQR 1") {
  Rng rng(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 301; ++i) rows.push_back({rng.uniform(-3, 9), std::exp(rng.uniform(0, 4))});
  label::RobustScaler sc;
  sc.fit(rows);
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<double> col;
    for (const auto& r : rows) col.push_back(sc.transform(r)[j]);
    CHECK(detect::percentile_linear(col, 50.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(detect::percentile_linear(col, 75.0) - detect::percentile_linear(col, 25.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("gated probability: closed gate pins the probability at exactly zero") {
  label::MlpConfig cfg;
  cfg.input_dim = 3;
  label::Mlp model(cfg, 7);
  const std::vector<double> x{0.3, -0.2, 1.0};
  CHECK(label::gated_probability(model, x, 0) == 0.0);
  const double p = label::gated_probability(model, x, 1);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  CHECK(p == doctest::Approx(label::sigmoid(model.score(x))));
}

TEST_CASE("logistic arithmetic: score 0 gives one half, ln 3 gives three quarters") {
  CHECK(label::sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(label::sigmoid(std::log(3.0)) == doctest::Approx(0.75));
}

TEST_CASE("bce loss values and the score gradient identity") {
  CHECK(label::bce_loss(0.5, 1.0) == doctest::Approx(std::log(2.0)));
  // dL/ds = sigma(s) - y checked by central finite differences through the
  // full model below; here check the loss is minimal at p = y for the
  // continuous-target variant.
  for (const double y : {0.2, 0.5, 0.8}) {
    const double at_y = label::bce_loss(y, y);
    CHECK(label::bce_loss(y + 0.05, y) > at_y);
    CHECK(label::bce_loss(y - 0.05, y) > at_y);
  }
}

TEST_CASE("full-model analytic gradient matches central finite differences") {
  label::MlpConfig cfg;
  cfg.input_dim = 9;
  cfg.dropout = 0.0;  // disabled for the check
  label::Mlp model(cfg, 11);
  Rng rng(13);

  for (int batch = 0; batch < 4; ++batch) {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 8; ++i) {
      std::vector<double> x(9);
      for (auto& v : x) v = rng.uniform(-2, 2);
      xs.push_back(std::move(x));
      ys.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
    }
    auto loss_at = [&](const label::Mlp& m) {
      double total = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        total += label::bce_loss(label::sigmoid(m.score(xs[i])), ys[i]);
      }
      return total / static_cast<double>(xs.size());
    };
    std::vector<double> grad(model.param_count(), 0.0);
    label::Mlp::Tape tape;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double s = model.forward(xs[i], nullptr, tape);
      const double p = label::sigmoid(s);
      model.backward(tape, (p - ys[i]) / static_cast<double>(xs.size()), grad);
    }
    // probe a spread of parameters incl. layer norm gains and biases
    Rng pick(101 + static_cast<std::uint64_t>(batch));
    for (int probe = 0; probe < 60; ++probe) {
      const auto j = static_cast<std::size_t>(
          pick.uniform_int(0, static_cast<std::int64_t>(model.param_count()) - 1));
      const double h = 1e-6 * std::max(1.0, std::abs(model.params()[j]));
      label::Mlp up = model, dn = model;
      up.params()[j] += h;
      dn.params()[j] -= h;
      const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
      const double scale = std::max({1e-8, std::abs(fd), std::abs(grad[j])});
      REQUIRE(std::abs(fd - grad[j]) / scale <= 1e-4);
    }
  }
}

TEST_CASE("adamw single step equals the hand-computed update") {
  label::AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.01;
  label::AdamW opt(2, cfg);
  std::vector<double> params{1.0, -2.0};
  const std::vector<double> grad{0.5, -0.25};
  opt.step(params, grad);
  for (int i = 0; i < 2; ++i) {
    const double g = grad[static_cast<std::size_t>(i)];
    const double m_hat = (0.1 * g) / (1 - 0.9);           // bias-corrected first moment
    const double v_hat = (0.001 * g * g) / (1 - 0.999);   // second moment
    const double p0 = i == 0 ? 1.0 : -2.0;
    const double expect = p0 - 0.1 * (m_hat / (std::sqrt(v_hat) + cfg.epsilon) + 0.01 * p0);
    CHECK(params[static_cast<std::size_t>(i)] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  Rng rng(3);
  std::vector<LabeledExample> train, val;
  for (int i = 0; i < 64; ++i) {
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const int y = x[0] > 0 ? 1 : 0;
    (i % 4 ? train : val).push_back({x, 1, y});
  }
  label::TrainConfig cfg;
  cfg.model.input_dim = 2;
  cfg.optimizer.lr = 0.0;
  cfg.optimizer.weight_decay = 0.0;
  cfg.max_epochs = 5;
  cfg.seed = 9;
  const label::Mlp init(cfg.model, 9);  // same init seed the trainer derives? use result instead
  const auto result = label::train_mlp(train, val, cfg);
  const label::Mlp fresh(cfg.model, cfg.seed);
  CHECK(result.model.params() == fresh.params());
}

TEST_CASE("training separates a toy two-blob problem") {
  Rng rng(17);
  std::vector<LabeledExample> train, val;
  for (int i = 0; i < 400; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    std::vector<double> x{rng.normal(y ? 1.5 : -1.5, 0.5), rng.normal(y ? 1.0 : -1.0, 0.5)};
    (i % 5 ? train : val).push_back({x, 1, y});
  }
  label::TrainConfig cfg;
  cfg.model.input_dim = 2;
  cfg.max_epochs = 50;
  cfg.patience = 50;
  cfg.seed = 4;
  const auto result = label::train_mlp(train, val, cfg);
  CHECK(result.best_val_auc > 0.99);
  // loss decreases from start to the selected epoch on this separable set
  REQUIRE(result.history.size() >= 2);
  CHECK(result.history.back().train_loss < result.history.front().train_loss);
}

TEST_CASE("training is deterministic for a fixed seed and counts gate misses") {
  Rng rng(23);
  std::vector<LabeledExample> train, val;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const int y = x[0] + 0.5 * x[1] > 0 ? 1 : 0;
    const int gate = rng.bernoulli(0.85) ? 1 : 0;
    (i % 5 ? train : val).push_back({x, gate, y});
  }
  label::TrainConfig cfg;
  cfg.model.input_dim = 3;
  cfg.max_epochs = 20;
  cfg.seed = 31;
  const auto a = label::train_mlp(train, val, cfg);
  const auto b = label::train_mlp(train, val, cfg);
  CHECK(a.model.params() == b.model.params());
  CHECK(a.best_epoch == b.best_epoch);
  int expected_misses = 0;
  for (const auto& ex : train)
    if (!ex.gate && ex.target) ++expected_misses;
  CHECK(a.gate_misses == expected_misses);
}

TEST_CASE("rff kernel approximation: feature inner products approach the rbf kernel") {
  Rng rng(29);
  std::vector<LabeledExample> train;
  for (int i = 0; i < 300; ++i) {
    std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    train.push_back({x, 1, rng.bernoulli(0.5) ? 1 : 0});
  }
  label::RffConfig cfg;
  cfg.num_features = 256;
  cfg.max_iters = 1;  // only the feature map matters here
  cfg.seed = 5;
  const auto model = label::RffLogistic::fit(train, cfg);
  const double sigma = model.bandwidth();
  double abs_err = 0.0;
  int pairs = 0;
  Rng pick(31);
  for (int k = 0; k < 1000; ++k) {
    const auto& a = train[static_cast<std::size_t>(pick.uniform_int(0, 299))].x;
    const auto& b = train[static_cast<std::size_t>(pick.uniform_int(0, 299))].x;
    const auto fa = model.features(a);
    const auto fb = model.features(b);
    double dot = 0, d2 = 0;
    for (std::size_t j = 0; j < fa.size(); ++j) dot += fa[j] * fb[j];
    for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    abs_err += std::abs(dot - std::exp(-d2 / (2 * sigma * sigma)));
    ++pairs;
  }
  CHECK(abs_err / pairs < 0.05);
}

TEST_CASE("rff logistic solves xor while remaining deterministic") {
  Rng rng(37);
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  for (int i = 0; i < 600; ++i) {
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const int y = (x[0] > 0) != (x[1] > 0) ? 1 : 0;
    (i % 3 ? train : test).push_back({x, 1, y});
  }
  label::RffConfig cfg;
  cfg.seed = 2;
  const auto model = label::RffLogistic::fit(train, cfg);
  const auto again = label::RffLogistic::fit(train, cfg);
  int correct = 0;
  for (const auto& ex : test) {
    const int pred = label::sigmoid(model.score(ex.x)) >= 0.5 ? 1 : 0;
    correct += pred == ex.target;
    CHECK(model.score(ex.x) == again.score(ex.x));
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(test.size()) > 0.9);
}

TEST_CASE("rff with zero features reduces to a bias-only model") {
  Rng rng(41);
  std::vector<LabeledExample> train;
  for (int i = 0; i < 100; ++i) {
    train.push_back({{rng.uniform(-1, 1)}, 1, rng.bernoulli(0.5) ? 1 : 0});
  }
  label::RffConfig cfg;
  cfg.num_features = 0;
  cfg.seed = 1;
  const auto model = label::RffLogistic::fit(train, cfg);
  const double s0 = model.score({0.1});
  const double s1 = model.score({-0.9});
  CHECK(s0 == doctest::Approx(s1));  // constant score: AUC 0.5 by construction
}

TEST_CASE("single-class training split aborts with a diagnostic") {
  Rng rng(51);
  std::vector<LabeledExample> train, val;
  for (int i = 0; i < 80; ++i) {
    std::vector<double> x{rng.uniform(-1, 1)};
    (i % 5 ? train : val).push_back({x, 1, 1});  // all positive
  }
  label::TrainConfig cfg;
  cfg.model.input_dim = 1;
  cfg.max_epochs = 3;
  CHECK_THROWS_AS(label::train_mlp(train, val, cfg), std::runtime_error);
}

TEST_CASE("continuous loss targets steer the fitted probability") {
  // One repeated input with target_value 0.3: the trained score approaches
  // log(0.3/0.7) because the BCE gradient vanishes at p == target.
  std::vector<LabeledExample> train, val;
  for (int i = 0; i < 64; ++i) {
    train.push_back({{0.5, -0.25}, 1, i % 2, 0.3});
    val.push_back({{0.5, -0.25}, 1, i % 2, 0.3});
  }
  label::TrainConfig cfg;
  cfg.model.input_dim = 2;
  cfg.model.dropout = 0.0;
  cfg.dropout = 0.0;
  cfg.max_epochs = 120;
  cfg.patience = 120;
  cfg.optimizer.weight_decay = 0.0;
  cfg.seed = 12;
  const auto result = label::train_mlp(train, val, cfg);
  const double p = label::sigmoid(result.model.score({0.5, -0.25}));
  CHECK(p == doctest::Approx(0.3).epsilon(0.08));
}
