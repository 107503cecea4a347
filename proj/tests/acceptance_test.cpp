// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each test prints one PASS/FAIL line.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

#include "cascade/bundle.hpp"
#include "cascade/encoder.hpp"
#include "cascade/highres.hpp"
#include "cascade/metrics.hpp"
#include "cascade/mnar.hpp"
#include "cascade/pipeline.hpp"
#include "cascade/preprocess.hpp"
#include "cascade/schedule.hpp"
#include "cascade/stats.hpp"
#include "cascade/transport.hpp"
#include "test_util.hpp"

namespace cascade {
namespace {

using Clock = std::chrono::steady_clock;
using testing::DatasetBuilder;
using testing::make_temp_dir;
using testing::write_file;

struct Criterion {
  int id;
  const char* name;
  ~Criterion() {
    std::cout << "[ACCEPTANCE] criterion " << id << " (" << name << "): "
              << (::testing::Test::HasFailure() ? "FAIL" : "PASS") << std::endl;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// 1. Analytic identities.
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion1AnalyticIdentities) {
  const Criterion banner{1, "analytic identities"};
  const auto start = Clock::now();

  // Schedule boundary conditions over 1000 random conditionings of a real
  // ScheduleNet.
  {
    Rng rng(100);
    HighResConfig cfg;
    cfg.cond_dim = 16;
    cfg.time_dim = 4;
    cfg.schedule_hidden = {16};
    cfg.field_hidden = {8};
    HighResModel model({7, 5}, 3, cfg, rng);
    Eigen::MatrixXi x_low(1000, 2);
    for (Eigen::Index i = 0; i < 1000; ++i) {
      x_low(i, 0) = static_cast<int>(rng.below(7));
      x_low(i, 1) = static_cast<int>(rng.below(5));
    }
    Eigen::MatrixXd gamma0, gamma1;
    model.schedule_at(x_low, 0.0, &gamma0, nullptr);
    model.schedule_at(x_low, 1.0, &gamma1, nullptr);
    EXPECT_LT(gamma0.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((gamma1.array() - 1.0).abs().maxCoeff(), 1e-9);
  }

  // Eq. 6 after the path substitution equals the regression target form.
  {
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const QuinticSchedule s{rng.normal() * 2.0, rng.normal() * 2.0,
                              1e-3 + softplus(rng.normal())};
      const double t = rng.uniform() * 0.999;
      const auto v = s.evaluate(t);
      if (v.gamma >= 1.0 - 1e-6) continue;
      const double x1 = 3.0 * rng.normal();
      const double x0 = 3.0 * rng.normal();
      const double x_t = v.gamma * x1 + (1.0 - v.gamma) * x0;
      const double lhs = v.gamma_dot * (x1 - x_t) / (1.0 - v.gamma);
      const double rhs = v.gamma_dot * (x1 - x0);
      worst = std::max(worst, std::abs(lhs - rhs) /
                                  std::max({std::abs(lhs), std::abs(rhs), 1e-12}));
    }
    EXPECT_LT(worst, 1e-9);
  }

  // Linear-schedule reduction: gamma_dot == 1 exactly, and the loss equals
  // the plain mean squared residual against x1 - x0.
  {
    Rng rng(102);
    HighResConfig cfg;
    cfg.cond_dim = 8;
    cfg.time_dim = 4;
    cfg.field_hidden = {12};
    cfg.schedule_hidden = {8};
    HighResModel model({4}, 2, cfg, rng);
    for (auto& layer : model.schedule_trunk().layers()) {
      layer.weight.setZero();
      layer.bias.setZero();
    }
    Eigen::MatrixXi x_low(16, 1);
    Eigen::MatrixXd x1(16, 2), eps(16, 2);
    Eigen::VectorXd t(16);
    for (Eigen::Index i = 0; i < 16; ++i) {
      x_low(i, 0) = static_cast<int>(rng.below(4));
      t[i] = rng.uniform();
      for (int f = 0; f < 2; ++f) {
        x1(i, f) = rng.normal();
        eps(i, f) = rng.normal();
      }
    }
    Eigen::MatrixXd gdot;
    model.schedule_at(x_low, 0.37, nullptr, &gdot);
    EXPECT_EQ(gdot.minCoeff(), 1.0);
    EXPECT_EQ(gdot.maxCoeff(), 1.0);

    SourceBatch src;
    src.mu = Eigen::MatrixXd::Zero(16, 2);
    src.sigma = Eigen::MatrixXd::Ones(16, 2);
    src.mask = MaskMatrix::Zero(16, 2);
    const double loss = model.cfm_loss(x1, x_low, src, t, eps);

    // Independent residual computation, coordinate by coordinate.
    double expected = 0.0;
    const Eigen::MatrixXd x0 = src.mu + src.sigma.cwiseProduct(eps);
    for (Eigen::Index i = 0; i < 16; ++i) {
      Eigen::MatrixXd gamma_i;
      Eigen::MatrixXi row_low = x_low.row(i);
      model.schedule_at(row_low, t[i], &gamma_i, nullptr);
      Eigen::MatrixXd x_t(1, 2);
      for (int f = 0; f < 2; ++f) {
        x_t(0, f) = gamma_i(0, f) * x1(i, f) + (1.0 - gamma_i(0, f)) * x0(i, f);
      }
      SourceBatch s;
      s.mu = src.mu.row(i);
      s.sigma = src.sigma.row(i);
      s.mask = src.mask.row(i);
      const Eigen::MatrixXd u = model.velocity(x_t, row_low, s, t[i]);
      for (int f = 0; f < 2; ++f) {
        const double r = u(0, f) - (x1(i, f) - x0(i, f));
        expected += r * r;
      }
    }
    expected /= 32.0;
    EXPECT_NEAR(loss, expected, 1e-13 * std::max(1.0, expected));
  }

  EXPECT_LT(seconds_since(start), 3.0);
}

// ---------------------------------------------------------------------------
// 2. Theorem 1 on five synthetic feature families.
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion2TransportCostGap) {
  const Criterion banner{2, "theorem 1 transport-cost gap"};
  const auto start = Clock::now();
  constexpr std::size_t kMc = 100000;
  constexpr double kTol = 0.02;
  const int n = 20000;

  std::vector<std::pair<const char*, std::function<double(Rng&)>>> families = {
      {"bimodal",
       [](Rng& r) { return r.uniform() < 0.5 ? -2.0 + 0.5 * r.normal() : 2.0 + 0.5 * r.normal(); }},
      {"zero_inflated",
       [](Rng& r) { return r.uniform() < 0.4 ? 0.0 : 1.0 + r.normal(); }},
      {"heavy_tailed", [](Rng& r) { return std::exp(r.normal()); }},
      {"uniform", [](Rng& r) { return r.uniform(); }},
      {"integer_valued",
       [](Rng& r) {
         int count = 0;
         for (int k = 0; k < 10; ++k) count += r.uniform() < 0.3;
         return static_cast<double>(count);
       }},
  };

  std::uint64_t family_seed = 200;
  for (const auto& [label, draw] : families) {
    SCOPED_TRACE(label);
    DatasetBuilder builder;
    builder.add_numerical("x");
    Rng rng(family_seed++);
    for (int i = 0; i < n; ++i) builder.num_rows.push_back({draw(rng)});
    const Dataset ds = builder.build();
    const Preprocessor pre = Preprocessor::fit(ds);
    const Eigen::MatrixXd standardized = pre.apply(ds);

    std::vector<double> values(standardized.col(0).data(),
                               standardized.col(0).data() + n);
    FeatureEncoder enc = FeatureEncoder::fit_dt(values, 8, 32);
    enc.detect_inflated(values);
    EncoderSet set;
    set.encoders.push_back(enc);

    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    const TransportGap gap = transport_cost_gap(standardized, ds.missing_mask, rows, set,
                                                kMc, family_seed * 31);
    EXPECT_LT(gap.cost_coupled, gap.cost_independent);
    EXPECT_GT(gap.cost_independent - gap.cost_coupled, 3.0 * gap.gap_std_error);
    EXPECT_LE(gap.feature_sq_dev[0], 1.0 + kTol);
    EXPECT_LE(gap.feature_var[0], 1.0 + kTol);
  }
  EXPECT_LT(seconds_since(start), 30.0);
}

// ---------------------------------------------------------------------------
// 3. Gradient checks across 20 random configurations.
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion3GradientChecks) {
  const Criterion banner{3, "gradient checks"};
  const auto start = Clock::now();

  Rng meta(300);
  for (int config_idx = 0; config_idx < 20; ++config_idx) {
    SCOPED_TRACE(config_idx);
    const int k_num = 1 + static_cast<int>(meta.below(3));
    const int card_a = 2 + static_cast<int>(meta.below(4));
    const int card_b = 2 + static_cast<int>(meta.below(3));

    // --- high-res composite: f, ScheduleNet (through the quintic
    // normalization), conditioning embeddings.
    HighResConfig cfg;
    cfg.cond_dim = 2 + static_cast<int>(meta.below(6));
    cfg.time_dim = 2 + 2 * static_cast<int>(meta.below(3));
    cfg.field_hidden = {3 + static_cast<int>(meta.below(8))};
    cfg.schedule_hidden = {3 + static_cast<int>(meta.below(6))};
    Rng init(meta.next_u64());
    HighResModel model({card_a, card_b}, k_num, cfg, init);

    const Eigen::Index b = 3;
    Eigen::MatrixXi x_low(b, 2);
    Eigen::MatrixXd x1(b, k_num), eps(b, k_num);
    Eigen::VectorXd t(b);
    SourceBatch src;
    src.mu.resize(b, k_num);
    src.sigma.resize(b, k_num);
    src.mask = MaskMatrix::Zero(b, k_num);
    Rng data(meta.next_u64());
    for (Eigen::Index i = 0; i < b; ++i) {
      x_low(i, 0) = static_cast<int>(data.below(static_cast<std::uint64_t>(card_a)));
      x_low(i, 1) = static_cast<int>(data.below(static_cast<std::uint64_t>(card_b)));
      t[i] = 0.05 + 0.9 * data.uniform();
      for (int f = 0; f < k_num; ++f) {
        x1(i, f) = data.normal();
        eps(i, f) = data.normal();
        src.mu(i, f) = 0.3 * data.normal();
        src.sigma(i, f) = 0.5 + 0.5 * data.uniform();
      }
    }
    if (k_num > 1) src.mask(0, 0) = 1;

    auto grads = model.zero_gradients();
    model.cfm_loss(x1, x_low, src, t, eps, &grads);

    const double h = 1e-4;
    double worst = 0.0;
    auto check = [&](double* value, double analytic) {
      const double original = *value;
      *value = original + h;
      const double up = model.cfm_loss(x1, x_low, src, t, eps);
      *value = original - h;
      const double down = model.cfm_loss(x1, x_low, src, t, eps);
      *value = original;
      const double fd = (up - down) / (2.0 * h);
      if (std::abs(fd) < 1e-7 && std::abs(analytic) < 1e-7) return;
      worst = std::max(worst,
                       std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic)}));
    };
    for (std::size_t tbl = 0; tbl < model.cond_embeddings().size(); ++tbl) {
      auto& table = model.cond_embeddings()[tbl];
      for (Eigen::Index i = 0; i < table.size(); i += 3) {
        check(table.data() + i, grads.cond_embeddings[tbl].data()[i]);
      }
    }
    for (std::size_t l = 0; l < model.schedule_trunk().layers().size(); ++l) {
      auto& w = model.schedule_trunk().layers()[l].weight;
      for (Eigen::Index i = 0; i < w.size(); i += 2) {
        check(w.data() + i, grads.schedule_trunk.layers()[l].weight.data()[i]);
      }
      auto& bias = model.schedule_trunk().layers()[l].bias;
      for (Eigen::Index i = 0; i < bias.size(); i += 2) {
        check(bias.data() + i, grads.schedule_trunk.layers()[l].bias.data()[i]);
      }
    }
    for (std::size_t l = 0; l < model.field_trunk().layers().size(); ++l) {
      auto& w = model.field_trunk().layers()[l].weight;
      for (Eigen::Index i = 0; i < w.size(); i += 4) {
        check(w.data() + i, grads.field_trunk.layers()[l].weight.data()[i]);
      }
    }
    EXPECT_LT(worst, 1e-3) << "high-res config " << config_idx;

    // --- low-res trunk + embeddings.
    LowResConfig lcfg;
    lcfg.embed_dim = 2 + static_cast<int>(meta.below(4));
    lcfg.time_dim = 2 + 2 * static_cast<int>(meta.below(2));
    lcfg.hidden = {3 + static_cast<int>(meta.below(6))};
    Rng linit(meta.next_u64());
    LowResModel lowres({card_a, card_b}, lcfg, linit);
    Eigen::MatrixXi batch(b, 2);
    Eigen::VectorXd lt(b);
    Eigen::MatrixXd noise(b, 2 * lcfg.embed_dim);
    for (Eigen::Index i = 0; i < b; ++i) {
      batch(i, 0) = static_cast<int>(data.below(static_cast<std::uint64_t>(card_a)));
      batch(i, 1) = static_cast<int>(data.below(static_cast<std::uint64_t>(card_b)));
      lt[i] = data.uniform();
      for (Eigen::Index c = 0; c < noise.cols(); ++c) noise(i, c) = data.normal();
    }
    auto lgrads = lowres.zero_gradients();
    lowres.loss(batch, lt, noise, &lgrads);
    double lworst = 0.0;
    auto lcheck = [&](double* value, double analytic) {
      const double original = *value;
      *value = original + h;
      const double up = lowres.loss(batch, lt, noise);
      *value = original - h;
      const double down = lowres.loss(batch, lt, noise);
      *value = original;
      const double fd = (up - down) / (2.0 * h);
      if (std::abs(fd) < 1e-7 && std::abs(analytic) < 1e-7) return;
      lworst = std::max(lworst, std::abs(fd - analytic) /
                                    std::max({std::abs(fd), std::abs(analytic)}));
    };
    for (std::size_t tbl = 0; tbl < lowres.embeddings().size(); ++tbl) {
      auto& table = lowres.embeddings()[tbl];
      for (Eigen::Index i = 0; i < table.size(); i += 3) {
        lcheck(table.data() + i, lgrads.embeddings[tbl].data()[i]);
      }
    }
    for (std::size_t l = 0; l < lowres.trunk().layers().size(); ++l) {
      auto& w = lowres.trunk().layers()[l].weight;
      for (Eigen::Index i = 0; i < w.size(); i += 4) {
        lcheck(w.data() + i, lgrads.trunk.layers()[l].weight.data()[i]);
      }
    }
    EXPECT_LT(lworst, 1e-3) << "low-res config " << config_idx;
  }
  EXPECT_LT(seconds_since(start), 60.0);
}

// ---------------------------------------------------------------------------
// 4. Metric oracles.
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion4MetricOracles) {
  const Criterion banner{4, "metric oracles"};

  // KS equals the brute-force sup over pooled points, 1000 cases, n <= 50.
  {
    Rng rng(400);
    for (int rep = 0; rep < 1000; ++rep) {
      const std::size_t na = 1 + rng.below(50);
      const std::size_t nb = 1 + rng.below(50);
      std::vector<double> a, b;
      for (std::size_t i = 0; i < na; ++i) {
        a.push_back(rng.uniform() < 0.4 ? std::round(rng.normal()) : rng.normal());
      }
      for (std::size_t i = 0; i < nb; ++i) {
        b.push_back(rng.uniform() < 0.4 ? std::round(rng.normal()) : rng.normal());
      }
      double sup = 0.0;
      std::vector<double> pooled = a;
      pooled.insert(pooled.end(), b.begin(), b.end());
      for (const double v : pooled) {
        double fa = 0.0, fb = 0.0;
        for (const double x : a) fa += x <= v;
        for (const double x : b) fb += x <= v;
        sup = std::max(sup, std::abs(fa / static_cast<double>(na) - fb / static_cast<double>(nb)));
      }
      ASSERT_NEAR(ks_statistic(a, b), sup, 1e-12);
    }
  }

  // AUC equals the pairwise definition with ties at 1/2, 1000 cases, n <= 200.
  {
    Rng rng(401);
    for (int rep = 0; rep < 1000; ++rep) {
      const std::size_t n = 2 + rng.below(199);
      std::vector<double> scores;
      std::vector<int> labels;
      for (std::size_t i = 0; i < n; ++i) {
        scores.push_back(std::round(rng.normal() * 4.0) / 4.0);
        labels.push_back(static_cast<int>(rng.below(2)));
      }
      double wins = 0.0;
      std::size_t pairs = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (labels[j] != 0) continue;
          ++pairs;
          wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
        }
      }
      const double expected = pairs > 0 ? wins / static_cast<double>(pairs) : 0.5;
      ASSERT_NEAR(auc_score(scores, labels), expected, 1e-12);
    }
  }

  // Detection formula endpoints, exact.
  EXPECT_EQ(detection_score_from_auc(0.5), 1.0);
  EXPECT_EQ(detection_score_from_auc(1.0), 0.0);
  EXPECT_EQ(detection_score_from_auc(0.25), 1.0);

  // DCR tie rule on a symmetric construction, exact.
  {
    DatasetBuilder train, test, synth;
    for (auto* b : {&train, &test, &synth}) b->add_numerical("x");
    train.num_rows = {{0.0}, {2.0}};
    test.num_rows = {{4.0}, {6.0}};
    synth.num_rows = {{3.0}};
    EXPECT_EQ(dcr_share(train.build(), test.build(), synth.build()), 0.5);
  }
}

// ---------------------------------------------------------------------------
// 5. Desk-scale mixed-type generation.
// ---------------------------------------------------------------------------

struct DeskData {
  Dataset masked;
  double trained_missing_rate = 0.0;  // on the MNAR'd feature
  double trained_zero_share = 0.0;    // among non-missing zero-inflated cells
  double trained_low_mode_mass = 0.0; // bimodal mass below the midpoint
};

DeskData make_desk_dataset(int n) {
  DatasetBuilder builder;
  builder.add_categorical("segment", 3);
  builder.add_categorical("flag", 2);
  builder.add_numerical("burst");   // zero-inflated at pi = 0.4
  builder.add_numerical("wave");    // bimodal, driven by segment
  builder.add_numerical("drift");   // plain normal, MNAR target
  Rng rng(500);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const int segment = u < 0.3 ? 0 : (u < 0.7 ? 1 : 2);
    const int flag = rng.uniform() < 0.2 + 0.3 * segment ? 1 : 0;
    const double burst =
        rng.uniform() < 0.4 ? 0.0 : (flag + 1.0) * (1.0 + std::abs(rng.normal()));
    const double wave = (segment == 0 ? -2.0 : 2.0) + 0.5 * rng.normal();
    const double drift = static_cast<double>(segment) + rng.normal();
    builder.cat_rows.push_back({segment, flag});
    builder.num_rows.push_back({burst, wave, drift});
  }
  Dataset clean = builder.build();

  // Seed-hunt an MNAR draw whose logistic inputs are burst and wave, so
  // stage 1 masks exactly the drift feature.
  const int burst_col = 2, wave_col = 3;
  DeskData out;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const MnarResult result = simulate_mnar(clean, 0.10, seed);
    if (result.logistic_inputs == std::vector<int>{burst_col, wave_col}) {
      out.masked = result.dataset;
      out.trained_missing_rate = result.stage1_rate;
      break;
    }
  }

  int zero_count = 0, nonmissing_burst = 0, low_mode = 0, wave_count = 0;
  for (Eigen::Index i = 0; i < out.masked.n_rows(); ++i) {
    if (!out.masked.missing_mask(i, 0)) {
      ++nonmissing_burst;
      zero_count += out.masked.num_values(i, 0) == 0.0;
    }
    if (!out.masked.missing_mask(i, 1)) {
      ++wave_count;
      low_mode += out.masked.num_values(i, 1) < 0.0;
    }
  }
  out.trained_zero_share = static_cast<double>(zero_count) / nonmissing_burst;
  out.trained_low_mode_mass = static_cast<double>(low_mode) / wave_count;
  return out;
}

TEST(Acceptance, Criterion5DeskScaleMixedGeneration) {
  const Criterion banner{5, "desk-scale mixed-type generation"};

  const DeskData desk = make_desk_dataset(20000);
  ASSERT_GT(desk.masked.n_rows(), 0);
  ASSERT_NEAR(desk.trained_missing_rate, 0.10, 0.01);
  ASSERT_NEAR(desk.trained_zero_share, 0.40, 0.02);

  const auto dir = make_temp_dir("acceptance5");
  save_dataset_csv(desk.masked, dir / "data.csv");
  desk.masked.schema.save(dir / "schema.json");

  nlohmann::json config_json{
      {"profile", "desk"},
      {"data",
       {{"csv", (dir / "data.csv").string()},
        {"schema", (dir / "schema.json").string()},
        {"split_seed", 11}}},
      {"out", (dir / "bundle").string()},
      {"encoder", {{"kind", "dt"}, {"max_depth", 8}, {"min_leaf", 32}}},
      {"training",
       {{"lr", 1e-3},
        {"seed", 12},
        {"lowres", {{"embed_dim", 16}, {"time_dim", 16}, {"hidden", {256, 256}}}},
        {"highres",
         {{"cond_dim", 64},
          {"time_dim", 32},
          {"field_hidden", {256, 256, 256}},
          {"schedule_hidden", {64}}}}}},
      {"sampling", {{"n", 8000}, {"steps", 200}, {"seed", 13}}}};
  const RunConfig config = RunConfig::from_json(config_json);
  ASSERT_EQ(config.sampling.steps, 200);
  ASSERT_EQ(config.training.steps, 2000);
  ASSERT_EQ(config.training.batch, 256);

  const auto fit_start = Clock::now();
  const ModelBundle bundle = cmd_fit(config);
  const double fit_seconds = seconds_since(fit_start);
  std::cout << "[ACCEPTANCE] desk fit took " << fit_seconds << " s" << std::endl;
  EXPECT_LT(fit_seconds, 300.0);

  const Dataset sampled = sample_dataset(bundle, config.sampling.n, config.sampling.steps,
                                         config.sampling.seed);

  // Zero-inflation share among non-missing generated cells.
  int zero_count = 0, nonmissing = 0;
  for (Eigen::Index i = 0; i < sampled.n_rows(); ++i) {
    if (!sampled.missing_mask(i, 0)) {
      ++nonmissing;
      zero_count += sampled.num_values(i, 0) == 0.0;
    }
  }
  const double zero_share = static_cast<double>(zero_count) / nonmissing;
  std::cout << "[ACCEPTANCE] generated zero share " << zero_share << " (target 0.40)"
            << std::endl;
  EXPECT_NEAR(zero_share, 0.40, 0.03);

  // Missing rate on the MNAR'd feature.
  const double missing_rate =
      sampled.missing_mask.col(2).cast<double>().sum() / static_cast<double>(sampled.n_rows());
  std::cout << "[ACCEPTANCE] generated missing rate " << missing_rate << " (target 0.10)"
            << std::endl;
  EXPECT_NEAR(missing_rate, 0.10, 0.02);

  // Both bimodal modes present with the right masses.
  int low_mode = 0, wave_count = 0;
  for (Eigen::Index i = 0; i < sampled.n_rows(); ++i) {
    if (!sampled.missing_mask(i, 1)) {
      ++wave_count;
      low_mode += sampled.num_values(i, 1) < 0.0;
    }
  }
  const double low_mass = static_cast<double>(low_mode) / wave_count;
  std::cout << "[ACCEPTANCE] generated low-mode mass " << low_mass << " (target "
            << desk.trained_low_mode_mass << ")" << std::endl;
  EXPECT_NEAR(low_mass, desk.trained_low_mode_mass, 0.05);
  EXPECT_GT(low_mass, 0.05);
  EXPECT_LT(low_mass, 0.95);

  // Shape(num) and Trend against the training split.
  const Dataset train = subset_by_split(split_dataset(desk.masked, 11), Split::train);
  const auto shapes = shape_scores(train, sampled);
  const auto trends = trend_scores(train, sampled);
  std::cout << "[ACCEPTANCE] shape(num) " << *shapes.shape_num << ", trend " << *trends.trend
            << std::endl;
  EXPECT_GE(*shapes.shape_num, 0.95);
  EXPECT_GE(*trends.trend, 0.93);
}

// ---------------------------------------------------------------------------
// 6. Cascade determinism and persistence.
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion6DeterminismAndPersistence) {
  const Criterion banner{6, "determinism and persistence"};

  const auto dir = make_temp_dir("acceptance6");
  {
    DatasetBuilder builder;
    builder.add_categorical("g", 2);
    builder.add_numerical("x");
    Rng rng(600);
    for (int i = 0; i < 500; ++i) {
      const int g = static_cast<int>(rng.below(2));
      builder.cat_rows.push_back({g});
      builder.num_rows.push_back({g == 0 ? rng.normal() : 3.0 + rng.normal()});
    }
    const Dataset ds = builder.build();
    save_dataset_csv(ds, dir / "data.csv");
    ds.schema.save(dir / "schema.json");
  }
  nlohmann::json config_json{
      {"data",
       {{"csv", (dir / "data.csv").string()},
        {"schema", (dir / "schema.json").string()},
        {"split_seed", 3}}},
      {"out", (dir / "bundle").string()},
      {"encoder", {{"max_depth", 4}, {"min_leaf", 16}}},
      {"training",
       {{"steps", 80},
        {"batch", 32},
        {"seed", 7},
        {"log_every", 20},
        {"lowres", {{"embed_dim", 4}, {"time_dim", 4}, {"hidden", {16}}}},
        {"highres",
         {{"cond_dim", 8}, {"time_dim", 4}, {"field_hidden", {16}}, {"schedule_hidden", {8}}}}}},
      {"sampling", {{"n", 64}, {"steps", 12}, {"seed", 9}}}};
  const RunConfig config = RunConfig::from_json(config_json);

  const ModelBundle bundle = cmd_fit(config);
  const std::string csv_before = cmd_sample(bundle, 64, 12, 9, {});
  const ModelBundle loaded = ModelBundle::load(dir / "bundle");
  const std::string csv_after = cmd_sample(loaded, 64, 12, 9, {});
  EXPECT_EQ(csv_before, csv_after);

  // Same seeds, independent fit: byte-identical samples end to end.
  RunConfig config2 = config;
  config2.out_dir = (dir / "bundle2").string();
  const ModelBundle bundle2 = cmd_fit(config2);
  EXPECT_EQ(csv_before, cmd_sample(bundle2, 64, 12, 9, {}));

  // Different sampling seed must differ.
  EXPECT_NE(csv_before, cmd_sample(loaded, 64, 12, 10, {}));
}

// ---------------------------------------------------------------------------
// 7. MNAR simulator calibration.
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion7MnarCalibration) {
  const Criterion banner{7, "MNAR calibration"};

  // 2 categorical + 8 numerical features, n = 1e5.
  DatasetBuilder builder;
  builder.add_categorical("c0", 3);
  builder.add_categorical("c1", 4);
  for (int f = 0; f < 8; ++f) builder.add_numerical("n" + std::to_string(f));
  Rng rng(700);
  for (int i = 0; i < 100000; ++i) {
    builder.cat_rows.push_back({static_cast<int>(rng.below(3)), static_cast<int>(rng.below(4))});
    std::vector<double> nums;
    for (int f = 0; f < 8; ++f) nums.push_back(rng.normal() * (1.0 + 0.2 * f) + f);
    builder.num_rows.push_back(nums);
  }
  const Dataset ds = builder.build();

  for (const double p : {0.10, 0.25, 0.50}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const MnarResult result = simulate_mnar(ds, p, seed);
      EXPECT_NEAR(result.stage1_rate, p, 0.01)
          << "p=" << p << " seed=" << seed;
    }
  }
}

// ---------------------------------------------------------------------------
// 8. Figure-3 qualitative reproduction on the two-cluster toy.
// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion8PathWdOrdering) {
  const Criterion banner{8, "path WD ordering"};
  const auto start = Clock::now();

  // Plain mean/std standardization keeps the two clusters visible; a
  // quantile map would turn the marginal into an exact standard normal and
  // make the t = 0 comparison degenerate.
  Rng rng(800);
  const int n = 20000;
  std::vector<double> raw;
  for (int i = 0; i < n; ++i) {
    raw.push_back(rng.uniform() < 0.5 ? -3.0 + 0.4 * rng.normal() : 3.0 + 0.4 * rng.normal());
  }
  const double raw_mean = mean(raw);
  const double raw_std = stddev(raw);
  Eigen::MatrixXd standardized(n, 1);
  for (int i = 0; i < n; ++i) {
    standardized(i, 0) = (raw[static_cast<std::size_t>(i)] - raw_mean) / raw_std;
  }
  const MaskMatrix no_mask = MaskMatrix::Zero(n, 1);
  std::vector<double> values(standardized.col(0).data(),
                             standardized.col(0).data() + standardized.rows());
  FeatureEncoder enc = FeatureEncoder::fit_dt(values, 8, 32);
  enc.detect_inflated(values);
  EncoderSet set;
  set.encoders.push_back(enc);

  std::vector<Eigen::Index> rows(values.size());
  std::iota(rows.begin(), rows.end(), 0);
  const PathWdTrace trace = path_wd_trace(standardized, no_mask, rows, set,
                                          {0.0, 0.25, 0.5, 0.75}, 10000, 801);
  for (std::size_t k = 0; k < trace.ts.size(); ++k) {
    EXPECT_LE(trace.wd_coupled[k], trace.wd_independent[k])
        << "t=" << trace.ts[k];
    std::cout << "[ACCEPTANCE] t=" << trace.ts[k] << " wd coupled " << trace.wd_coupled[k]
              << " vs independent " << trace.wd_independent[k] << std::endl;
  }
  EXPECT_LT(trace.wd_coupled[0], trace.wd_independent[0]);  // strict at t = 0
  EXPECT_LT(seconds_since(start), 60.0);
}

}  // namespace
}  // namespace cascade
