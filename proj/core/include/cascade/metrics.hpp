// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cascade/dataset.hpp"
#include "cascade/gbdt.hpp"

namespace cascade {

// --- primitive statistics -------------------------------------------------

// Exact two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// AUC with ties counted 1/2; 0.5 when either class is empty.
double auc_score(std::span<const double> scores, std::span<const int> labels);

// Jensen-Shannon divergence (natural log) of two frequency vectors.
double js_divergence(std::span<const double> p, std::span<const double> q);

// 0.5 * sum |p - q|.
double total_variation(std::span<const double> p, std::span<const double> q);

// 1 - (max(0.5, auc) * 2 - 1): maps a discriminator AUC to [0, 1], 1 meaning
// indistinguishable. Shared by the detection and MIA scores.
double detection_score_from_auc(double auc);

// --- metric operations ------------------------------------------------------

struct ShapeScores {
  double shape = 0.0;
  std::optional<double> shape_cat;
  std::optional<double> shape_num;
  std::optional<double> wd_num;
  std::optional<double> jsd_cat;
  std::vector<std::pair<std::string, double>> per_feature;  // 1-KS / 1-TVD
};
ShapeScores shape_scores(const Dataset& real, const Dataset& synth);

struct TrendScores {
  std::optional<double> trend;
  std::optional<double> trend_mixed;
  std::vector<std::tuple<std::string, std::string, double>> pairs;
  std::vector<std::string> skipped;  // constant / empty pairs, recorded
};
TrendScores trend_scores(const Dataset& real, const Dataset& synth);

struct LearnerOptions {
  GbdtConfig gbdt;                   // depth 5, 500 iterations, lr 0.1
  int onehot_max_cardinality = 16;   // frequency-encode at or above
};

double detection_score(const Dataset& real_train, const Dataset& synth, std::uint64_t seed,
                       const LearnerOptions& options = {});

double mle_score(const Dataset& real_train, const Dataset& real_test, const Dataset& synth,
                 std::uint64_t seed, const LearnerOptions& options = {});

double dcr_share(const Dataset& real_train, const Dataset& real_test, const Dataset& synth);

double mia_score(const Dataset& real_train, const Dataset& real_test, const Dataset& synth,
                 std::uint64_t seed, const LearnerOptions& options = {});

// --- full report ------------------------------------------------------------

struct MetricsConfig {
  bool detection = true;
  bool mle = true;
  bool dcr = true;
  bool mia = true;
  LearnerOptions learner;
  std::uint64_t seed = 0;
};

struct MetricReport {
  ShapeScores shapes;
  TrendScores trends;
  std::optional<double> detection;
  std::optional<double> mle;
  std::optional<double> dcr_share;
  std::optional<double> mia;

  nlohmann::json to_json() const;
  // Flat header/value rows for cross-run aggregation.
  std::string csv_header() const;
  std::string csv_row() const;
};

MetricReport evaluate_all(const Dataset& real_train, const Dataset& real_test,
                          const Dataset& synth, const MetricsConfig& config);

}  // namespace cascade
