// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "cascade/dataset.hpp"

namespace cascade {

// Two-stage MNAR simulation.
//
// Stage 1 (MAR): a seeded draw selects 30% of the non-target features
// (rounded up, at least one) as inputs to a randomly initialized logistic
// model. Coefficients are drawn standard normal and rescaled so the linear
// predictor has unit variance over the training rows; the bias is then
// bisection-searched so the mean sigmoid probability over the training rows
// equals p_miss. Every remaining non-target numerical feature is masked
// cell-wise by independent Bernoulli draws with those row probabilities.
//
// Stage 2 (MCAR): 10% of the logistic-input features' cells are masked
// completely at random; categorical inputs are recoded to the column's
// missing category.
//
// The target column is never masked.
struct MnarResult {
  Dataset dataset;
  std::vector<int> logistic_inputs;    // schema column indices
  std::vector<int> stage1_features;    // schema column indices (numerical)
  double bias = 0.0;
  // Realized stage-1 missing rate over all rows and stage-1 features,
  // counting only cells that stage 1 itself masked.
  double stage1_rate = 0.0;
};

MnarResult simulate_mnar(const Dataset& ds, double p_miss, std::uint64_t seed);

}  // namespace cascade
