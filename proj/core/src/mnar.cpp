// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/mnar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cascade/error.hpp"
#include "cascade/rng.hpp"
#include "cascade/stats.hpp"

namespace cascade {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMcarRate = 0.10;

// Numeric representation of an input feature: raw value for numericals
// (train-mean imputed where already missing), integer code for categoricals.
Eigen::VectorXd input_column(const Dataset& ds, int schema_col,
                             const std::vector<int>& num_index_of,
                             const std::vector<int>& cat_index_of,
                             const std::vector<Eigen::Index>& train_rows) {
  const Eigen::Index n = ds.n_rows();
  Eigen::VectorXd out(n);
  const Column& column = ds.schema.columns[static_cast<std::size_t>(schema_col)];
  if (column.kind == ColumnKind::categorical) {
    const int j = cat_index_of[static_cast<std::size_t>(schema_col)];
    for (Eigen::Index i = 0; i < n; ++i) out[i] = static_cast<double>(ds.cat_values(i, j));
    return out;
  }
  const int j = num_index_of[static_cast<std::size_t>(schema_col)];
  double train_sum = 0.0;
  std::size_t train_count = 0;
  for (const auto row : train_rows) {
    if (!ds.missing_mask(row, j)) {
      train_sum += ds.num_values(row, j);
      ++train_count;
    }
  }
  const double impute = train_count > 0 ? train_sum / static_cast<double>(train_count) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = ds.missing_mask(i, j) ? impute : ds.num_values(i, j);
  }
  return out;
}

}  // namespace

MnarResult simulate_mnar(const Dataset& ds, double p_miss, std::uint64_t seed) {
  const Eigen::Index n = ds.n_rows();
  const auto cat_cols = ds.cat_schema_columns();
  const auto num_cols = ds.num_schema_columns();

  std::vector<int> num_index_of(ds.schema.columns.size(), -1);
  std::vector<int> cat_index_of(ds.schema.columns.size(), -1);
  for (std::size_t j = 0; j < num_cols.size(); ++j) num_index_of[static_cast<std::size_t>(num_cols[j])] = static_cast<int>(j);
  for (std::size_t j = 0; j < cat_cols.size(); ++j) cat_index_of[static_cast<std::size_t>(cat_cols[j])] = static_cast<int>(j);

  // Candidate pool: every non-target column, in schema order.
  std::vector<int> pool;
  for (int c = 0; c < static_cast<int>(ds.schema.columns.size()); ++c) {
    if (!ds.schema.columns[static_cast<std::size_t>(c)].is_target) pool.push_back(c);
  }
  if (pool.empty()) {
    fail(ErrorCode::NoMaskableFeatures, "no non-target features available");
  }

  Rng rng(seed);
  const std::size_t n_inputs =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(pool.size()))));
  const auto order = rng.permutation(pool.size());
  std::vector<int> inputs;
  for (std::size_t i = 0; i < n_inputs && i < pool.size(); ++i) {
    inputs.push_back(pool[order[i]]);
  }
  std::sort(inputs.begin(), inputs.end());

  std::vector<int> stage1;
  for (int c : pool) {
    if (ds.schema.columns[static_cast<std::size_t>(c)].kind == ColumnKind::numerical &&
        std::find(inputs.begin(), inputs.end(), c) == inputs.end()) {
      stage1.push_back(c);
    }
  }
  if (stage1.empty()) {
    fail(ErrorCode::NoMaskableFeatures,
         "every numerical non-target feature was selected as a logistic input");
  }

  const auto train_rows = ds.rows_with_split(Split::train);

  // Standardized design matrix over the input features.
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    Eigen::VectorXd col = input_column(ds, inputs[j], num_index_of, cat_index_of, train_rows);
    double m = 0.0, sq = 0.0;
    for (const auto row : train_rows) m += col[row];
    m /= static_cast<double>(train_rows.size());
    for (const auto row : train_rows) {
      const double d = col[row] - m;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(train_rows.size()));
    if (sd > 0.0) {
      design.col(static_cast<Eigen::Index>(j)) = (col.array() - m) / sd;
    } else {
      design.col(static_cast<Eigen::Index>(j)).setZero();
    }
  }

  Eigen::VectorXd coef(static_cast<Eigen::Index>(inputs.size()));
  for (Eigen::Index j = 0; j < coef.size(); ++j) coef[j] = rng.normal();

  Eigen::VectorXd predictor = design * coef;
  double pred_mean = 0.0, pred_sq = 0.0;
  for (const auto row : train_rows) pred_mean += predictor[row];
  pred_mean /= static_cast<double>(train_rows.size());
  for (const auto row : train_rows) {
    const double d = predictor[row] - pred_mean;
    pred_sq += d * d;
  }
  const double pred_sd = std::sqrt(pred_sq / static_cast<double>(train_rows.size()));
  if (pred_sd > 0.0) predictor /= pred_sd;

  // Bias calibration: mean sigmoid over the training rows == p_miss.
  double bias = 0.0;
  if (p_miss > 0.0) {
    const auto mean_prob = [&](double b) {
      double acc = 0.0;
      for (const auto row : train_rows) acc += sigmoid(predictor[row] + b);
      return acc / static_cast<double>(train_rows.size());
    };
    double lo = -20.0, hi = 20.0;
    for (int iter = 0; iter < 200; ++iter) {
      bias = 0.5 * (lo + hi);
      const double p = mean_prob(bias);
      if (std::abs(p - p_miss) < 1e-4) break;
      if (p < p_miss) {
        lo = bias;
      } else {
        hi = bias;
      }
    }
  }

  MnarResult result;
  result.dataset = ds;
  result.logistic_inputs = inputs;
  result.stage1_features = stage1;
  result.bias = bias;

  // Stage 1: Bernoulli with the calibrated row probabilities.
  std::size_t stage1_hits = 0;
  if (p_miss > 0.0) {
    for (int c : stage1) {
      const int j = num_index_of[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = rng.uniform();
        if (u < sigmoid(predictor[i] + bias)) {
          ++stage1_hits;
          result.dataset.missing_mask(i, j) = 1;
          result.dataset.num_values(i, j) = kNaN;
        }
      }
    }
  }
  result.stage1_rate = stage1.empty()
                           ? 0.0
                           : static_cast<double>(stage1_hits) /
                                 (static_cast<double>(n) * static_cast<double>(stage1.size()));

  // Stage 2: MCAR on the logistic-input features.
  for (int c : inputs) {
    const Column& column = ds.schema.columns[static_cast<std::size_t>(c)];
    if (column.kind == ColumnKind::numerical) {
      const int j = num_index_of[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < n; ++i) {
        if (rng.uniform() < kMcarRate) {
          result.dataset.missing_mask(i, j) = 1;
          result.dataset.num_values(i, j) = kNaN;
        }
      }
    } else {
      const int j = cat_index_of[static_cast<std::size_t>(c)];
      Column& out_column = result.dataset.schema.columns[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < n; ++i) {
        if (rng.uniform() < kMcarRate) {
          out_column.has_missing_category = true;
          result.dataset.cat_values(i, j) = out_column.missing_category();
        }
      }
    }
  }
  return result;
}

}  // namespace cascade
