// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cascade/error.hpp"
#include "cascade/stats.hpp"

namespace cascade {

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

}  // namespace

double QuantileMap::transform(double x) const {
  const double u = interpolate(values, cdf, x);
  return (norm_quantile(u) - post_mean) / post_std;
}

double QuantileMap::invert(double s) const {
  const double y = s * post_std + post_mean;
  double u = norm_cdf(y);
  u = std::clamp(u, cdf.front(), cdf.back());
  return interpolate(cdf, values, u);
}

Preprocessor Preprocessor::fit(const Dataset& ds) {
  Preprocessor pre;
  const auto num_cols = ds.num_schema_columns();
  const auto train_rows = ds.rows_with_split(Split::train);
  pre.maps_.resize(num_cols.size());

  for (std::size_t j = 0; j < num_cols.size(); ++j) {
    std::vector<double> values;
    values.reserve(train_rows.size());
    for (const auto row : train_rows) {
      if (!ds.missing_mask(row, static_cast<Eigen::Index>(j))) {
        values.push_back(ds.num_values(row, static_cast<Eigen::Index>(j)));
      }
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n < 2 || values.front() == values.back()) {
      fail(ErrorCode::ConstantFeature,
           "numerical feature '" + ds.schema.columns[static_cast<std::size_t>(num_cols[j])].name +
               "' is constant (or empty) on the training split");
    }

    QuantileMap& map = pre.maps_[j];
    // Tie-averaged plotting positions rank/(n+1); the +1 keeps ranks away
    // from the normal-quantile singularities at 0 and 1.
    std::size_t i = 0;
    while (i < n) {
      std::size_t k = i;
      while (k + 1 < n && values[k + 1] == values[i]) ++k;
      const double mean_rank = 0.5 * static_cast<double>(i + 1 + k + 1);
      map.values.push_back(values[i]);
      map.cdf.push_back(mean_rank / static_cast<double>(n + 1));
      i = k + 1;
    }

    // Moments of the transformed training values, with multiplicity.
    std::vector<double> transformed;
    transformed.reserve(n);
    {
      std::size_t grid = 0;
      for (std::size_t v = 0; v < n; ++v) {
        while (map.values[grid] != values[v]) ++grid;
        transformed.push_back(norm_quantile(map.cdf[grid]));
      }
    }
    map.post_mean = mean(transformed);
    map.post_std = stddev(transformed);
  }
  return pre;
}

double Preprocessor::transform_value(int feature, double x) const {
  return maps_[static_cast<std::size_t>(feature)].transform(x);
}

double Preprocessor::invert_value(int feature, double s) const {
  return maps_[static_cast<std::size_t>(feature)].invert(s);
}

Eigen::MatrixXd Preprocessor::apply(const Dataset& ds) const {
  const Eigen::Index n = ds.n_rows();
  const Eigen::Index k = ds.num_values.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const QuantileMap& map = maps_[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!ds.missing_mask(i, j)) {
        out(i, j) = map.transform(ds.num_values(i, j));
      }
    }
  }
  return out;
}

nlohmann::json Preprocessor::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& map : maps_) {
    features.push_back({{"values", map.values},
                        {"cdf", map.cdf},
                        {"post_mean", map.post_mean},
                        {"post_std", map.post_std}});
  }
  return nlohmann::json{{"version", 1}, {"features", std::move(features)}};
}

Preprocessor Preprocessor::from_json(const nlohmann::json& j) {
  Preprocessor pre;
  for (const auto& f : j.at("features")) {
    QuantileMap map;
    map.values = f.at("values").get<std::vector<double>>();
    map.cdf = f.at("cdf").get<std::vector<double>>();
    map.post_mean = f.at("post_mean").get<double>();
    map.post_std = f.at("post_std").get<double>();
    pre.maps_.push_back(std::move(map));
  }
  return pre;
}

}  // namespace cascade
