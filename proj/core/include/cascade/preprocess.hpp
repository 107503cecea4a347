// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "cascade/dataset.hpp"

namespace cascade {

// Per-feature quantile map fitted on non-missing training values.
// transform: value -> empirical CDF (plotting position rank/(n+1), linear
// between grid nodes, clamped outside) -> standard-normal quantile ->
// standardized by the transformed training moments. invert reverses the
// chain and clips to the observed training min/max.
struct QuantileMap {
  std::vector<double> values;  // sorted distinct training values
  std::vector<double> cdf;     // tie-averaged plotting positions, same length
  double post_mean = 0.0;      // moments of the transformed training values
  double post_std = 1.0;

  double transform(double x) const;
  double invert(double s) const;
};

class Preprocessor {
 public:
  Preprocessor() = default;

  // Fits one QuantileMap per numerical feature on the train split.
  // Throws ConstantFeature when a feature has fewer than 2 distinct values.
  static Preprocessor fit(const Dataset& ds);

  double transform_value(int feature, double x) const;
  double invert_value(int feature, double s) const;

  // n x K_num matrix of transformed values; masked entries are set to 0
  // (the post-transform mean), the dataset's mask stays authoritative.
  Eigen::MatrixXd apply(const Dataset& ds) const;

  int num_features() const { return static_cast<int>(maps_.size()); }
  const QuantileMap& map(int feature) const { return maps_[static_cast<std::size_t>(feature)]; }

  nlohmann::json to_json() const;
  static Preprocessor from_json(const nlohmann::json& j);

 private:
  std::vector<QuantileMap> maps_;
};

}  // namespace cascade
