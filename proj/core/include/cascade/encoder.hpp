// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "cascade/dataset.hpp"
#include "cascade/preprocess.hpp"

namespace cascade {

// One Gaussian component of a per-feature encoder. For DT encoders the
// components partition the real line into [lo, hi) intervals; for GMM they
// are mixture components. weight is the empirical share of training values.
struct EncoderComponent {
  double mu = 0.0;
  double sigma = 0.0;
  double weight = 0.0;
  double lo = 0.0;  // DT interval bounds; -inf / +inf at the ends
  double hi = 0.0;
  bool inflated = false;
  double inflated_value = 0.0;      // standardized scale, valid iff inflated
  double inflated_value_raw = 0.0;  // original data scale, valid iff inflated
};

// Per-numerical-feature categorical encoder. Categories are the component
// indices 0..K-1 (inflated components included) plus, when the feature has
// missing cells, a trailing missing category.
class FeatureEncoder {
 public:
  enum class Kind { dt, gmm };

  Kind kind = Kind::dt;
  std::vector<EncoderComponent> components;
  bool has_missing = false;
  bool em_converged = true;

  int num_components() const { return static_cast<int>(components.size()); }
  int category_count() const { return num_components() + (has_missing ? 1 : 0); }
  int missing_category() const { return num_components(); }

  bool is_missing_category(int z) const { return has_missing && z == missing_category(); }
  bool is_inflated_category(int z) const {
    return z >= 0 && z < num_components() && components[static_cast<std::size_t>(z)].inflated;
  }
  // Special categories (missing or inflated) carry no source parameters.
  bool is_special(int z) const { return is_missing_category(z) || is_inflated_category(z); }

  // Total on the reals: inflated-value equality first, then interval lookup
  // (DT) or weighted log-likelihood argmax (GMM, lowest index wins ties).
  int encode(double x) const;

  // Component (mu, sigma) with sigma floored at kSigmaFloor. Throws
  // SpecialCategoryHasNoSource for missing/inflated categories.
  std::pair<double, double> source_params(int z) const;

  static constexpr double kSigmaFloor = 1e-3;
  static constexpr double kInflationVarEpsilon = 1e-10;

  // Greedy maximum-likelihood recursive splitting on value thresholds.
  static FeatureEncoder fit_dt(std::span<const double> values, int max_depth,
                               int min_leaf = 32);
  // Finite-mixture EM with k-means++ init and small-weight pruning, followed
  // by hard reassignment and empirical re-estimation.
  static FeatureEncoder fit_gmm(std::span<const double> values, int max_components,
                                std::uint64_t seed);

  // Flags zero-variance components whose assigned training values are all
  // identical as inflated; re-inflates sigma to the empirical std otherwise.
  void detect_inflated(std::span<const double> values);

  nlohmann::json to_json() const;
  static FeatureEncoder from_json(const nlohmann::json& j);
};

struct EncoderFitConfig {
  FeatureEncoder::Kind kind = FeatureEncoder::Kind::dt;
  int max_depth = 8;
  int max_components = 30;
  int min_leaf = 32;
  std::uint64_t seed = 0;
};

// One encoder per numerical feature, fitted on the standardized non-missing
// training values. Inflated values keep their exact original-scale
// representation for emission.
struct EncoderSet {
  std::vector<FeatureEncoder> encoders;

  int k_num() const { return static_cast<int>(encoders.size()); }

  // z matrix for standardized values; masked entries map to the missing
  // category.
  Eigen::MatrixXi encode_matrix(const Eigen::MatrixXd& standardized,
                                const MaskMatrix& mask) const;

  // Cardinalities of the low-resolution row: categorical columns (schema
  // order, including missing categories) followed by the encoded columns.
  std::vector<int> lowres_cardinalities(const FeatureSchema& schema) const;

  nlohmann::json to_json() const;
  static EncoderSet from_json(const nlohmann::json& j);
};

EncoderSet fit_encoder_set(const Dataset& ds, const Preprocessor& pre,
                           const EncoderFitConfig& cfg);

}  // namespace cascade
