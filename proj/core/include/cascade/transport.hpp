// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cascade/dataset.hpp"
#include "cascade/encoder.hpp"

namespace cascade {

// Monte-Carlo comparison of the expected squared transport distance
// E||x1 - x0||^2 under the data-dependent coupling (x0 drawn from the
// encoder component of z = encode(x1)) versus the independent standard
// normal source. Expectations are per feature over non-missing entries;
// totals sum over features.
struct TransportGap {
  double cost_coupled = 0.0;
  double cost_independent = 0.0;
  // Standard error of the paired mean difference (independent - coupled).
  double gap_std_error = 0.0;
  std::vector<double> feature_sq_dev;  // E[(x1 - mu_z)^2] per feature
  std::vector<double> feature_var;     // E[sigma_z^2] per feature
};

TransportGap transport_cost_gap(const Eigen::MatrixXd& standardized, const MaskMatrix& mask,
                                const std::vector<Eigen::Index>& rows,
                                const EncoderSet& encoders, std::size_t n_mc,
                                std::uint64_t seed);

// Wasserstein distance of the guided path snapshot x_t = t x1 + (1-t) x0 to
// the data, per time point, under the coupled versus the independent source.
// Distances are 1-D per feature and averaged over features.
struct PathWdTrace {
  std::vector<double> ts;
  std::vector<double> wd_coupled;
  std::vector<double> wd_independent;
};

PathWdTrace path_wd_trace(const Eigen::MatrixXd& standardized, const MaskMatrix& mask,
                          const std::vector<Eigen::Index>& rows, const EncoderSet& encoders,
                          const std::vector<double>& ts, std::size_t n_draws,
                          std::uint64_t seed);

// Exact 1-D Wasserstein-1 distance between two samples (unequal sizes
// allowed); the integral of |F_a - F_b| over the line.
double wasserstein1(std::vector<double> a, std::vector<double> b);

}  // namespace cascade
