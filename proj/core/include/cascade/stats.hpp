// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <string>

namespace cascade {

// Standard-normal quantile function (Wichura's AS 241, double precision).
// p must lie in (0, 1).
double norm_quantile(double p);

// Standard-normal CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double silu(double x) { return x * sigmoid(x); }

inline double silu_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

double mean(std::span<const double> values);
// Population variance (divides by n).
double variance(std::span<const double> values);
double stddev(std::span<const double> values);

// Gaussian log-likelihood of `n` points with given MLE variance,
// sum_i log N(x_i; mean, var) = -n/2 * (log(2*pi*var) + 1).
// The variance is floored so that pure (zero-variance) groups stay finite.
double gaussian_mle_loglik(std::size_t n, double var, double var_floor = 1e-12);

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

}  // namespace cascade
