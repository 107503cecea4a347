// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/time_embed.hpp"

#include <cmath>

#include "cascade/error.hpp"

namespace cascade {

namespace {
constexpr double kTimeScale = 1000.0;
constexpr double kFrequencyBase = 10000.0;
}  // namespace

TimeEmbedding::TimeEmbedding(int dim) : dim_(dim) {
  if (dim < 2 || dim % 2 != 0) {
    fail(ErrorCode::ShapeMismatch, "time embedding dimension must be even and >= 2");
  }
  const int half = dim / 2;
  frequencies_.resize(half);
  for (int i = 0; i < half; ++i) {
    frequencies_[i] = std::pow(kFrequencyBase, -2.0 * static_cast<double>(i) /
                                                   static_cast<double>(dim));
  }
}

Eigen::VectorXd TimeEmbedding::embed(double t) const {
  Eigen::VectorXd out(dim_);
  const double position = kTimeScale * t;
  for (int i = 0; i < dim_ / 2; ++i) {
    const double phase = position * frequencies_[i];
    out[2 * i] = std::sin(phase);
    out[2 * i + 1] = std::cos(phase);
  }
  return out;
}

Eigen::MatrixXd TimeEmbedding::embed(const Eigen::VectorXd& t) const {
  Eigen::MatrixXd out(t.size(), dim_);
  for (Eigen::Index r = 0; r < t.size(); ++r) {
    out.row(r) = embed(t[r]).transpose();
  }
  return out;
}

}  // namespace cascade
