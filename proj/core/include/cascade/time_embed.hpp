// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

namespace cascade {

// Sinusoidal embedding of a scalar time t in [0, 1]. t is scaled by 1000 and
// passed through sin/cos pairs at geometric frequencies with base 10000, the
// positional-encoding convention.
class TimeEmbedding {
 public:
  explicit TimeEmbedding(int dim);

  int dim() const { return dim_; }

  Eigen::VectorXd embed(double t) const;
  // One embedding row per entry of t.
  Eigen::MatrixXd embed(const Eigen::VectorXd& t) const;

 private:
  int dim_;
  Eigen::VectorXd frequencies_;  // dim/2 geometric frequencies
};

}  // namespace cascade
