// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cascade/mlp.hpp"

namespace cascade {

// One parameter block and its gradient, viewed as flat arrays.
struct ParamRef {
  double* value = nullptr;
  const double* grad = nullptr;
  std::size_t size = 0;
};

// Bias-corrected Adam. Moment buffers are allocated lazily on the first step
// and must see the same block layout on every subsequent call.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<const ParamRef> params);

  std::size_t step_count() const { return step_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  std::vector<Eigen::VectorXd> m_, v_;
};

// Convenience: parameter/gradient pairs for an Mlp, layer by layer.
void append_mlp_params(Mlp& model, const Mlp& grads, std::vector<ParamRef>& out);
void append_matrix_params(Eigen::MatrixXd& value, const Eigen::MatrixXd& grad,
                          std::vector<ParamRef>& out);

}  // namespace cascade
