// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Core>

#include "cascade/rng.hpp"

namespace cascade {

struct LinearLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Fully connected network, SiLU on hidden layers, identity output.
// Forward/backward are pure; gradients are accumulated into a caller-owned
// mirror structure so the same network can be shared across threads.
class Mlp {
 public:
  Mlp() = default;
  // widths = {input, hidden..., output}. Kaiming-uniform fan-in weights,
  // zero biases.
  Mlp(const std::vector<int>& widths, Rng& rng);

  struct Cache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
    std::vector<Eigen::MatrixXd> post;  // inputs to layers 1..L-1
  };

  // x: batch x input_width. Returns batch x output_width.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

  // Exact reverse-mode gradients of forward. upstream: batch x output_width.
  // Accumulates into grads (same topology) and returns dL/dx.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& upstream,
                           Mlp& grads) const;

  // Same topology, all parameters zero. Gradient accumulator factory.
  Mlp zeros_like() const;
  void set_zero();

  int input_width() const;
  int output_width() const;
  std::size_t parameter_count() const;

  std::vector<LinearLayer>& layers() { return layers_; }
  const std::vector<LinearLayer>& layers() const { return layers_; }

 private:
  std::vector<LinearLayer> layers_;
};

}  // namespace cascade
