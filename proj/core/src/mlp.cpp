// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/mlp.hpp"

#include <cmath>

#include "cascade/error.hpp"
#include "cascade/stats.hpp"

namespace cascade {

Mlp::Mlp(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) {
    fail(ErrorCode::ShapeMismatch, "mlp needs at least input and output widths");
  }
  layers_.resize(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    LinearLayer& layer = layers_[l];
    layer.weight.resize(fan_out, fan_in);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
      }
    }
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.cols() != input_width()) {
    fail(ErrorCode::ShapeMismatch, "mlp forward: input width mismatch");
  }
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
  }
  Eigen::MatrixXd activation = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z =
        (activation * layers_[l].weight.transpose()).rowwise() + layers_[l].bias.transpose();
    if (cache) cache->pre.push_back(z);
    if (l + 1 < layers_.size()) {
      activation = z.unaryExpr([](double v) { return silu(v); });
      if (cache) cache->post.push_back(activation);
    } else {
      activation = std::move(z);
    }
  }
  return activation;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& upstream,
                              Mlp& grads) const {
  if (grads.layers_.size() != layers_.size()) {
    fail(ErrorCode::ShapeMismatch, "mlp backward: gradient topology mismatch");
  }
  Eigen::MatrixXd g = upstream;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    Eigen::MatrixXd dz;
    if (li + 1 < layers_.size()) {
      dz = g.cwiseProduct(
          cache.pre[li].unaryExpr([](double v) { return silu_derivative(v); }));
    } else {
      dz = std::move(g);
    }
    const Eigen::MatrixXd& layer_input = li == 0 ? cache.input : cache.post[li - 1];
    grads.layers_[li].weight.noalias() += dz.transpose() * layer_input;
    grads.layers_[li].bias.noalias() += dz.colwise().sum().transpose();
    g.noalias() = dz * layers_[li].weight;
  }
  return g;
}

Mlp Mlp::zeros_like() const {
  Mlp out;
  out.layers_.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    out.layers_[l].weight = Eigen::MatrixXd::Zero(layers_[l].weight.rows(), layers_[l].weight.cols());
    out.layers_[l].bias = Eigen::VectorXd::Zero(layers_[l].bias.size());
  }
  return out;
}

void Mlp::set_zero() {
  for (auto& layer : layers_) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
}

int Mlp::input_width() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int Mlp::output_width() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::size_t Mlp::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) {
    count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return count;
}

}  // namespace cascade
