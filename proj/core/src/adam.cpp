// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/adam.hpp"

#include <cmath>

#include "cascade/error.hpp"

namespace cascade {

void AdamOptimizer::step(std::span<const ParamRef> params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params[i].size));
      v_[i] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params[i].size));
    }
  }
  if (m_.size() != params.size()) {
    fail(ErrorCode::ShapeMismatch, "adam: parameter block count changed between steps");
  }

  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRef& p = params[i];
    if (m_[i].size() != static_cast<Eigen::Index>(p.size)) {
      fail(ErrorCode::ShapeMismatch, "adam: parameter block size changed between steps");
    }
    Eigen::Map<Eigen::VectorXd> value(p.value, static_cast<Eigen::Index>(p.size));
    Eigen::Map<const Eigen::VectorXd> grad(p.grad, static_cast<Eigen::Index>(p.size));
    if (!grad.allFinite()) {
      fail(ErrorCode::NonFiniteGradient, "adam: non-finite gradient");
    }
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const Eigen::VectorXd m_hat = m_[i] / bc1;
    const Eigen::VectorXd v_hat = v_[i] / bc2;
    value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

void append_mlp_params(Mlp& model, const Mlp& grads, std::vector<ParamRef>& out) {
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    auto& layer = model.layers()[l];
    const auto& grad_layer = grads.layers()[l];
    out.push_back({layer.weight.data(), grad_layer.weight.data(),
                   static_cast<std::size_t>(layer.weight.size())});
    out.push_back({layer.bias.data(), grad_layer.bias.data(),
                   static_cast<std::size_t>(layer.bias.size())});
  }
}

void append_matrix_params(Eigen::MatrixXd& value, const Eigen::MatrixXd& grad,
                          std::vector<ParamRef>& out) {
  out.push_back({value.data(), grad.data(), static_cast<std::size_t>(value.size())});
}

}  // namespace cascade
