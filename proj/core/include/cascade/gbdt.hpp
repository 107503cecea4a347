// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace cascade {

struct GbdtConfig {
  bool regression = false;  // logistic loss otherwise
  int max_depth = 5;
  int n_iterations = 500;
  int n_bins = 64;
  double learning_rate = 0.1;
  double lambda = 1e-6;  // L2 on leaf values
  int min_leaf = 20;
};

// Deterministic histogram gradient boosting. Missing values (NaN) are routed
// to whichever child gives the higher training gain, LightGBM-style.
// Second-order (Newton) leaf values.
class Gbdt {
 public:
  // X: n x d with NaN for missing; y: {0,1} labels or regression targets.
  // If eval_X is given, eval_callback(iteration, margins) fires after every
  // boosting iteration with the accumulated eval margins.
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbdtConfig& config,
           const Eigen::MatrixXd* eval_X = nullptr,
           const std::function<void(int, const Eigen::VectorXd&)>& eval_callback = {});

  // Raw margin (log-odds for classification, prediction for regression).
  Eigen::VectorXd predict_margin(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;

  double base_score() const { return base_; }
  int n_trees() const { return static_cast<int>(trees_.size()); }

 private:
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    bool missing_left = false;
    double value = 0.0;  // leaf value, learning-rate scaled
    int left = -1;
    int right = -1;
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  double predict_tree(const Tree& tree, const Eigen::VectorXd& row) const;

  GbdtConfig config_;
  double base_ = 0.0;
  std::vector<Tree> trees_;
};

}  // namespace cascade
