// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "cascade/error.hpp"
#include "cascade/stats.hpp"

namespace cascade {

namespace {

constexpr std::uint8_t kMissingBin = 255;

struct BinnedData {
  std::vector<std::vector<double>> edges;                 // per feature cut points
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> codes;  // n x d
};

std::uint8_t bin_value(const std::vector<double>& edges, double x) {
  if (std::isnan(x)) return kMissingBin;
  const auto it = std::lower_bound(edges.begin(), edges.end(), x);
  return static_cast<std::uint8_t>(it - edges.begin());
}

BinnedData bin_features(const Eigen::MatrixXd& X, int n_bins) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  BinnedData binned;
  binned.edges.resize(static_cast<std::size_t>(d));
  binned.codes.resize(n, d);
  std::vector<double> values;
  for (Eigen::Index f = 0; f < d; ++f) {
    values.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isnan(X(i, f))) values.push_back(X(i, f));
    }
    std::sort(values.begin(), values.end());
    auto& edges = binned.edges[static_cast<std::size_t>(f)];
    if (!values.empty()) {
      for (int b = 1; b < n_bins; ++b) {
        const auto idx = static_cast<std::size_t>(
            static_cast<double>(b) * static_cast<double>(values.size()) / n_bins);
        const double edge = values[std::min(idx, values.size() - 1)];
        if (edges.empty() || edge > edges.back()) edges.push_back(edge);
      }
      // an edge at the maximum cannot separate anything
      if (!edges.empty() && edges.back() >= values.back()) edges.pop_back();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      binned.codes(i, f) = bin_value(edges, X(i, f));
    }
  }
  return binned;
}

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  int threshold_bin = -1;
  bool missing_left = false;
};

}  // namespace

void Gbdt::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbdtConfig& config,
               const Eigen::MatrixXd* eval_X,
               const std::function<void(int, const Eigen::VectorXd&)>& eval_callback) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n == 0) {
    fail(ErrorCode::EmptyTrainingSet, "gbdt: empty training set");
  }
  if (y.size() != n) {
    fail(ErrorCode::ShapeMismatch, "gbdt: label count mismatch");
  }
  config_ = config;
  trees_.clear();

  if (config_.regression) {
    base_ = y.mean();
  } else {
    const double p = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    base_ = std::log(p / (1.0 - p));
  }

  const BinnedData binned = bin_features(X, config_.n_bins);
  Eigen::VectorXd margins = Eigen::VectorXd::Constant(n, base_);
  Eigen::VectorXd eval_margins;
  if (eval_X) eval_margins = Eigen::VectorXd::Constant(eval_X->rows(), base_);

  Eigen::VectorXd grad(n), hess(n);
  std::vector<int> node_of(static_cast<std::size_t>(n));

  for (int iter = 0; iter < config_.n_iterations; ++iter) {
    if (config_.regression) {
      grad = margins - y;
      hess.setOnes();
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p = sigmoid(margins[i]);
        grad[i] = p - y[i];
        hess[i] = std::max(p * (1.0 - p), 1e-12);
      }
    }

    Tree tree;
    tree.nodes.push_back({});
    std::fill(node_of.begin(), node_of.end(), 0);
    std::vector<int> frontier{0};

    for (int depth = 0; depth < config_.max_depth && !frontier.empty(); ++depth) {
      // Histograms per frontier node: (grad, hess, count) per feature per bin.
      const int n_frontier = static_cast<int>(frontier.size());
      std::vector<int> frontier_slot(tree.nodes.size(), -1);
      for (int s = 0; s < n_frontier; ++s) frontier_slot[static_cast<std::size_t>(frontier[s])] = s;

      const int bins = 256;  // fixed stride; bin 255 holds missing
      std::vector<double> hist_g(static_cast<std::size_t>(n_frontier * d * bins), 0.0);
      std::vector<double> hist_h(static_cast<std::size_t>(n_frontier * d * bins), 0.0);
      std::vector<std::uint32_t> hist_c(static_cast<std::size_t>(n_frontier * d * bins), 0);

      for (Eigen::Index i = 0; i < n; ++i) {
        const int node = node_of[static_cast<std::size_t>(i)];
        const int slot = frontier_slot[static_cast<std::size_t>(node)];
        if (slot < 0) continue;
        for (Eigen::Index f = 0; f < d; ++f) {
          const std::size_t base = (static_cast<std::size_t>(slot) * static_cast<std::size_t>(d) +
                                    static_cast<std::size_t>(f)) *
                                   bins;
          const std::size_t idx = base + binned.codes(i, f);
          hist_g[idx] += grad[i];
          hist_h[idx] += hess[i];
          hist_c[idx] += 1;
        }
      }

      std::vector<int> next_frontier;
      for (int s = 0; s < n_frontier; ++s) {
        const int node_id = frontier[static_cast<std::size_t>(s)];
        double total_g = 0.0, total_h = 0.0;
        std::uint32_t total_c = 0;
        {
          const std::size_t base = static_cast<std::size_t>(s) * static_cast<std::size_t>(d) * bins;
          for (int b = 0; b < bins; ++b) {
            total_g += hist_g[base + static_cast<std::size_t>(b)];
            total_h += hist_h[base + static_cast<std::size_t>(b)];
            total_c += hist_c[base + static_cast<std::size_t>(b)];
          }
        }
        const double parent_score = total_g * total_g / (total_h + config_.lambda);

        SplitChoice best;
        for (Eigen::Index f = 0; f < d; ++f) {
          const std::size_t base = (static_cast<std::size_t>(s) * static_cast<std::size_t>(d) +
                                    static_cast<std::size_t>(f)) *
                                   bins;
          const int n_edges = static_cast<int>(binned.edges[static_cast<std::size_t>(f)].size());
          if (n_edges == 0) continue;
          const double miss_g = hist_g[base + kMissingBin];
          const double miss_h = hist_h[base + kMissingBin];
          const std::uint32_t miss_c = hist_c[base + kMissingBin];

          double left_g = 0.0, left_h = 0.0;
          std::uint32_t left_c = 0;
          for (int b = 0; b < n_edges; ++b) {
            left_g += hist_g[base + static_cast<std::size_t>(b)];
            left_h += hist_h[base + static_cast<std::size_t>(b)];
            left_c += hist_c[base + static_cast<std::size_t>(b)];
            for (const bool missing_left : {true, false}) {
              const double gl = left_g + (missing_left ? miss_g : 0.0);
              const double hl = left_h + (missing_left ? miss_h : 0.0);
              const std::uint32_t cl = left_c + (missing_left ? miss_c : 0);
              const double gr = total_g - gl;
              const double hr = total_h - hl;
              const std::uint32_t cr = total_c - cl;
              if (cl < static_cast<std::uint32_t>(config_.min_leaf) ||
                  cr < static_cast<std::uint32_t>(config_.min_leaf)) {
                continue;
              }
              const double gain = gl * gl / (hl + config_.lambda) +
                                  gr * gr / (hr + config_.lambda) - parent_score;
              if (gain > best.gain + 1e-12) {
                best = {gain, static_cast<int>(f), b, missing_left};
              }
            }
          }
        }

        if (best.feature < 0) {
          tree.nodes[static_cast<std::size_t>(node_id)].value =
              -config_.learning_rate * total_g / (total_h + config_.lambda);
          continue;
        }
        Node& node = tree.nodes[static_cast<std::size_t>(node_id)];
        node.feature = best.feature;
        node.threshold =
            binned.edges[static_cast<std::size_t>(best.feature)][static_cast<std::size_t>(best.threshold_bin)];
        node.missing_left = best.missing_left;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        next_frontier.push_back(node.left);
        next_frontier.push_back(node.right);
      }

      // Re-route rows through the fresh splits.
      for (Eigen::Index i = 0; i < n; ++i) {
        int node_id = node_of[static_cast<std::size_t>(i)];
        const Node& node = tree.nodes[static_cast<std::size_t>(node_id)];
        if (node.feature < 0) continue;
        const std::uint8_t code = binned.codes(i, node.feature);
        bool go_left;
        if (code == kMissingBin) {
          go_left = node.missing_left;
        } else {
          go_left = X(i, node.feature) <= node.threshold;
        }
        node_of[static_cast<std::size_t>(i)] = go_left ? node.left : node.right;
      }
      frontier = std::move(next_frontier);
    }

    // Values for any nodes still unsplit at the depth limit.
    if (!frontier.empty()) {
      std::vector<double> leaf_g(tree.nodes.size(), 0.0), leaf_h(tree.nodes.size(), 0.0);
      for (Eigen::Index i = 0; i < n; ++i) {
        leaf_g[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])] += grad[i];
        leaf_h[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])] += hess[i];
      }
      for (const int node_id : frontier) {
        tree.nodes[static_cast<std::size_t>(node_id)].value =
            -config_.learning_rate * leaf_g[static_cast<std::size_t>(node_id)] /
            (leaf_h[static_cast<std::size_t>(node_id)] + config_.lambda);
      }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      margins[i] += tree.nodes[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])].value;
    }
    if (eval_X) {
      for (Eigen::Index i = 0; i < eval_X->rows(); ++i) {
        eval_margins[i] += predict_tree(tree, eval_X->row(i));
      }
    }
    trees_.push_back(std::move(tree));
    if (eval_callback && eval_X) eval_callback(iter, eval_margins);
  }
}

double Gbdt::predict_tree(const Tree& tree, const Eigen::VectorXd& row) const {
  int node_id = 0;
  for (;;) {
    const Node& node = tree.nodes[static_cast<std::size_t>(node_id)];
    if (node.feature < 0) return node.value;
    const double x = row[node.feature];
    if (std::isnan(x)) {
      node_id = node.missing_left ? node.left : node.right;
    } else {
      node_id = x <= node.threshold ? node.left : node.right;
    }
  }
}

Eigen::VectorXd Gbdt::predict_margin(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_);
  for (const auto& tree : trees_) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out[i] += predict_tree(tree, X.row(i));
    }
  }
  return out;
}

Eigen::VectorXd Gbdt::predict_proba(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd margins = predict_margin(X);
  for (Eigen::Index i = 0; i < margins.size(); ++i) margins[i] = sigmoid(margins[i]);
  return margins;
}

}  // namespace cascade
