// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cascade/adam.hpp"
#include "cascade/mlp.hpp"
#include "cascade/rng.hpp"
#include "cascade/time_embed.hpp"

namespace cascade {

struct LowResConfig {
  int embed_dim = 16;  // embedding width per column
  int time_dim = 16;
  std::vector<int> hidden = {256, 256};
  double sigma_min = 0.02;
  double sigma_max = 10.0;
};

// Generative model over the joint categorical low-resolution row. Categories
// live as unit-norm embeddings; training adds Gaussian noise at a geometric
// schedule and regresses per-column class logits (cross-entropy); sampling
// flows embedding-space states toward the probability-weighted embedding
// mean and assigns classes at t = 1 - h.
class LowResModel {
 public:
  LowResModel() = default;
  LowResModel(std::vector<int> cardinalities, LowResConfig config, Rng& rng);

  double sigma(double t) const;

  int n_columns() const { return static_cast<int>(cardinalities_.size()); }
  const std::vector<int>& cardinalities() const { return cardinalities_; }
  const LowResConfig& config() const { return config_; }

  struct Gradients {
    std::vector<Eigen::MatrixXd> embeddings;
    Mlp trunk;
  };
  Gradients zero_gradients() const;

  // Mean per-column cross-entropy on noised embeddings. t: one time per row;
  // noise: batch x (n_columns * embed_dim) standard normal. Callers that
  // train draw (t, noise) from their rng; tests pass fixed values.
  double loss(const Eigen::MatrixXi& batch, const Eigen::VectorXd& t,
              const Eigen::MatrixXd& noise, Gradients* grads = nullptr) const;

  // One optimizer step plus re-normalization of the embedding rows.
  void apply_gradients(AdamOptimizer& opt, const Gradients& grads);

  // Euler sampling over a uniform t-grid; deterministic for a fixed seed and
  // independent of internal batch partitioning.
  Eigen::MatrixXi sample(Eigen::Index n, int steps, std::uint64_t seed) const;

  // Per-column class probabilities for an embedding-space state; exposed for
  // tests and reused by sample().
  Eigen::MatrixXd predict_probabilities(const Eigen::MatrixXd& state, double t) const;

  std::vector<Eigen::MatrixXd>& embeddings() { return embeddings_; }
  const std::vector<Eigen::MatrixXd>& embeddings() const { return embeddings_; }
  Mlp& trunk() { return trunk_; }
  const Mlp& trunk() const { return trunk_; }

  void renormalize_embeddings();

 private:
  int state_width() const { return n_columns() * config_.embed_dim; }
  int logits_width() const;
  Eigen::MatrixXd build_input(const Eigen::MatrixXd& state, const Eigen::VectorXd& t) const;

  std::vector<int> cardinalities_;
  LowResConfig config_;
  std::vector<Eigen::MatrixXd> embeddings_;  // per column: cardinality x embed_dim
  Mlp trunk_;
  TimeEmbedding time_embed_{2};
};

}  // namespace cascade
