// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cascade/adam.hpp"
#include "cascade/dataset.hpp"
#include "cascade/encoder.hpp"
#include "cascade/mlp.hpp"
#include "cascade/rng.hpp"
#include "cascade/schedule.hpp"
#include "cascade/time_embed.hpp"

namespace cascade {

struct HighResConfig {
  int cond_dim = 64;  // conditioning embedding width, shared by both trunks
  int time_dim = 32;
  std::vector<int> field_hidden = {256, 256, 256};
  std::vector<int> schedule_hidden = {64};
  double d_floor = 1e-3;  // floor on the quintic's d head
};

// Source-distribution parameters per batch coordinate, plus the exclusion
// mask (missing or special category). Masked coordinates never enter the
// loss or the ODE; their x values are pinned to 0.
struct SourceBatch {
  Eigen::MatrixXd mu;     // batch x K_num
  Eigen::MatrixXd sigma;  // batch x K_num
  MaskMatrix mask;        // batch x K_num, 1 = excluded
};

// Looks up the coupled source parameters for a batch of z rows. Special
// categories (missing / inflated) get mu = sigma = 0 and mask = 1.
SourceBatch coupled_source_params(const EncoderSet& encoders, const Eigen::MatrixXi& z);

// Draws x_0 = mu(z) + sigma(z) * eps elementwise; masked coordinates are 0.
Eigen::MatrixXd sample_coupled_source(const SourceBatch& src, const Eigen::MatrixXd& eps);

// Guided conditional probability path point,
//   x_t = gamma * x1 + (1 - gamma) * (mu(z) + sigma(z) * eps),
// with masked coordinates pinned to 0 in both x0 and x_t.
struct PathSample {
  Eigen::MatrixXd x0;
  Eigen::MatrixXd x_t;
};
PathSample make_path_sample(const SourceBatch& src, const Eigen::MatrixXd& x1,
                            const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& eps);

// Guided conditional flow matching model for the numerical features:
// learnable per-feature quintic time schedules conditioned on the
// low-resolution row, a vector-field trunk u = gamma_dot * f(x_t, x_low, t),
// and the data-dependent coupling as source distribution.
class HighResModel {
 public:
  HighResModel() = default;
  HighResModel(std::vector<int> lowres_cardinalities, int k_num, HighResConfig config,
               Rng& rng);

  int k_num() const { return k_num_; }
  int n_lowres_columns() const { return static_cast<int>(cond_embeddings_.size()); }
  const HighResConfig& config() const { return config_; }

  struct Gradients {
    std::vector<Eigen::MatrixXd> cond_embeddings;
    Mlp schedule_trunk;
    Mlp field_trunk;
  };
  Gradients zero_gradients() const;

  // Conditioning embedding: sum of per-column embedding rows.
  Eigen::MatrixXd conditioning(const Eigen::MatrixXi& x_low) const;

  // Per-feature quintic schedules for each row of x_low.
  std::vector<std::vector<QuinticSchedule>> schedules(const Eigen::MatrixXi& x_low) const;

  // gamma / gamma_dot per (row, feature) at a common time t.
  void schedule_at(const Eigen::MatrixXi& x_low, double t, Eigen::MatrixXd* gamma,
                   Eigen::MatrixXd* gamma_dot) const;

  // Conditional flow-matching loss, mean over unmasked coordinates of
  // (gamma_dot * f - gamma_dot * (x1 - x0))^2, fully differentiated through
  // the schedule (both gamma_dot and gamma inside x_t). An all-masked batch
  // yields loss 0 with zero gradients.
  double cfm_loss(const Eigen::MatrixXd& x1, const Eigen::MatrixXi& x_low,
                  const SourceBatch& src, const Eigen::VectorXd& t,
                  const Eigen::MatrixXd& eps, Gradients* grads = nullptr) const;

  void apply_gradients(AdamOptimizer& opt, const Gradients& grads);

  // Euler integration of dx = gamma_dot * f dt from a coupled source draw.
  // Deterministic per seed and independent of batch partitioning. Masked
  // coordinates stay 0 pending assembly. Values are on the preprocessed
  // scale.
  Eigen::MatrixXd sample(const Eigen::MatrixXi& x_low, const SourceBatch& src, int steps,
                         std::uint64_t seed) const;

  // Vector field gamma_dot * f at explicit state, used by sample() and tests.
  Eigen::MatrixXd velocity(const Eigen::MatrixXd& x, const Eigen::MatrixXi& x_low,
                           const SourceBatch& src, double t) const;

  std::vector<Eigen::MatrixXd>& cond_embeddings() { return cond_embeddings_; }
  const std::vector<Eigen::MatrixXd>& cond_embeddings() const { return cond_embeddings_; }
  Mlp& schedule_trunk() { return schedule_trunk_; }
  const Mlp& schedule_trunk() const { return schedule_trunk_; }
  Mlp& field_trunk() { return field_trunk_; }
  const Mlp& field_trunk() const { return field_trunk_; }

 private:
  // Raw schedule heads (a, b, d_raw) for a conditioning batch; d = d_floor +
  // softplus(d_raw).
  Eigen::MatrixXd schedule_heads(const Eigen::MatrixXd& cond, Mlp::Cache* cache) const;
  Eigen::MatrixXd field_input(const Eigen::MatrixXd& x_t, const MaskMatrix& mask,
                              const Eigen::MatrixXd& cond, const Eigen::VectorXd& t) const;

  int k_num_ = 0;
  HighResConfig config_;
  std::vector<Eigen::MatrixXd> cond_embeddings_;  // per low-res column
  Mlp schedule_trunk_;  // cond_dim -> ... -> 3 * k_num
  Mlp field_trunk_;     // (k_num + time_dim + cond_dim + k_num) -> ... -> k_num
  TimeEmbedding time_embed_{2};
};

}  // namespace cascade
