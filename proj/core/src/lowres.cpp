// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/lowres.hpp"

#include <cassert>
#include <cmath>

#include "cascade/error.hpp"

namespace cascade {

namespace {
constexpr Eigen::Index kSampleChunk = 8192;
}

LowResModel::LowResModel(std::vector<int> cardinalities, LowResConfig config, Rng& rng)
    : cardinalities_(std::move(cardinalities)),
      config_(std::move(config)),
      time_embed_(config_.time_dim) {
  if (cardinalities_.empty()) {
    fail(ErrorCode::ShapeMismatch, "lowres model needs at least one column");
  }
  embeddings_.reserve(cardinalities_.size());
  for (const int c : cardinalities_) {
    Eigen::MatrixXd table(c, config_.embed_dim);
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      for (Eigen::Index j = 0; j < table.cols(); ++j) {
        table(r, j) = rng.normal();
      }
      table.row(r).normalize();
    }
    embeddings_.push_back(std::move(table));
  }
  std::vector<int> widths;
  widths.push_back(state_width() + config_.time_dim);
  for (const int h : config_.hidden) widths.push_back(h);
  widths.push_back(logits_width());
  trunk_ = Mlp(widths, rng);
}

double LowResModel::sigma(double t) const {
  return config_.sigma_max * std::exp(t * std::log(config_.sigma_min / config_.sigma_max));
}

int LowResModel::logits_width() const {
  int total = 0;
  for (const int c : cardinalities_) total += c;
  return total;
}

LowResModel::Gradients LowResModel::zero_gradients() const {
  Gradients g;
  g.embeddings.reserve(embeddings_.size());
  for (const auto& table : embeddings_) {
    g.embeddings.push_back(Eigen::MatrixXd::Zero(table.rows(), table.cols()));
  }
  g.trunk = trunk_.zeros_like();
  return g;
}

Eigen::MatrixXd LowResModel::build_input(const Eigen::MatrixXd& state,
                                         const Eigen::VectorXd& t) const {
  Eigen::MatrixXd input(state.rows(), state_width() + config_.time_dim);
  input.leftCols(state_width()) = state;
  input.rightCols(config_.time_dim) = time_embed_.embed(t);
  return input;
}

double LowResModel::loss(const Eigen::MatrixXi& batch, const Eigen::VectorXd& t,
                         const Eigen::MatrixXd& noise, Gradients* grads) const {
  const Eigen::Index b = batch.rows();
  const int k = n_columns();
  const int d = config_.embed_dim;
  if (batch.cols() != k || t.size() != b || noise.rows() != b ||
      noise.cols() != state_width()) {
    fail(ErrorCode::ShapeMismatch, "lowres loss: shape mismatch");
  }

  // Noised clean embeddings, x_t = e(c) + sigma(t) * eps.
  Eigen::MatrixXd state(b, state_width());
  for (Eigen::Index i = 0; i < b; ++i) {
    const double s = sigma(t[i]);
    for (int j = 0; j < k; ++j) {
      state.block(i, j * d, 1, d) =
          embeddings_[static_cast<std::size_t>(j)].row(batch(i, j)) +
          s * noise.block(i, j * d, 1, d);
    }
  }

  Mlp::Cache cache;
  const Eigen::MatrixXd input = build_input(state, t);
  const Eigen::MatrixXd logits = trunk_.forward(input, grads ? &cache : nullptr);

  const double denom = static_cast<double>(b) * static_cast<double>(k);
  double total = 0.0;
  Eigen::MatrixXd dlogits;
  if (grads) dlogits.setZero(b, logits.cols());

  for (Eigen::Index i = 0; i < b; ++i) {
    int offset = 0;
    for (int j = 0; j < k; ++j) {
      const int c = cardinalities_[static_cast<std::size_t>(j)];
      const auto row = logits.row(i).segment(offset, c);
      const double max_logit = row.maxCoeff();
      const double lse = max_logit + std::log((row.array() - max_logit).exp().sum());
      total += lse - row[batch(i, j)];
      if (grads) {
        for (int c_idx = 0; c_idx < c; ++c_idx) {
          const double p = std::exp(row[c_idx] - lse);
          dlogits(i, offset + c_idx) = (p - (c_idx == batch(i, j) ? 1.0 : 0.0)) / denom;
        }
      }
      offset += c;
    }
  }

  if (grads) {
    const Eigen::MatrixXd dinput = trunk_.backward(cache, dlogits, grads->trunk);
    // The clean-embedding term is the only parameter path into the input.
    for (Eigen::Index i = 0; i < b; ++i) {
      for (int j = 0; j < k; ++j) {
        grads->embeddings[static_cast<std::size_t>(j)].row(batch(i, j)) +=
            dinput.block(i, j * d, 1, d);
      }
    }
  }
  return total / denom;
}

void LowResModel::apply_gradients(AdamOptimizer& opt, const Gradients& grads) {
  std::vector<ParamRef> params;
  for (std::size_t j = 0; j < embeddings_.size(); ++j) {
    append_matrix_params(embeddings_[j], grads.embeddings[j], params);
  }
  append_mlp_params(trunk_, grads.trunk, params);
  opt.step(params);
  renormalize_embeddings();
}

void LowResModel::renormalize_embeddings() {
  for (auto& table : embeddings_) {
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      const double norm = table.row(r).norm();
      if (norm > 0.0) table.row(r) /= norm;
    }
  }
}

Eigen::MatrixXd LowResModel::predict_probabilities(const Eigen::MatrixXd& state,
                                                   double t) const {
  const Eigen::VectorXd ts = Eigen::VectorXd::Constant(state.rows(), t);
  const Eigen::MatrixXd logits = trunk_.forward(build_input(state, ts));
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int offset = 0;
    for (const int c : cardinalities_) {
      const auto row = logits.row(i).segment(offset, c);
      const double max_logit = row.maxCoeff();
      Eigen::VectorXd p = (row.transpose().array() - max_logit).exp();
      p /= p.sum();
      assert(std::abs(p.sum() - 1.0) < 1e-6);
      probs.row(i).segment(offset, c) = p.transpose();
      offset += c;
    }
  }
  return probs;
}

Eigen::MatrixXi LowResModel::sample(Eigen::Index n, int steps, std::uint64_t seed) const {
  if (steps < 1) {
    fail(ErrorCode::ShapeMismatch, "lowres sample: steps must be >= 1");
  }
  const int k = n_columns();
  const int d = config_.embed_dim;
  Eigen::MatrixXi out(n, k);
  if (n == 0) return out;

  // Snapshot of the unit-norm embedding tables, fixed for the whole run.
  std::vector<Eigen::MatrixXd> cache = embeddings_;
  for (auto& table : cache) {
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      const double norm = table.row(r).norm();
      if (norm > 0.0) table.row(r) /= norm;
    }
  }

  const double h = 1.0 / static_cast<double>(steps);
  // Probability-flow contraction rate of the geometric noise schedule.
  const double kappa = std::log(config_.sigma_max / config_.sigma_min);
  const Rng base(seed);

  for (Eigen::Index chunk_start = 0; chunk_start < n; chunk_start += kSampleChunk) {
    const Eigen::Index chunk = std::min(kSampleChunk, n - chunk_start);
    Eigen::MatrixXd state(chunk, state_width());
    for (Eigen::Index i = 0; i < chunk; ++i) {
      Rng row_rng = base.fork(static_cast<std::uint64_t>(chunk_start + i));
      for (int c = 0; c < state_width(); ++c) {
        state(i, c) = sigma(0.0) * row_rng.normal();
      }
    }

    for (int step = 0; step < steps; ++step) {
      const double t = static_cast<double>(step) * h;
      const Eigen::MatrixXd probs = predict_probabilities(state, t);
      for (int j = 0; j < k; ++j) {
        int offset = 0;
        for (int jj = 0; jj < j; ++jj) offset += cardinalities_[static_cast<std::size_t>(jj)];
        const int c = cardinalities_[static_cast<std::size_t>(j)];
        // mu = sum_c Pr(c) * embedding(c); a convex combination of unit rows.
        const Eigen::MatrixXd mu =
            probs.middleCols(offset, c) * cache[static_cast<std::size_t>(j)];
        state.middleCols(j * d, d) += h * kappa * (mu - state.middleCols(j * d, d));
      }
    }

    // Final class assignment at t = 1 - h.
    const Eigen::MatrixXd probs = predict_probabilities(state, 1.0 - h);
    for (Eigen::Index i = 0; i < chunk; ++i) {
      int offset = 0;
      for (int j = 0; j < k; ++j) {
        const int c = cardinalities_[static_cast<std::size_t>(j)];
        Eigen::Index best = 0;
        probs.row(i).segment(offset, c).maxCoeff(&best);
        out(chunk_start + i, j) = static_cast<int>(best);
        offset += c;
      }
    }
  }
  return out;
}

}  // namespace cascade
