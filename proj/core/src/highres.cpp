// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/highres.hpp"

#include <cmath>

#include "cascade/error.hpp"
#include "cascade/stats.hpp"

namespace cascade {

namespace {
constexpr Eigen::Index kSampleChunk = 8192;
}

SourceBatch coupled_source_params(const EncoderSet& encoders, const Eigen::MatrixXi& z) {
  const Eigen::Index n = z.rows();
  const int k = encoders.k_num();
  SourceBatch src;
  src.mu = Eigen::MatrixXd::Zero(n, k);
  src.sigma = Eigen::MatrixXd::Zero(n, k);
  src.mask = MaskMatrix::Zero(n, k);
  for (int f = 0; f < k; ++f) {
    const FeatureEncoder& enc = encoders.encoders[static_cast<std::size_t>(f)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const int code = z(i, f);
      if (enc.is_special(code)) {
        src.mask(i, f) = 1;
      } else {
        const auto [mu, sigma] = enc.source_params(code);
        src.mu(i, f) = mu;
        src.sigma(i, f) = sigma;
      }
    }
  }
  return src;
}

Eigen::MatrixXd sample_coupled_source(const SourceBatch& src, const Eigen::MatrixXd& eps) {
  Eigen::MatrixXd x0 = src.mu + src.sigma.cwiseProduct(eps);
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    for (Eigen::Index j = 0; j < x0.cols(); ++j) {
      if (src.mask(i, j)) x0(i, j) = 0.0;
    }
  }
  return x0;
}

PathSample make_path_sample(const SourceBatch& src, const Eigen::MatrixXd& x1,
                            const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& eps) {
  PathSample path;
  path.x0 = sample_coupled_source(src, eps);
  path.x_t.resize(x1.rows(), x1.cols());
  for (Eigen::Index i = 0; i < x1.rows(); ++i) {
    for (Eigen::Index f = 0; f < x1.cols(); ++f) {
      path.x_t(i, f) = src.mask(i, f)
                           ? 0.0
                           : gamma(i, f) * x1(i, f) + (1.0 - gamma(i, f)) * path.x0(i, f);
    }
  }
  return path;
}

HighResModel::HighResModel(std::vector<int> lowres_cardinalities, int k_num,
                           HighResConfig config, Rng& rng)
    : k_num_(k_num), config_(std::move(config)), time_embed_(config_.time_dim) {
  cond_embeddings_.reserve(lowres_cardinalities.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.cond_dim));
  for (const int c : lowres_cardinalities) {
    Eigen::MatrixXd table(c, config_.cond_dim);
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      for (Eigen::Index j = 0; j < table.cols(); ++j) {
        table(r, j) = scale * rng.normal();
      }
    }
    cond_embeddings_.push_back(std::move(table));
  }

  std::vector<int> sched_widths{config_.cond_dim};
  for (const int h : config_.schedule_hidden) sched_widths.push_back(h);
  sched_widths.push_back(3 * k_num_);
  schedule_trunk_ = Mlp(sched_widths, rng);

  std::vector<int> field_widths{k_num_ + config_.time_dim + config_.cond_dim + k_num_};
  for (const int h : config_.field_hidden) field_widths.push_back(h);
  field_widths.push_back(k_num_);
  field_trunk_ = Mlp(field_widths, rng);
}

HighResModel::Gradients HighResModel::zero_gradients() const {
  Gradients g;
  g.cond_embeddings.reserve(cond_embeddings_.size());
  for (const auto& table : cond_embeddings_) {
    g.cond_embeddings.push_back(Eigen::MatrixXd::Zero(table.rows(), table.cols()));
  }
  g.schedule_trunk = schedule_trunk_.zeros_like();
  g.field_trunk = field_trunk_.zeros_like();
  return g;
}

Eigen::MatrixXd HighResModel::conditioning(const Eigen::MatrixXi& x_low) const {
  if (x_low.cols() != n_lowres_columns()) {
    fail(ErrorCode::ShapeMismatch, "highres conditioning: column count mismatch");
  }
  Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(x_low.rows(), config_.cond_dim);
  for (Eigen::Index i = 0; i < x_low.rows(); ++i) {
    for (int j = 0; j < n_lowres_columns(); ++j) {
      cond.row(i) += cond_embeddings_[static_cast<std::size_t>(j)].row(x_low(i, j));
    }
  }
  return cond;
}

Eigen::MatrixXd HighResModel::schedule_heads(const Eigen::MatrixXd& cond,
                                             Mlp::Cache* cache) const {
  return schedule_trunk_.forward(cond, cache);
}

std::vector<std::vector<QuinticSchedule>> HighResModel::schedules(
    const Eigen::MatrixXi& x_low) const {
  const Eigen::MatrixXd heads = schedule_heads(conditioning(x_low), nullptr);
  std::vector<std::vector<QuinticSchedule>> out(static_cast<std::size_t>(heads.rows()));
  for (Eigen::Index i = 0; i < heads.rows(); ++i) {
    out[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(k_num_));
    for (int f = 0; f < k_num_; ++f) {
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)] = {
          heads(i, f), heads(i, k_num_ + f),
          config_.d_floor + softplus(heads(i, 2 * k_num_ + f))};
    }
  }
  return out;
}

void HighResModel::schedule_at(const Eigen::MatrixXi& x_low, double t,
                               Eigen::MatrixXd* gamma, Eigen::MatrixXd* gamma_dot) const {
  const auto scheds = schedules(x_low);
  const Eigen::Index n = x_low.rows();
  if (gamma) gamma->resize(n, k_num_);
  if (gamma_dot) gamma_dot->resize(n, k_num_);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int f = 0; f < k_num_; ++f) {
      const auto value = scheds[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)].evaluate(t);
      if (gamma) (*gamma)(i, f) = value.gamma;
      if (gamma_dot) (*gamma_dot)(i, f) = value.gamma_dot;
    }
  }
}

Eigen::MatrixXd HighResModel::field_input(const Eigen::MatrixXd& x_t, const MaskMatrix& mask,
                                          const Eigen::MatrixXd& cond,
                                          const Eigen::VectorXd& t) const {
  const Eigen::Index b = x_t.rows();
  Eigen::MatrixXd input(b, k_num_ + config_.time_dim + config_.cond_dim + k_num_);
  input.leftCols(k_num_) = x_t;
  input.middleCols(k_num_, config_.time_dim) = time_embed_.embed(t);
  input.middleCols(k_num_ + config_.time_dim, config_.cond_dim) = cond;
  // Mask bits let the network tell "masked" apart from "value 0".
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int f = 0; f < k_num_; ++f) {
      input(i, k_num_ + config_.time_dim + config_.cond_dim + f) = mask(i, f) ? 1.0 : 0.0;
    }
  }
  return input;
}

double HighResModel::cfm_loss(const Eigen::MatrixXd& x1, const Eigen::MatrixXi& x_low,
                              const SourceBatch& src, const Eigen::VectorXd& t,
                              const Eigen::MatrixXd& eps, Gradients* grads) const {
  const Eigen::Index b = x1.rows();
  if (x1.cols() != k_num_ || x_low.rows() != b || t.size() != b || eps.rows() != b ||
      eps.cols() != k_num_) {
    fail(ErrorCode::ShapeMismatch, "cfm_loss: shape mismatch");
  }

  std::size_t unmasked = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int f = 0; f < k_num_; ++f) {
      if (!src.mask(i, f)) ++unmasked;
    }
  }
  if (unmasked == 0) return 0.0;
  const double denom = static_cast<double>(unmasked);

  const Eigen::MatrixXd cond = conditioning(x_low);
  Mlp::Cache sched_cache;
  const Eigen::MatrixXd heads = schedule_heads(cond, grads ? &sched_cache : nullptr);

  Eigen::MatrixXd gamma(b, k_num_), gamma_dot(b, k_num_);
  std::vector<QuinticSchedule> row_sched(static_cast<std::size_t>(b) *
                                         static_cast<std::size_t>(k_num_));
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int f = 0; f < k_num_; ++f) {
      QuinticSchedule& s = row_sched[static_cast<std::size_t>(i * k_num_ + f)];
      s = {heads(i, f), heads(i, k_num_ + f),
           config_.d_floor + softplus(heads(i, 2 * k_num_ + f))};
      const auto value = s.evaluate(t[i]);
      gamma(i, f) = value.gamma;
      gamma_dot(i, f) = value.gamma_dot;
    }
  }

  const PathSample path = make_path_sample(src, x1, gamma, eps);
  const Eigen::MatrixXd& x0 = path.x0;
  const Eigen::MatrixXd& x_t = path.x_t;
  Eigen::MatrixXd target(b, k_num_);  // x1 - x0
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int f = 0; f < k_num_; ++f) {
      target(i, f) = src.mask(i, f) ? 0.0 : x1(i, f) - x0(i, f);
    }
  }

  Mlp::Cache field_cache;
  const Eigen::MatrixXd input = field_input(x_t, src.mask, cond, t);
  const Eigen::MatrixXd f_out = field_trunk_.forward(input, grads ? &field_cache : nullptr);

  double loss = 0.0;
  Eigen::MatrixXd residual = Eigen::MatrixXd::Zero(b, k_num_);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int f = 0; f < k_num_; ++f) {
      if (src.mask(i, f)) continue;
      const double r = gamma_dot(i, f) * (f_out(i, f) - target(i, f));
      residual(i, f) = r;
      loss += r * r;
    }
  }
  loss /= denom;
  if (!grads) return loss;

  // d loss / d residual
  const Eigen::MatrixXd dres = residual * (2.0 / denom);
  const Eigen::MatrixXd df = dres.cwiseProduct(gamma_dot);
  Eigen::MatrixXd dgdot(b, k_num_);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int f = 0; f < k_num_; ++f) {
      dgdot(i, f) = src.mask(i, f) ? 0.0 : dres(i, f) * (f_out(i, f) - target(i, f));
    }
  }

  Eigen::MatrixXd dinput = field_trunk_.backward(field_cache, df, grads->field_trunk);
  Eigen::MatrixXd dcond = dinput.middleCols(k_num_ + config_.time_dim, config_.cond_dim);

  // x_t = gamma x1 + (1 - gamma) x0; gradient into gamma (masked inputs were
  // pinned to 0, so their path is cut).
  Eigen::MatrixXd dheads = Eigen::MatrixXd::Zero(b, 3 * k_num_);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int f = 0; f < k_num_; ++f) {
      if (src.mask(i, f)) continue;
      const double dgamma = dinput(i, f) * (x1(i, f) - x0(i, f));
      const QuinticSchedule& s = row_sched[static_cast<std::size_t>(i * k_num_ + f)];
      const auto p = s.partials(t[i]);
      double da = dgamma * p.gamma_a + dgdot(i, f) * p.gdot_a;
      double db = dgamma * p.gamma_b + dgdot(i, f) * p.gdot_b;
      double dd = dgamma * p.gamma_d + dgdot(i, f) * p.gdot_d;
      dheads(i, f) += da;
      dheads(i, k_num_ + f) += db;
      dheads(i, 2 * k_num_ + f) += dd * sigmoid(heads(i, 2 * k_num_ + f));
    }
  }
  dcond += schedule_trunk_.backward(sched_cache, dheads, grads->schedule_trunk);

  for (Eigen::Index i = 0; i < b; ++i) {
    for (int j = 0; j < n_lowres_columns(); ++j) {
      grads->cond_embeddings[static_cast<std::size_t>(j)].row(x_low(i, j)) += dcond.row(i);
    }
  }
  return loss;
}

void HighResModel::apply_gradients(AdamOptimizer& opt, const Gradients& grads) {
  std::vector<ParamRef> params;
  for (std::size_t j = 0; j < cond_embeddings_.size(); ++j) {
    append_matrix_params(cond_embeddings_[j], grads.cond_embeddings[j], params);
  }
  append_mlp_params(schedule_trunk_, grads.schedule_trunk, params);
  append_mlp_params(field_trunk_, grads.field_trunk, params);
  opt.step(params);
}

Eigen::MatrixXd HighResModel::velocity(const Eigen::MatrixXd& x, const Eigen::MatrixXi& x_low,
                                       const SourceBatch& src, double t) const {
  Eigen::MatrixXd gamma_dot;
  schedule_at(x_low, t, nullptr, &gamma_dot);
  const Eigen::MatrixXd cond = conditioning(x_low);
  const Eigen::VectorXd ts = Eigen::VectorXd::Constant(x.rows(), t);
  const Eigen::MatrixXd f_out = field_trunk_.forward(field_input(x, src.mask, cond, ts));
  Eigen::MatrixXd v = gamma_dot.cwiseProduct(f_out);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (int f = 0; f < k_num_; ++f) {
      if (src.mask(i, f)) v(i, f) = 0.0;
    }
  }
  return v;
}

Eigen::MatrixXd HighResModel::sample(const Eigen::MatrixXi& x_low, const SourceBatch& src,
                                     int steps, std::uint64_t seed) const {
  if (steps < 1) {
    fail(ErrorCode::ShapeMismatch, "highres sample: steps must be >= 1");
  }
  const Eigen::Index n = x_low.rows();
  Eigen::MatrixXd out(n, k_num_);
  const double h = 1.0 / static_cast<double>(steps);
  const Rng base(seed);

  for (Eigen::Index chunk_start = 0; chunk_start < n; chunk_start += kSampleChunk) {
    const Eigen::Index chunk = std::min(kSampleChunk, n - chunk_start);
    const Eigen::MatrixXi x_low_chunk = x_low.middleRows(chunk_start, chunk);
    SourceBatch src_chunk;
    src_chunk.mu = src.mu.middleRows(chunk_start, chunk);
    src_chunk.sigma = src.sigma.middleRows(chunk_start, chunk);
    src_chunk.mask = src.mask.middleRows(chunk_start, chunk);

    Eigen::MatrixXd eps(chunk, k_num_);
    for (Eigen::Index i = 0; i < chunk; ++i) {
      Rng row_rng = base.fork(static_cast<std::uint64_t>(chunk_start + i));
      for (int f = 0; f < k_num_; ++f) eps(i, f) = row_rng.normal();
    }
    Eigen::MatrixXd x = sample_coupled_source(src_chunk, eps);

    const Eigen::MatrixXd cond = conditioning(x_low_chunk);
    const auto scheds = schedules(x_low_chunk);

    for (int step = 0; step < steps; ++step) {
      const double t = static_cast<double>(step) * h;
      const Eigen::VectorXd ts = Eigen::VectorXd::Constant(chunk, t);
      const Eigen::MatrixXd f_out =
          field_trunk_.forward(field_input(x, src_chunk.mask, cond, ts));
      for (Eigen::Index i = 0; i < chunk; ++i) {
        for (int f = 0; f < k_num_; ++f) {
          if (src_chunk.mask(i, f)) continue;
          const double gdot =
              scheds[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)].evaluate(t).gamma_dot;
          x(i, f) += h * gdot * f_out(i, f);
        }
      }
    }
    out.middleRows(chunk_start, chunk) = x;
  }
  return out;
}

}  // namespace cascade
