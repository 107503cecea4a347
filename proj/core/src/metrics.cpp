// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cascade/error.hpp"
#include "cascade/parallel.hpp"
#include "cascade/rng.hpp"
#include "cascade/stats.hpp"

namespace cascade {

// --- parallel_for -----------------------------------------------------------

std::size_t default_thread_count() {
  if (const char* env = std::getenv("CASCADE_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) return static_cast<std::size_t>(parsed);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads) {
  if (threads == 0) threads = default_thread_count();
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(begin + chunk, n);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& worker : workers) worker.join();
}

// --- primitive statistics ----------------------------------------------------

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    fail(ErrorCode::EmptyAfterMissingDrop, "ks: empty sample");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t ia = 0, ib = 0;
  double sup = 0.0;
  while (ia < sa.size() && ib < sb.size()) {
    const double v = std::min(sa[ia], sb[ib]);
    while (ia < sa.size() && sa[ia] == v) ++ia;
    while (ib < sb.size() && sb[ib] == v) ++ib;
    sup = std::max(sup, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  return sup;
}

double auc_score(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorCode::ShapeMismatch, "auc: scores/labels size mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (const int l : labels) n_pos += l != 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });

  // Average ranks over ties, sum positive-class ranks.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    fail(ErrorCode::ShapeMismatch, "tvd: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double detection_score_from_auc(double auc) {
  return 1.0 - (std::max(0.5, auc) * 2.0 - 1.0);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    fail(ErrorCode::ShapeMismatch, "jsd: size mismatch");
  }
  auto kl_to_mixture = [&](std::span<const double> a) {
    double kl = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > 0.0) {
        const double m = 0.5 * (p[i] + q[i]);
        kl += a[i] * std::log(a[i] / m);
      }
    }
    return kl;
  };
  return 0.5 * kl_to_mixture(p) + 0.5 * kl_to_mixture(q);
}

// --- shared helpers -----------------------------------------------------------

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> nonmissing_values(const Dataset& ds, int num_feature) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(ds.n_rows()));
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    if (!ds.missing_mask(i, num_feature)) out.push_back(ds.num_values(i, num_feature));
  }
  return out;
}

// Category frequencies with width cardinality+1; the last slot collects the
// missing category whether or not this dataset uses it.
std::vector<double> category_frequencies(const Dataset& ds, int cat_feature, int n_labels) {
  std::vector<double> freq(static_cast<std::size_t>(n_labels) + 1, 0.0);
  const double n = static_cast<double>(ds.n_rows());
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    const int code = ds.cat_values(i, cat_feature);
    freq[static_cast<std::size_t>(std::min(code, n_labels))] += 1.0 / n;
  }
  return freq;
}

void require_same_schema(const Dataset& a, const Dataset& b, const char* what) {
  if (!a.schema.compatible_with(b.schema)) {
    fail(ErrorCode::SchemaMismatch, std::string(what) + ": datasets have different schemas");
  }
}

// Feature encoding for the tree learners: numerical columns pass through
// (NaN preserved), low-cardinality categoricals one-hot (missing category
// included), high-cardinality ones frequency-encoded on the fit datasets.
struct LearnerEncoding {
  struct ColumnPlan {
    int schema_col;
    bool categorical;
    bool one_hot;
    int width;
    std::vector<double> frequency;  // per code incl. missing slot
  };
  std::vector<ColumnPlan> plan;
  int width = 0;

  Eigen::MatrixXd encode(const Dataset& ds) const {
    const auto cat_cols = ds.cat_schema_columns();
    const auto num_cols = ds.num_schema_columns();
    std::vector<int> cat_of(ds.schema.columns.size(), -1), num_of(ds.schema.columns.size(), -1);
    for (std::size_t j = 0; j < cat_cols.size(); ++j) cat_of[static_cast<std::size_t>(cat_cols[j])] = static_cast<int>(j);
    for (std::size_t j = 0; j < num_cols.size(); ++j) num_of[static_cast<std::size_t>(num_cols[j])] = static_cast<int>(j);

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(ds.n_rows(), width);
    int col = 0;
    for (const auto& p : plan) {
      if (!p.categorical) {
        const int j = num_of[static_cast<std::size_t>(p.schema_col)];
        for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
          X(i, col) = ds.missing_mask(i, j) ? kNaN : ds.num_values(i, j);
        }
        ++col;
        continue;
      }
      const int j = cat_of[static_cast<std::size_t>(p.schema_col)];
      if (p.one_hot) {
        for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
          const int code = std::min(ds.cat_values(i, j), p.width - 1);
          X(i, col + code) = 1.0;
        }
        col += p.width;
      } else {
        for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
          const int code = std::min<int>(ds.cat_values(i, j),
                                         static_cast<int>(p.frequency.size()) - 1);
          X(i, col) = p.frequency[static_cast<std::size_t>(code)];
        }
        ++col;
      }
    }
    return X;
  }
};

LearnerEncoding make_learner_encoding(const std::vector<const Dataset*>& fit_refs,
                                      int onehot_max_cardinality, int exclude_schema_col) {
  const Dataset& first = *fit_refs.front();
  LearnerEncoding enc;
  const auto cat_cols = first.cat_schema_columns();
  std::vector<int> cat_of(first.schema.columns.size(), -1);
  for (std::size_t j = 0; j < cat_cols.size(); ++j) cat_of[static_cast<std::size_t>(cat_cols[j])] = static_cast<int>(j);

  for (int c = 0; c < static_cast<int>(first.schema.columns.size()); ++c) {
    if (c == exclude_schema_col) continue;
    const Column& column = first.schema.columns[static_cast<std::size_t>(c)];
    LearnerEncoding::ColumnPlan p;
    p.schema_col = c;
    p.categorical = column.kind == ColumnKind::categorical;
    if (!p.categorical) {
      p.one_hot = false;
      p.width = 1;
      enc.width += 1;
      enc.plan.push_back(std::move(p));
      continue;
    }
    const int n_labels = static_cast<int>(column.categories.size());
    p.width = n_labels + 1;  // trailing missing slot
    if (n_labels + 1 < onehot_max_cardinality) {
      p.one_hot = true;
      enc.width += p.width;
    } else {
      p.one_hot = false;
      p.frequency.assign(static_cast<std::size_t>(p.width), 0.0);
      double total = 0.0;
      for (const Dataset* ds : fit_refs) {
        const int j = cat_of[static_cast<std::size_t>(c)];
        for (Eigen::Index i = 0; i < ds->n_rows(); ++i) {
          const int code = std::min(ds->cat_values(i, j), n_labels);
          p.frequency[static_cast<std::size_t>(code)] += 1.0;
          total += 1.0;
        }
      }
      if (total > 0.0) {
        for (double& f : p.frequency) f /= total;
      }
      enc.width += 1;
    }
    enc.plan.push_back(std::move(p));
  }
  return enc;
}

// Lexicographic row order (NaN sorts last, label breaks ties) so that every
// learner-based score is invariant to the input row order.
std::vector<Eigen::Index> canonical_order(const Eigen::MatrixXd& X,
                                          const std::vector<int>* labels = nullptr) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less_value = [](double a, double b) {
    const bool na = std::isnan(a), nb = std::isnan(b);
    if (na || nb) return !na && nb;
    return a < b;
  };
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      const double a = X(x, c), b = X(y, c);
      if (less_value(a, b)) return true;
      if (less_value(b, a)) return false;
    }
    if (labels) return (*labels)[static_cast<std::size_t>(x)] < (*labels)[static_cast<std::size_t>(y)];
    return false;
  });
  return order;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

}  // namespace

// --- shape ---------------------------------------------------------------------

ShapeScores shape_scores(const Dataset& real, const Dataset& synth) {
  require_same_schema(real, synth, "shape_scores");
  ShapeScores out;
  const auto cat_cols = real.cat_schema_columns();
  const auto num_cols = real.num_schema_columns();

  double sum_all = 0.0, sum_cat = 0.0, sum_num = 0.0, sum_wd = 0.0, sum_jsd = 0.0;
  int n_all = 0;

  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    const Column& column = real.schema.columns[static_cast<std::size_t>(cat_cols[j])];
    const int n_labels = static_cast<int>(column.categories.size());
    const auto freq_real = category_frequencies(real, static_cast<int>(j), n_labels);
    const auto freq_synth = category_frequencies(synth, static_cast<int>(j), n_labels);
    const double score = 1.0 - total_variation(freq_real, freq_synth);
    out.per_feature.emplace_back(column.name, score);
    sum_all += score;
    sum_cat += score;
    sum_jsd += js_divergence(freq_real, freq_synth);
    ++n_all;
  }

  for (std::size_t j = 0; j < num_cols.size(); ++j) {
    const Column& column = real.schema.columns[static_cast<std::size_t>(num_cols[j])];
    const auto values_real = nonmissing_values(real, static_cast<int>(j));
    const auto values_synth = nonmissing_values(synth, static_cast<int>(j));
    if (values_real.empty() || values_synth.empty()) {
      fail(ErrorCode::EmptyAfterMissingDrop,
           "feature '" + column.name + "' has no non-missing values");
    }
    const double score = 1.0 - ks_statistic(values_real, values_synth);
    out.per_feature.emplace_back(column.name, score);
    sum_all += score;
    sum_num += score;
    ++n_all;

    // WD on values min-max scaled by the real data range.
    const auto [mn_it, mx_it] = std::minmax_element(values_real.begin(), values_real.end());
    const double denom = std::max(*mx_it - *mn_it, 1e-300);
    auto scale = [&](std::vector<double> v) {
      for (double& x : v) x = (x - *mn_it) / denom;
      return v;
    };
    std::vector<double> sr = scale(values_real);
    std::vector<double> ss = scale(values_synth);
    std::sort(sr.begin(), sr.end());
    std::sort(ss.begin(), ss.end());
    // integral of |F_r - F_s|
    {
      std::vector<double> pooled;
      pooled.reserve(sr.size() + ss.size());
      pooled.insert(pooled.end(), sr.begin(), sr.end());
      pooled.insert(pooled.end(), ss.begin(), ss.end());
      std::sort(pooled.begin(), pooled.end());
      double wd = 0.0;
      std::size_t ir = 0, is = 0;
      for (std::size_t p = 0; p + 1 < pooled.size(); ++p) {
        while (ir < sr.size() && sr[ir] <= pooled[p]) ++ir;
        while (is < ss.size() && ss[is] <= pooled[p]) ++is;
        const double fr = static_cast<double>(ir) / static_cast<double>(sr.size());
        const double fs = static_cast<double>(is) / static_cast<double>(ss.size());
        wd += std::abs(fr - fs) * (pooled[p + 1] - pooled[p]);
      }
      sum_wd += wd;
    }
  }

  out.shape = n_all > 0 ? sum_all / n_all : 0.0;
  if (!cat_cols.empty()) {
    out.shape_cat = sum_cat / static_cast<double>(cat_cols.size());
    out.jsd_cat = sum_jsd / static_cast<double>(cat_cols.size());
  }
  if (!num_cols.empty()) {
    out.shape_num = sum_num / static_cast<double>(num_cols.size());
    out.wd_num = sum_wd / static_cast<double>(num_cols.size());
  }
  return out;
}

// --- trend ---------------------------------------------------------------------

namespace {

struct PairColumn {
  bool categorical;
  int kind_index;  // index within cat_values / num_values
};

// Cell proportions over (levels_a x levels_b); rows with a missing numerical
// member were dropped by the caller.
double contingency_tvd(const std::vector<int>& a, const std::vector<int>& b, int ca, int cb,
                       const std::vector<int>& a2, const std::vector<int>& b2) {
  std::vector<double> p(static_cast<std::size_t>(ca) * static_cast<std::size_t>(cb), 0.0);
  std::vector<double> q(p.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    p[static_cast<std::size_t>(a[i]) * static_cast<std::size_t>(cb) + static_cast<std::size_t>(b[i])] +=
        1.0 / static_cast<double>(a.size());
  }
  for (std::size_t i = 0; i < a2.size(); ++i) {
    q[static_cast<std::size_t>(a2[i]) * static_cast<std::size_t>(cb) + static_cast<std::size_t>(b2[i])] +=
        1.0 / static_cast<double>(a2.size());
  }
  return total_variation(p, q);
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::nullopt;
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TrendScores trend_scores(const Dataset& real, const Dataset& synth) {
  require_same_schema(real, synth, "trend_scores");
  TrendScores out;
  const int n_columns = static_cast<int>(real.schema.columns.size());
  if (n_columns < 2) {
    fail(ErrorCode::SchemaInvalid, "trend requires at least 2 features");
  }

  const auto cat_cols = real.cat_schema_columns();
  const auto num_cols = real.num_schema_columns();
  std::vector<PairColumn> info(static_cast<std::size_t>(n_columns));
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    info[static_cast<std::size_t>(cat_cols[j])] = {true, static_cast<int>(j)};
  }
  for (std::size_t j = 0; j < num_cols.size(); ++j) {
    info[static_cast<std::size_t>(num_cols[j])] = {false, static_cast<int>(j)};
  }

  // Equal-width discretization grid on the real data range.
  constexpr int kBins = 10;
  auto bin_of = [](double x, double lo, double hi) {
    const int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * kBins));
    return std::clamp(b, 0, kBins - 1);
  };

  double sum = 0.0, sum_mixed = 0.0;
  int count = 0, count_mixed = 0;

  for (int ci = 0; ci < n_columns; ++ci) {
    for (int cj = ci + 1; cj < n_columns; ++cj) {
      const auto& a = info[static_cast<std::size_t>(ci)];
      const auto& b = info[static_cast<std::size_t>(cj)];
      const std::string pair_name =
          real.schema.columns[static_cast<std::size_t>(ci)].name + "|" +
          real.schema.columns[static_cast<std::size_t>(cj)].name;
      std::optional<double> score;

      if (!a.categorical && !b.categorical) {
        auto collect = [&](const Dataset& ds, std::vector<double>& x, std::vector<double>& y) {
          for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
            if (ds.missing_mask(i, a.kind_index) || ds.missing_mask(i, b.kind_index)) continue;
            x.push_back(ds.num_values(i, a.kind_index));
            y.push_back(ds.num_values(i, b.kind_index));
          }
        };
        std::vector<double> rx, ry, sx, sy;
        collect(real, rx, ry);
        collect(synth, sx, sy);
        const auto r = pearson(rx, ry);
        const auto s = pearson(sx, sy);
        if (r && s) score = 1.0 - 0.5 * std::abs(*s - *r);
      } else if (a.categorical && b.categorical) {
        const int ca = real.schema.columns[static_cast<std::size_t>(ci)].categories.size() + 1;
        const int cb = real.schema.columns[static_cast<std::size_t>(cj)].categories.size() + 1;
        auto collect = [&](const Dataset& ds, std::vector<int>& x, std::vector<int>& y) {
          for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
            x.push_back(std::min(ds.cat_values(i, a.kind_index), ca - 1));
            y.push_back(std::min(ds.cat_values(i, b.kind_index), cb - 1));
          }
        };
        std::vector<int> rx, ry, sx, sy;
        collect(real, rx, ry);
        collect(synth, sx, sy);
        if (!rx.empty() && !sx.empty()) {
          score = 1.0 - contingency_tvd(rx, ry, ca, cb, sx, sy);
        }
      } else {
        // Mixed pair: ten equal-width bins on the real range of the
        // numerical member, synth clipped into the edge bins.
        const auto& cat = a.categorical ? a : b;
        const auto& num = a.categorical ? b : a;
        const int cat_schema = a.categorical ? ci : cj;
        const int n_cats =
            static_cast<int>(real.schema.columns[static_cast<std::size_t>(cat_schema)].categories.size()) + 1;
        const auto real_values = nonmissing_values(real, num.kind_index);
        if (!real_values.empty()) {
          const auto [mn_it, mx_it] = std::minmax_element(real_values.begin(), real_values.end());
          if (*mx_it > *mn_it) {
            auto collect = [&](const Dataset& ds, std::vector<int>& x, std::vector<int>& y) {
              for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
                if (ds.missing_mask(i, num.kind_index)) continue;
                x.push_back(std::min(ds.cat_values(i, cat.kind_index), n_cats - 1));
                y.push_back(bin_of(ds.num_values(i, num.kind_index), *mn_it, *mx_it));
              }
            };
            std::vector<int> rx, ry, sx, sy;
            collect(real, rx, ry);
            collect(synth, sx, sy);
            if (!rx.empty() && !sx.empty()) {
              score = 1.0 - contingency_tvd(rx, ry, n_cats, kBins, sx, sy);
            }
          }
        }
      }

      if (!score) {
        out.skipped.push_back(pair_name);
        continue;
      }
      out.pairs.emplace_back(real.schema.columns[static_cast<std::size_t>(ci)].name,
                             real.schema.columns[static_cast<std::size_t>(cj)].name, *score);
      sum += *score;
      ++count;
      if (a.categorical != b.categorical) {
        sum_mixed += *score;
        ++count_mixed;
      }
    }
  }
  if (count > 0) out.trend = sum / count;
  if (count_mixed > 0) out.trend_mixed = sum_mixed / count_mixed;
  return out;
}

// --- detection -------------------------------------------------------------------

double detection_score(const Dataset& real_train, const Dataset& synth, std::uint64_t seed,
                       const LearnerOptions& options) {
  require_same_schema(real_train, synth, "detection_score");
  const LearnerEncoding enc =
      make_learner_encoding({&real_train, &synth}, options.onehot_max_cardinality, -1);
  Eigen::MatrixXd x_real = enc.encode(real_train);
  Eigen::MatrixXd x_synth = enc.encode(synth);

  // Canonical order first, then a seeded match-size subsample, so the score
  // is row-order invariant.
  x_real = take_rows(x_real, canonical_order(x_real));
  x_synth = take_rows(x_synth, canonical_order(x_synth));
  const Eigen::Index m = std::min(x_real.rows(), x_synth.rows());
  if (m == 0) {
    fail(ErrorCode::EmptyTrainingSet, "detection: empty dataset");
  }
  Rng rng(seed);
  auto subsample = [&](const Eigen::MatrixXd& X) {
    const auto perm = rng.permutation(static_cast<std::size_t>(X.rows()));
    std::vector<Eigen::Index> rows(perm.begin(), perm.begin() + m);
    std::sort(rows.begin(), rows.end());
    return take_rows(X, rows);
  };
  const Eigen::MatrixXd a = subsample(x_real);
  const Eigen::MatrixXd b = subsample(x_synth);

  Eigen::MatrixXd X(2 * m, a.cols());
  X.topRows(m) = a;
  X.bottomRows(m) = b;
  std::vector<int> labels(static_cast<std::size_t>(2 * m), 0);
  for (Eigen::Index i = m; i < 2 * m; ++i) labels[static_cast<std::size_t>(i)] = 1;

  const auto order = canonical_order(X, &labels);
  const auto fold_perm = rng.permutation(order.size());

  constexpr int kFolds = 5;
  std::vector<std::vector<double>> fold_auc(kFolds);
  parallel_for(kFolds, [&](std::size_t fold) {
    std::vector<Eigen::Index> train_rows, val_rows;
    std::vector<double> y_train;
    std::vector<int> y_val;
    for (std::size_t p = 0; p < fold_perm.size(); ++p) {
      const Eigen::Index row = order[fold_perm[p]];
      if (p % kFolds == fold) {
        val_rows.push_back(row);
        y_val.push_back(labels[static_cast<std::size_t>(row)]);
      } else {
        train_rows.push_back(row);
        y_train.push_back(static_cast<double>(labels[static_cast<std::size_t>(row)]));
      }
    }
    const Eigen::MatrixXd x_tr = take_rows(X, train_rows);
    const Eigen::MatrixXd x_val = take_rows(X, val_rows);
    const Eigen::Map<const Eigen::VectorXd> y_tr(y_train.data(),
                                                 static_cast<Eigen::Index>(y_train.size()));

    fold_auc[fold].assign(static_cast<std::size_t>(options.gbdt.n_iterations), 0.5);
    Gbdt model;
    model.fit(x_tr, y_tr, options.gbdt, &x_val, [&](int iter, const Eigen::VectorXd& margins) {
      const std::span<const double> scores(margins.data(), static_cast<std::size_t>(margins.size()));
      fold_auc[fold][static_cast<std::size_t>(iter)] = auc_score(scores, y_val);
    });
  });

  double best_mean_auc = 0.0;
  for (int iter = 0; iter < options.gbdt.n_iterations; ++iter) {
    double acc = 0.0;
    for (int fold = 0; fold < kFolds; ++fold) {
      acc += fold_auc[static_cast<std::size_t>(fold)][static_cast<std::size_t>(iter)];
    }
    best_mean_auc = std::max(best_mean_auc, acc / kFolds);
  }
  return detection_score_from_auc(best_mean_auc);
}

// --- machine learning efficiency ---------------------------------------------------

namespace {

struct TargetData {
  bool classification;
  Eigen::VectorXd y;  // 0/1 labels or standardized regression targets
};

TargetData extract_target(const Dataset& ds, int target_col, double standardize_mean,
                          double standardize_std) {
  const Column& column = ds.schema.columns[static_cast<std::size_t>(target_col)];
  TargetData out;
  out.classification = column.kind == ColumnKind::categorical;
  out.y.resize(ds.n_rows());
  if (out.classification) {
    const auto cat_cols = ds.cat_schema_columns();
    int j = -1;
    for (std::size_t k = 0; k < cat_cols.size(); ++k) {
      if (cat_cols[k] == target_col) j = static_cast<int>(k);
    }
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
      out.y[i] = static_cast<double>(ds.cat_values(i, j));
    }
  } else {
    const auto num_cols = ds.num_schema_columns();
    int j = -1;
    for (std::size_t k = 0; k < num_cols.size(); ++k) {
      if (num_cols[k] == target_col) j = static_cast<int>(k);
    }
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
      if (ds.missing_mask(i, j)) {
        fail(ErrorCode::SchemaMismatch, "mle: target has missing values");
      }
      out.y[i] = (ds.num_values(i, j) - standardize_mean) / standardize_std;
    }
  }
  return out;
}

}  // namespace

double mle_score(const Dataset& real_train, const Dataset& real_test, const Dataset& synth,
                 std::uint64_t /*seed*/, const LearnerOptions& options) {
  require_same_schema(real_train, real_test, "mle_score");
  require_same_schema(real_train, synth, "mle_score");
  const int target_col = real_train.schema.target_column();
  if (target_col < 0) {
    fail(ErrorCode::UnsupportedTarget, "mle: schema declares no target");
  }
  const Column& target = real_train.schema.columns[static_cast<std::size_t>(target_col)];
  const bool classification = target.kind == ColumnKind::categorical;
  if (classification && target.categories.size() != 2) {
    fail(ErrorCode::UnsupportedTarget, "mle: classification target must be binary");
  }

  // Regression targets are standardized by the real training moments.
  double t_mean = 0.0, t_std = 1.0;
  if (!classification) {
    const auto num_cols = real_train.num_schema_columns();
    int j = -1;
    for (std::size_t k = 0; k < num_cols.size(); ++k) {
      if (num_cols[k] == target_col) j = static_cast<int>(k);
    }
    const auto values = nonmissing_values(real_train, j);
    t_mean = mean(values);
    t_std = stddev(values);
    if (t_std <= 0.0) {
      fail(ErrorCode::SingleClassTarget, "mle: constant regression target");
    }
  }

  const LearnerEncoding enc = make_learner_encoding({&real_train, &real_test, &synth},
                                                    options.onehot_max_cardinality, target_col);

  auto prepare = [&](const Dataset& ds) {
    Eigen::MatrixXd X = enc.encode(ds);
    TargetData t = extract_target(ds, target_col, t_mean, t_std);
    const auto order = canonical_order(X);
    X = take_rows(X, order);
    Eigen::VectorXd y(t.y.size());
    for (std::size_t i = 0; i < order.size(); ++i) y[static_cast<Eigen::Index>(i)] = t.y[order[i]];
    return std::make_pair(X, y);
  };
  const auto [x_synth, y_synth] = prepare(synth);
  const auto [x_train, y_train] = prepare(real_train);
  const auto [x_test, y_test] = prepare(real_test);

  if (classification) {
    const auto single_class = [](const Eigen::VectorXd& y) {
      return y.minCoeff() == y.maxCoeff();
    };
    if (single_class(y_train) || single_class(y_synth)) {
      fail(ErrorCode::SingleClassTarget, "mle: single-class target");
    }
  }

  GbdtConfig cfg = options.gbdt;
  cfg.regression = !classification;

  auto evaluate = [&](const Eigen::MatrixXd& x_fit, const Eigen::VectorXd& y_fit) {
    Gbdt model;
    model.fit(x_fit, y_fit, cfg);
    const Eigen::VectorXd margins = model.predict_margin(x_test);
    if (classification) {
      std::vector<int> labels(static_cast<std::size_t>(y_test.size()));
      for (Eigen::Index i = 0; i < y_test.size(); ++i) labels[static_cast<std::size_t>(i)] = y_test[i] > 0.5;
      return auc_score(std::span<const double>(margins.data(), static_cast<std::size_t>(margins.size())),
                       labels);
    }
    return std::sqrt((margins - y_test).squaredNorm() / static_cast<double>(y_test.size()));
  };

  const double m_synth = evaluate(x_synth, y_synth);
  const double m_real = evaluate(x_train, y_train);
  return std::abs(m_synth - m_real);
}

// --- distance to closest record -----------------------------------------------------

double dcr_share(const Dataset& real_train, const Dataset& real_test, const Dataset& synth) {
  require_same_schema(real_train, real_test, "dcr_share");
  require_same_schema(real_train, synth, "dcr_share");

  // Min-max scale numericals on the training range, mean-impute missings and
  // add a missing indicator; one-hot categoricals.
  const auto num_cols = real_train.num_schema_columns();
  const auto cat_cols = real_train.cat_schema_columns();
  std::vector<double> lo(num_cols.size()), hi(num_cols.size()), impute(num_cols.size());
  for (std::size_t j = 0; j < num_cols.size(); ++j) {
    const auto values = nonmissing_values(real_train, static_cast<int>(j));
    if (values.empty()) {
      lo[j] = 0.0;
      hi[j] = 1.0;
      impute[j] = 0.0;
    } else {
      const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
      lo[j] = *mn;
      hi[j] = std::max(*mx, *mn + 1e-300);
      impute[j] = mean(values);
    }
  }

  int width = static_cast<int>(num_cols.size()) * 2;
  for (const int c : cat_cols) {
    width += static_cast<int>(real_train.schema.columns[static_cast<std::size_t>(c)].categories.size()) + 1;
  }

  auto embed = [&](const Dataset& ds) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(ds.n_rows(), width);
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
      int col = 0;
      for (std::size_t j = 0; j < num_cols.size(); ++j) {
        const bool missing = ds.missing_mask(i, static_cast<int>(j)) != 0;
        const double raw = missing ? impute[j] : ds.num_values(i, static_cast<int>(j));
        X(i, col++) = (raw - lo[j]) / (hi[j] - lo[j]);
        X(i, col++) = missing ? 1.0 : 0.0;
      }
      for (std::size_t j = 0; j < cat_cols.size(); ++j) {
        const int n_labels = static_cast<int>(
            real_train.schema.columns[static_cast<std::size_t>(cat_cols[j])].categories.size());
        const int code = std::min(ds.cat_values(i, static_cast<int>(j)), n_labels);
        X(i, col + code) = 1.0;
        col += n_labels + 1;
      }
    }
    return X;
  };

  const Eigen::MatrixXd e_train = embed(real_train);
  const Eigen::MatrixXd e_test = embed(real_test);
  const Eigen::MatrixXd e_synth = embed(synth);

  std::vector<double> scores(static_cast<std::size_t>(e_synth.rows()), 0.0);
  parallel_for(static_cast<std::size_t>(e_synth.rows()), [&](std::size_t i) {
    const auto row = e_synth.row(static_cast<Eigen::Index>(i));
    double d_train = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < e_train.rows(); ++r) {
      d_train = std::min(d_train, (e_train.row(r) - row).squaredNorm());
    }
    double d_test = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < e_test.rows(); ++r) {
      d_test = std::min(d_test, (e_test.row(r) - row).squaredNorm());
    }
    scores[i] = d_train < d_test ? 1.0 : (d_train > d_test ? 0.0 : 0.5);
  });
  return mean(scores);
}

// --- membership inference -------------------------------------------------------------

double mia_score(const Dataset& real_train, const Dataset& real_test, const Dataset& synth,
                 std::uint64_t seed, const LearnerOptions& options) {
  require_same_schema(real_train, real_test, "mia_score");
  require_same_schema(real_train, synth, "mia_score");
  if (real_test.n_rows() < 8) {
    fail(ErrorCode::EmptyInput, "mia: test split too small");
  }

  const LearnerEncoding enc = make_learner_encoding({&real_train, &real_test, &synth},
                                                    options.onehot_max_cardinality, -1);
  Eigen::MatrixXd x_train = enc.encode(real_train);
  Eigen::MatrixXd x_test = enc.encode(real_test);
  Eigen::MatrixXd x_synth = enc.encode(synth);
  x_train = take_rows(x_train, canonical_order(x_train));
  x_test = take_rows(x_test, canonical_order(x_test));
  x_synth = take_rows(x_synth, canonical_order(x_synth));

  constexpr int kRepetitions = 5;
  std::vector<double> rep_scores(kRepetitions, 0.0);
  const Rng base(seed);

  parallel_for(kRepetitions, [&](std::size_t rep) {
    Rng rng = base.fork(rep);
    const auto test_perm = rng.permutation(static_cast<std::size_t>(x_test.rows()));
    const std::size_t n_attack = test_perm.size() * 3 / 4;
    std::vector<Eigen::Index> attack_rows(test_perm.begin(),
                                          test_perm.begin() + static_cast<std::ptrdiff_t>(n_attack));
    std::vector<Eigen::Index> holdout_rows(test_perm.begin() + static_cast<std::ptrdiff_t>(n_attack),
                                           test_perm.end());

    const std::size_t n_synth_sub = std::min<std::size_t>(n_attack, static_cast<std::size_t>(x_synth.rows()));
    const auto synth_perm = rng.permutation(static_cast<std::size_t>(x_synth.rows()));
    const std::size_t n_fit = std::min(n_attack, n_synth_sub);

    Eigen::MatrixXd x_fit(static_cast<Eigen::Index>(n_fit * 2), x_test.cols());
    Eigen::VectorXd y_fit(static_cast<Eigen::Index>(n_fit * 2));
    for (std::size_t i = 0; i < n_fit; ++i) {
      x_fit.row(static_cast<Eigen::Index>(i)) = x_test.row(attack_rows[i]);
      y_fit[static_cast<Eigen::Index>(i)] = 0.0;
      x_fit.row(static_cast<Eigen::Index>(n_fit + i)) =
          x_synth.row(static_cast<Eigen::Index>(synth_perm[i]));
      y_fit[static_cast<Eigen::Index>(n_fit + i)] = 1.0;
    }

    Gbdt model;
    model.fit(x_fit, y_fit, options.gbdt);

    // Membership evaluation: held-out test rows are non-members, a matching
    // subsample of training rows are members.
    const std::size_t n_eval = std::min(holdout_rows.size(), static_cast<std::size_t>(x_train.rows()));
    const auto train_perm = rng.permutation(static_cast<std::size_t>(x_train.rows()));
    Eigen::MatrixXd x_eval(static_cast<Eigen::Index>(n_eval * 2), x_test.cols());
    std::vector<int> member(n_eval * 2, 0);
    for (std::size_t i = 0; i < n_eval; ++i) {
      x_eval.row(static_cast<Eigen::Index>(i)) = x_test.row(holdout_rows[i]);
      x_eval.row(static_cast<Eigen::Index>(n_eval + i)) =
          x_train.row(static_cast<Eigen::Index>(train_perm[i]));
      member[n_eval + i] = 1;
    }
    const Eigen::VectorXd margins = model.predict_margin(x_eval);
    const double auc = auc_score(
        std::span<const double>(margins.data(), static_cast<std::size_t>(margins.size())), member);
    rep_scores[rep] = detection_score_from_auc(auc);
  });
  return mean(rep_scores);
}

// --- full report -------------------------------------------------------------------------

MetricReport evaluate_all(const Dataset& real_train, const Dataset& real_test,
                          const Dataset& synth, const MetricsConfig& config) {
  MetricReport report;
  report.shapes = shape_scores(real_train, synth);
  report.trends = trend_scores(real_train, synth);
  if (config.detection) {
    report.detection = detection_score(real_train, synth, config.seed, config.learner);
  }
  if (config.mle && real_train.schema.target_column() >= 0) {
    report.mle = mle_score(real_train, real_test, synth, config.seed, config.learner);
  }
  if (config.dcr) {
    report.dcr_share = dcr_share(real_train, real_test, synth);
  }
  if (config.mia) {
    report.mia = mia_score(real_train, real_test, synth, config.seed, config.learner);
  }
  return report;
}

namespace {
nlohmann::json optional_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}
}  // namespace

nlohmann::json MetricReport::to_json() const {
  nlohmann::json per_feature = nlohmann::json::object();
  for (const auto& [name, score] : shapes.per_feature) per_feature[name] = score;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b, score] : trends.pairs) {
    pairs.push_back({{"a", a}, {"b", b}, {"score", score}});
  }
  return nlohmann::json{
      {"shape", shapes.shape},
      {"shape_cat", optional_json(shapes.shape_cat)},
      {"shape_num", optional_json(shapes.shape_num)},
      {"wd_num", optional_json(shapes.wd_num)},
      {"jsd_cat", optional_json(shapes.jsd_cat)},
      {"trend", optional_json(trends.trend)},
      {"trend_mixed", optional_json(trends.trend_mixed)},
      {"detection", optional_json(detection)},
      {"mle", optional_json(mle)},
      {"dcr_share", optional_json(dcr_share)},
      {"mia", optional_json(mia)},
      {"per_feature_shape", std::move(per_feature)},
      {"pair_trends", std::move(pairs)},
      {"skipped_pairs", trends.skipped},
  };
}

std::string MetricReport::csv_header() const {
  return "shape,shape_cat,shape_num,wd_num,jsd_cat,trend,trend_mixed,detection,mle,"
         "dcr_share,mia";
}

std::string MetricReport::csv_row() const {
  std::ostringstream out;
  auto emit = [&](const std::optional<double>& v, bool first = false) {
    if (!first) out << ',';
    if (v) out << format_double(*v);
  };
  out << format_double(shapes.shape);
  emit(shapes.shape_cat);
  emit(shapes.shape_num);
  emit(shapes.wd_num);
  emit(shapes.jsd_cat);
  emit(trends.trend);
  emit(trends.trend_mixed);
  emit(detection);
  emit(mle);
  emit(dcr_share);
  emit(mia);
  return out.str();
}

}  // namespace cascade
