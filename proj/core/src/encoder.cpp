// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "cascade/error.hpp"
#include "cascade/rng.hpp"
#include "cascade/stats.hpp"

namespace cascade {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxSplitCandidates = 255;

struct SortedStats {
  std::vector<double> values;  // sorted
  std::vector<double> sum1;    // prefix sums
  std::vector<double> sum2;

  double mean(std::size_t lo, std::size_t hi) const {
    return (sum1[hi] - sum1[lo]) / static_cast<double>(hi - lo);
  }
  double var(std::size_t lo, std::size_t hi) const {
    const double n = static_cast<double>(hi - lo);
    const double m = mean(lo, hi);
    const double v = (sum2[hi] - sum2[lo]) / n - m * m;
    return v > 0.0 ? v : 0.0;
  }
  double loglik(std::size_t lo, std::size_t hi) const {
    return gaussian_mle_loglik(hi - lo, var(lo, hi));
  }
};

void split_node(const SortedStats& stats, std::size_t lo, std::size_t hi, int depth,
                int max_depth, int min_leaf, std::vector<std::size_t>& boundaries) {
  if (depth >= max_depth) return;

  // Candidate split positions: boundaries between consecutive distinct values
  // that leave both children with at least min_leaf points.
  std::vector<std::size_t> candidates;
  for (std::size_t p = lo + 1; p < hi; ++p) {
    if (stats.values[p - 1] < stats.values[p] &&
        p - lo >= static_cast<std::size_t>(min_leaf) &&
        hi - p >= static_cast<std::size_t>(min_leaf)) {
      candidates.push_back(p);
    }
  }
  if (candidates.empty()) return;
  if (candidates.size() > kMaxSplitCandidates) {
    // Quantile-spaced subsample of the candidate list. Boundaries adjacent
    // to runs of >= min_leaf identical values are always kept: those are the
    // edges of potential point masses (inflated values) and must stay
    // reachable for the leaf to come out pure.
    std::vector<std::size_t> kept;
    kept.reserve(kMaxSplitCandidates);
    const double stride = static_cast<double>(candidates.size() - 1) /
                          static_cast<double>(kMaxSplitCandidates - 1);
    for (int k = 0; k < kMaxSplitCandidates; ++k) {
      const auto idx = static_cast<std::size_t>(std::llround(stride * k));
      kept.push_back(candidates[idx]);
    }
    for (const std::size_t p : candidates) {
      std::size_t run_right = p;
      while (run_right < hi && stats.values[run_right] == stats.values[p]) ++run_right;
      std::size_t run_left = p;
      while (run_left > lo && stats.values[run_left - 1] == stats.values[p - 1]) --run_left;
      if (run_right - p >= static_cast<std::size_t>(min_leaf) ||
          p - run_left >= static_cast<std::size_t>(min_leaf)) {
        kept.push_back(p);
      }
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    candidates = std::move(kept);
  }

  const double parent_ll = stats.loglik(lo, hi);
  double best_gain = 0.0;
  std::size_t best_pos = 0;
  for (const std::size_t p : candidates) {
    const double gain = stats.loglik(lo, p) + stats.loglik(p, hi) - parent_ll;
    if (gain > best_gain) {
      best_gain = gain;
      best_pos = p;
    }
  }
  if (best_pos == 0 || best_gain < 1e-6) return;

  boundaries.push_back(best_pos);
  split_node(stats, lo, best_pos, depth + 1, max_depth, min_leaf, boundaries);
  split_node(stats, best_pos, hi, depth + 1, max_depth, min_leaf, boundaries);
}

double gaussian_log_score(double x, double mu, double sigma) {
  const double s = sigma > 1e-12 ? sigma : 1e-12;
  const double d = (x - mu) / s;
  return -std::log(s) - 0.5 * d * d;
}

}  // namespace

int FeatureEncoder::encode(double x) const {
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (components[k].inflated && x == components[k].inflated_value) {
      return static_cast<int>(k);
    }
  }
  if (kind == Kind::dt) {
    for (std::size_t k = 0; k < components.size(); ++k) {
      if (x >= components[k].lo && x < components[k].hi) return static_cast<int>(k);
    }
    return num_components() - 1;  // x == +inf edge
  }
  // GMM: weighted log-likelihood argmax; zero-variance (inflated) components
  // only match by exact equality above.
  int best = -1;
  double best_score = -kInf;
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (components[k].inflated) continue;
    const double score = std::log(components[k].weight > 0 ? components[k].weight : 1e-300) +
                         gaussian_log_score(x, components[k].mu, components[k].sigma);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(k);
    }
  }
  if (best < 0) best = 0;
  return best;
}

std::pair<double, double> FeatureEncoder::source_params(int z) const {
  if (z < 0 || z >= category_count()) {
    fail(ErrorCode::ShapeMismatch, "source_params: category out of range");
  }
  if (is_special(z)) {
    fail(ErrorCode::SpecialCategoryHasNoSource,
         "missing/inflated categories have no source parameters");
  }
  const auto& c = components[static_cast<std::size_t>(z)];
  return {c.mu, std::max(c.sigma, kSigmaFloor)};
}

FeatureEncoder FeatureEncoder::fit_dt(std::span<const double> values, int max_depth,
                                      int min_leaf) {
  if (values.empty()) {
    fail(ErrorCode::EmptyInput, "fit_dt: no values");
  }
  SortedStats stats;
  stats.values.assign(values.begin(), values.end());
  std::sort(stats.values.begin(), stats.values.end());
  const std::size_t n = stats.values.size();
  stats.sum1.assign(n + 1, 0.0);
  stats.sum2.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    stats.sum1[i + 1] = stats.sum1[i] + stats.values[i];
    stats.sum2[i + 1] = stats.sum2[i] + stats.values[i] * stats.values[i];
  }

  std::vector<std::size_t> boundaries;
  split_node(stats, 0, n, 0, max_depth, std::max(min_leaf, 1), boundaries);
  std::sort(boundaries.begin(), boundaries.end());

  FeatureEncoder enc;
  enc.kind = Kind::dt;
  std::size_t lo = 0;
  for (std::size_t b = 0; b <= boundaries.size(); ++b) {
    const std::size_t hi = b < boundaries.size() ? boundaries[b] : n;
    EncoderComponent comp;
    comp.mu = stats.mean(lo, hi);
    comp.sigma = std::sqrt(stats.var(lo, hi));
    comp.weight = static_cast<double>(hi - lo) / static_cast<double>(n);
    comp.lo = lo == 0 ? -kInf : 0.5 * (stats.values[lo - 1] + stats.values[lo]);
    comp.hi = hi == n ? kInf : 0.5 * (stats.values[hi - 1] + stats.values[hi]);
    enc.components.push_back(comp);
    lo = hi;
  }
  return enc;
}

FeatureEncoder FeatureEncoder::fit_gmm(std::span<const double> values, int max_components,
                                       std::uint64_t seed) {
  if (values.empty()) {
    fail(ErrorCode::EmptyInput, "fit_gmm: no values");
  }
  const std::size_t n = values.size();
  std::vector<double> xs(values.begin(), values.end());

  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const int k_init = std::min<int>(max_components, static_cast<int>(distinct.size()));

  Rng rng(seed);

  // k-means++ seeding over the raw values.
  std::vector<double> centers;
  centers.push_back(xs[rng.below(n)]);
  std::vector<double> min_sq(n);
  while (static_cast<int>(centers.size()) < k_init) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = kInf;
      for (const double c : centers) {
        const double d = (xs[i] - c) * (xs[i] - c);
        if (d < best) best = d;
      }
      min_sq[i] = best;
      total += best;
    }
    if (total <= 0.0) break;
    double target = rng.uniform() * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= min_sq[i];
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(xs[pick]);
  }

  const int k = static_cast<int>(centers.size());
  const double global_var = variance(xs);
  std::vector<double> mu = centers;
  std::vector<double> var(static_cast<std::size_t>(k), std::max(global_var, 1e-6));
  std::vector<double> w(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));

  // EM on the 1-D mixture, log-domain responsibilities, floored variances.
  constexpr int kMaxIters = 200;
  constexpr double kTol = 1e-6;
  constexpr double kVarFloor = 1e-12;
  double prev_mean_ll = -kInf;
  bool converged = false;
  std::vector<double> resp(static_cast<std::size_t>(k));
  std::vector<double> acc_w(static_cast<std::size_t>(k));
  std::vector<double> acc_x(static_cast<std::size_t>(k));
  std::vector<double> acc_x2(static_cast<std::size_t>(k));

  for (int iter = 0; iter < kMaxIters; ++iter) {
    std::fill(acc_w.begin(), acc_w.end(), 0.0);
    std::fill(acc_x.begin(), acc_x.end(), 0.0);
    std::fill(acc_x2.begin(), acc_x2.end(), 0.0);
    double total_ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double max_log = -kInf;
      for (int j = 0; j < k; ++j) {
        const double s = std::sqrt(var[static_cast<std::size_t>(j)]);
        resp[static_cast<std::size_t>(j)] =
            std::log(w[static_cast<std::size_t>(j)] > 0 ? w[static_cast<std::size_t>(j)] : 1e-300) +
            gaussian_log_score(xs[i], mu[static_cast<std::size_t>(j)], s) -
            0.5 * std::log(2.0 * M_PI);
        max_log = std::max(max_log, resp[static_cast<std::size_t>(j)]);
      }
      double denom = 0.0;
      for (int j = 0; j < k; ++j) {
        resp[static_cast<std::size_t>(j)] = std::exp(resp[static_cast<std::size_t>(j)] - max_log);
        denom += resp[static_cast<std::size_t>(j)];
      }
      total_ll += max_log + std::log(denom);
      for (int j = 0; j < k; ++j) {
        const double r = resp[static_cast<std::size_t>(j)] / denom;
        acc_w[static_cast<std::size_t>(j)] += r;
        acc_x[static_cast<std::size_t>(j)] += r * xs[i];
        acc_x2[static_cast<std::size_t>(j)] += r * xs[i] * xs[i];
      }
    }
    for (int j = 0; j < k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (acc_w[ju] > 1e-12) {
        w[ju] = acc_w[ju] / static_cast<double>(n);
        mu[ju] = acc_x[ju] / acc_w[ju];
        var[ju] = std::max(acc_x2[ju] / acc_w[ju] - mu[ju] * mu[ju], kVarFloor);
      } else {
        w[ju] = 0.0;
      }
    }
    const double mean_ll = total_ll / static_cast<double>(n);
    if (iter > 0 && std::abs(mean_ll - prev_mean_ll) < kTol) {
      converged = true;
      break;
    }
    prev_mean_ll = mean_ll;
  }

  // Prune small components, then hard-assign and re-estimate empirically.
  const double weight_floor = 1.0 / (10.0 * static_cast<double>(max_components));
  std::vector<int> survivors;
  for (int j = 0; j < k; ++j) {
    if (w[static_cast<std::size_t>(j)] >= weight_floor) survivors.push_back(j);
  }
  if (survivors.empty()) {
    int best = 0;
    for (int j = 1; j < k; ++j) {
      if (w[static_cast<std::size_t>(j)] > w[static_cast<std::size_t>(best)]) best = j;
    }
    survivors.push_back(best);
  }

  std::vector<std::vector<double>> clusters(survivors.size());
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_score = -kInf;
    for (std::size_t sj = 0; sj < survivors.size(); ++sj) {
      const auto j = static_cast<std::size_t>(survivors[sj]);
      const double score = std::log(w[j] > 0 ? w[j] : 1e-300) +
                           gaussian_log_score(xs[i], mu[j], std::sqrt(var[j]));
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(sj);
      }
    }
    clusters[static_cast<std::size_t>(best)].push_back(xs[i]);
  }

  FeatureEncoder enc;
  enc.kind = Kind::gmm;
  enc.em_converged = converged;
  for (const auto& cluster : clusters) {
    if (cluster.empty()) continue;
    EncoderComponent comp;
    comp.mu = mean(cluster);
    comp.sigma = stddev(cluster);
    comp.weight = static_cast<double>(cluster.size()) / static_cast<double>(n);
    comp.lo = -kInf;
    comp.hi = kInf;
    enc.components.push_back(comp);
  }
  std::sort(enc.components.begin(), enc.components.end(),
            [](const EncoderComponent& a, const EncoderComponent& b) { return a.mu < b.mu; });
  return enc;
}

void FeatureEncoder::detect_inflated(std::span<const double> values) {
  std::vector<std::vector<double>> assigned(components.size());
  for (const double x : values) {
    const int z = encode(x);
    if (z >= 0 && z < num_components()) assigned[static_cast<std::size_t>(z)].push_back(x);
  }
  for (std::size_t k = 0; k < components.size(); ++k) {
    EncoderComponent& comp = components[k];
    if (assigned[k].empty()) continue;
    if (comp.sigma * comp.sigma < kInflationVarEpsilon) {
      const auto [mn, mx] = std::minmax_element(assigned[k].begin(), assigned[k].end());
      if (*mn == *mx) {
        comp.inflated = true;
        comp.inflated_value = *mn;
        comp.inflated_value_raw = *mn;  // remapped by fit_encoder_set
        comp.sigma = 0.0;
      } else {
        comp.sigma = stddev(assigned[k]);
      }
    }
  }
}

nlohmann::json FeatureEncoder::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  std::vector<double> thresholds;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    nlohmann::json jc{{"mu", c.mu}, {"sigma", c.sigma}, {"weight", c.weight}};
    if (c.inflated) {
      jc["inflated"] = true;
      jc["value"] = c.inflated_value;
      jc["value_raw"] = c.inflated_value_raw;
    }
    comps.push_back(std::move(jc));
    if (kind == Kind::dt && k + 1 < components.size()) thresholds.push_back(c.hi);
  }
  nlohmann::json j{{"kind", kind == Kind::dt ? "dt" : "gmm"},
                   {"components", std::move(comps)},
                   {"has_missing", has_missing},
                   {"em_converged", em_converged}};
  if (kind == Kind::dt) j["thresholds"] = thresholds;
  return j;
}

FeatureEncoder FeatureEncoder::from_json(const nlohmann::json& j) {
  FeatureEncoder enc;
  enc.kind = j.at("kind").get<std::string>() == "dt" ? Kind::dt : Kind::gmm;
  enc.has_missing = j.at("has_missing").get<bool>();
  enc.em_converged = j.value("em_converged", true);
  for (const auto& jc : j.at("components")) {
    EncoderComponent c;
    c.mu = jc.at("mu").get<double>();
    c.sigma = jc.at("sigma").get<double>();
    c.weight = jc.at("weight").get<double>();
    c.lo = -kInf;
    c.hi = kInf;
    if (jc.value("inflated", false)) {
      c.inflated = true;
      c.inflated_value = jc.at("value").get<double>();
      c.inflated_value_raw = jc.at("value_raw").get<double>();
    }
    enc.components.push_back(c);
  }
  if (enc.kind == Kind::dt) {
    const auto thresholds = j.at("thresholds").get<std::vector<double>>();
    for (std::size_t k = 0; k < enc.components.size(); ++k) {
      enc.components[k].lo = k == 0 ? -kInf : thresholds[k - 1];
      enc.components[k].hi = k + 1 < enc.components.size() ? thresholds[k] : kInf;
    }
  }
  return enc;
}

Eigen::MatrixXi EncoderSet::encode_matrix(const Eigen::MatrixXd& standardized,
                                          const MaskMatrix& mask) const {
  const Eigen::Index n = standardized.rows();
  Eigen::MatrixXi z(n, static_cast<Eigen::Index>(encoders.size()));
  for (std::size_t f = 0; f < encoders.size(); ++f) {
    const auto fj = static_cast<Eigen::Index>(f);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask(i, fj)) {
        z(i, fj) = encoders[f].missing_category();
      } else {
        z(i, fj) = encoders[f].encode(standardized(i, fj));
      }
    }
  }
  return z;
}

std::vector<int> EncoderSet::lowres_cardinalities(const FeatureSchema& schema) const {
  std::vector<int> cards;
  for (const int c : schema.categorical_columns()) {
    cards.push_back(schema.columns[static_cast<std::size_t>(c)].cardinality());
  }
  for (const auto& enc : encoders) {
    cards.push_back(enc.category_count());
  }
  return cards;
}

nlohmann::json EncoderSet::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& enc : encoders) features.push_back(enc.to_json());
  return nlohmann::json{{"version", 1}, {"features", std::move(features)}};
}

EncoderSet EncoderSet::from_json(const nlohmann::json& j) {
  EncoderSet set;
  for (const auto& f : j.at("features")) set.encoders.push_back(FeatureEncoder::from_json(f));
  return set;
}

EncoderSet fit_encoder_set(const Dataset& ds, const Preprocessor& pre,
                           const EncoderFitConfig& cfg) {
  EncoderSet set;
  const auto train_rows = ds.rows_with_split(Split::train);
  const int k_num = ds.k_num();
  set.encoders.resize(static_cast<std::size_t>(k_num));

  for (int f = 0; f < k_num; ++f) {
    std::vector<double> std_values;
    std::vector<double> raw_values;
    std_values.reserve(train_rows.size());
    for (const auto row : train_rows) {
      if (!ds.missing_mask(row, f)) {
        const double raw = ds.num_values(row, f);
        raw_values.push_back(raw);
        std_values.push_back(pre.transform_value(f, raw));
      }
    }
    FeatureEncoder enc =
        cfg.kind == FeatureEncoder::Kind::dt
            ? FeatureEncoder::fit_dt(std_values, cfg.max_depth, cfg.min_leaf)
            : FeatureEncoder::fit_gmm(std_values, cfg.max_components,
                                      Rng(cfg.seed).fork(static_cast<std::uint64_t>(f)).next_u64());
    enc.detect_inflated(std_values);
    // Inflated categories are emitted on the original scale, exactly.
    for (auto& comp : enc.components) {
      if (!comp.inflated) continue;
      for (std::size_t i = 0; i < std_values.size(); ++i) {
        if (std_values[i] == comp.inflated_value) {
          comp.inflated_value_raw = raw_values[i];
          break;
        }
      }
    }
    enc.has_missing = (ds.missing_mask.col(f).array() != 0).any();
    set.encoders[static_cast<std::size_t>(f)] = std::move(enc);
  }
  return set;
}

}  // namespace cascade
