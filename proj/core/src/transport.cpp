// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/transport.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/error.hpp"
#include "cascade/rng.hpp"

namespace cascade {

TransportGap transport_cost_gap(const Eigen::MatrixXd& standardized, const MaskMatrix& mask,
                                const std::vector<Eigen::Index>& rows,
                                const EncoderSet& encoders, std::size_t n_mc,
                                std::uint64_t seed) {
  const int k = encoders.k_num();
  if (rows.empty() || n_mc == 0) {
    fail(ErrorCode::EmptyInput, "transport_cost_gap: no rows or draws");
  }
  Rng rng(seed);

  TransportGap gap;
  gap.feature_sq_dev.assign(static_cast<std::size_t>(k), 0.0);
  gap.feature_var.assign(static_cast<std::size_t>(k), 0.0);
  std::vector<double> coupled_sum(static_cast<std::size_t>(k), 0.0);
  std::vector<double> indep_sum(static_cast<std::size_t>(k), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  double diff_sum = 0.0;
  double diff_sq_sum = 0.0;

  for (std::size_t s = 0; s < n_mc; ++s) {
    const Eigen::Index row = rows[rng.below(rows.size())];
    double sample_diff = 0.0;
    for (int f = 0; f < k; ++f) {
      if (mask(row, f)) continue;
      const double x1 = standardized(row, f);
      const FeatureEncoder& enc = encoders.encoders[static_cast<std::size_t>(f)];
      const int z = enc.encode(x1);
      const auto& comp = enc.components[static_cast<std::size_t>(z)];
      const double mu = comp.mu;
      const double sigma = std::max(comp.sigma, FeatureEncoder::kSigmaFloor);

      const double eps_c = rng.normal();
      const double eps_i = rng.normal();
      const double coupled = (x1 - mu - sigma * eps_c) * (x1 - mu - sigma * eps_c);
      const double indep = (x1 - eps_i) * (x1 - eps_i);

      const auto fu = static_cast<std::size_t>(f);
      coupled_sum[fu] += coupled;
      indep_sum[fu] += indep;
      gap.feature_sq_dev[fu] += (x1 - mu) * (x1 - mu);
      gap.feature_var[fu] += sigma * sigma;
      ++counts[fu];
      sample_diff += indep - coupled;
    }
    diff_sum += sample_diff;
    diff_sq_sum += sample_diff * sample_diff;
  }

  for (int f = 0; f < k; ++f) {
    const auto fu = static_cast<std::size_t>(f);
    if (counts[fu] == 0) continue;
    const double n = static_cast<double>(counts[fu]);
    gap.cost_coupled += coupled_sum[fu] / n;
    gap.cost_independent += indep_sum[fu] / n;
    gap.feature_sq_dev[fu] /= n;
    gap.feature_var[fu] /= n;
  }

  const double n = static_cast<double>(n_mc);
  const double diff_mean = diff_sum / n;
  const double diff_var = diff_sq_sum / n - diff_mean * diff_mean;
  gap.gap_std_error = std::sqrt(std::max(diff_var, 0.0) / n);
  return gap;
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    fail(ErrorCode::EmptyInput, "wasserstein1: empty sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integral of |F_a(x) - F_b(x)| between consecutive pooled points.
  std::vector<double> pooled;
  pooled.reserve(a.size() + b.size());
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());

  double distance = 0.0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t p = 0; p + 1 < pooled.size(); ++p) {
    while (ia < a.size() && a[ia] <= pooled[p]) ++ia;
    while (ib < b.size() && b[ib] <= pooled[p]) ++ib;
    const double fa = static_cast<double>(ia) / static_cast<double>(a.size());
    const double fb = static_cast<double>(ib) / static_cast<double>(b.size());
    distance += std::abs(fa - fb) * (pooled[p + 1] - pooled[p]);
  }
  return distance;
}

PathWdTrace path_wd_trace(const Eigen::MatrixXd& standardized, const MaskMatrix& mask,
                          const std::vector<Eigen::Index>& rows, const EncoderSet& encoders,
                          const std::vector<double>& ts, std::size_t n_draws,
                          std::uint64_t seed) {
  const int k = encoders.k_num();
  PathWdTrace trace;
  trace.ts = ts;

  // Reference sample per feature: all non-missing values of the given rows.
  std::vector<std::vector<double>> reference(static_cast<std::size_t>(k));
  for (const auto row : rows) {
    for (int f = 0; f < k; ++f) {
      if (!mask(row, f)) reference[static_cast<std::size_t>(f)].push_back(standardized(row, f));
    }
  }

  for (const double t : ts) {
    Rng rng(seed);  // same draw sequence per time point; only t varies
    std::vector<std::vector<double>> coupled(static_cast<std::size_t>(k));
    std::vector<std::vector<double>> indep(static_cast<std::size_t>(k));
    for (std::size_t s = 0; s < n_draws; ++s) {
      const Eigen::Index row = rows[rng.below(rows.size())];
      for (int f = 0; f < k; ++f) {
        if (mask(row, f)) continue;
        const double x1 = standardized(row, f);
        const FeatureEncoder& enc = encoders.encoders[static_cast<std::size_t>(f)];
        const auto& comp = enc.components[static_cast<std::size_t>(enc.encode(x1))];
        const double sigma = std::max(comp.sigma, FeatureEncoder::kSigmaFloor);
        const double x0_coupled = comp.mu + sigma * rng.normal();
        const double x0_indep = rng.normal();
        coupled[static_cast<std::size_t>(f)].push_back(t * x1 + (1.0 - t) * x0_coupled);
        indep[static_cast<std::size_t>(f)].push_back(t * x1 + (1.0 - t) * x0_indep);
      }
    }
    double wd_c = 0.0, wd_i = 0.0;
    int used = 0;
    for (int f = 0; f < k; ++f) {
      const auto fu = static_cast<std::size_t>(f);
      if (reference[fu].empty() || coupled[fu].empty()) continue;
      wd_c += wasserstein1(coupled[fu], reference[fu]);
      wd_i += wasserstein1(indep[fu], reference[fu]);
      ++used;
    }
    trace.wd_coupled.push_back(used > 0 ? wd_c / used : 0.0);
    trace.wd_independent.push_back(used > 0 ? wd_i / used : 0.0);
  }
  return trace;
}

}  // namespace cascade
