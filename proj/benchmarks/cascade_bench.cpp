// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <numeric>

#include "cascade/encoder.hpp"
#include "cascade/gbdt.hpp"
#include "cascade/highres.hpp"
#include "cascade/lowres.hpp"
#include "cascade/metrics.hpp"
#include "cascade/mlp.hpp"
#include "cascade/rng.hpp"

namespace {

using namespace cascade;

void BM_MlpForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  Rng rng(1);
  Mlp net({width, width, width, width}, rng);
  Eigen::MatrixXd x(256, width);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Mlp grads = net.zeros_like();
  for (auto _ : state) {
    Mlp::Cache cache;
    const Eigen::MatrixXd y = net.forward(x, &cache);
    net.backward(cache, y, grads);
    benchmark::DoNotOptimize(grads.layers().front().weight.sum());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(64)->Arg(256);

void BM_DtEncoderFit(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> values;
  for (int i = 0; i < state.range(0); ++i) {
    values.push_back(rng.uniform() < 0.3 ? 0.0 : rng.normal());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(FeatureEncoder::fit_dt(values, 8, 32).num_components());
  }
}
BENCHMARK(BM_DtEncoderFit)->Arg(10000)->Arg(100000);

void BM_GmmEncoderFit(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> values;
  for (int i = 0; i < state.range(0); ++i) {
    values.push_back(rng.uniform() < 0.5 ? -2.0 + rng.normal() : 2.0 + rng.normal());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(FeatureEncoder::fit_gmm(values, 10, 7).num_components());
  }
}
BENCHMARK(BM_GmmEncoderFit)->Arg(10000);

void BM_LowResSample(benchmark::State& state) {
  Rng rng(4);
  LowResConfig cfg;
  cfg.embed_dim = 16;
  cfg.hidden = {256, 256};
  LowResModel model({8, 12, 40}, cfg, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.sample(static_cast<Eigen::Index>(state.range(0)), 16, 5));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LowResSample)->Arg(512);

void BM_GbdtFit(benchmark::State& state) {
  Rng rng(5);
  const Eigen::Index n = state.range(0);
  Eigen::MatrixXd X(n, 10);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int f = 0; f < 10; ++f) X(i, f) = rng.normal();
    y[i] = X(i, 0) + X(i, 1) * X(i, 2) > 0 ? 1.0 : 0.0;
  }
  GbdtConfig cfg;
  cfg.n_iterations = 50;
  for (auto _ : state) {
    Gbdt model;
    model.fit(X, y, cfg);
    benchmark::DoNotOptimize(model.n_trees());
  }
}
BENCHMARK(BM_GbdtFit)->Arg(5000);

void BM_KsStatistic(benchmark::State& state) {
  Rng rng(6);
  std::vector<double> a, b;
  for (int i = 0; i < state.range(0); ++i) {
    a.push_back(rng.normal());
    b.push_back(rng.normal() + 0.1);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(ks_statistic(a, b));
  }
}
BENCHMARK(BM_KsStatistic)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
