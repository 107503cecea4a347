// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cascade/bundle.hpp"
#include "cascade/dataset.hpp"
#include "cascade/encoder.hpp"
#include "cascade/highres.hpp"
#include "cascade/lowres.hpp"
#include "cascade/metrics.hpp"
#include "cascade/mnar.hpp"

namespace cascade {

struct TrainingConfig {
  int steps = 30000;
  int batch = 4096;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double wall_clock_cap_seconds = 1800.0;  // 0 disables the cap
  int log_every = 50;
};

struct SamplingConfig {
  std::int64_t n = 1000;
  int steps = 200;
  std::uint64_t seed = 0;
};

struct MnarRunConfig {
  double p = 0.10;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::string data_csv;
  std::string schema_json;
  std::string out_dir;
  std::string profile;  // "", "desk", "paper"
  std::uint64_t split_seed = 0;

  EncoderFitConfig encoder;
  TrainingConfig training;
  LowResConfig lowres;
  HighResConfig highres;
  SamplingConfig sampling;
  MnarRunConfig mnar;
  MetricsConfig metrics;

  // Named presets: "desk" = 2000 steps, batch 256; "paper" = 30000 steps,
  // batch 4096. Explicit config fields override the preset.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static RunConfig load(const std::filesystem::path& path);
};

// Algorithm 1 end to end: preprocessor, encoders, z derivation, then joint
// teacher-forced training of both models off one batch stream. Persists the
// bundle, the effective config, and a per-step loss CSV under out_dir.
ModelBundle cmd_fit(const RunConfig& config);

// Low-res sampling, high-res sampling, mixed-type assembly, inverse
// preprocessing. Returns the sampled dataset on the original scale.
Dataset sample_dataset(const ModelBundle& bundle, std::int64_t n, int steps,
                       std::uint64_t seed);
std::string cmd_sample(const ModelBundle& bundle, std::int64_t n, int steps,
                       std::uint64_t seed, const std::filesystem::path& out_csv);

// MNAR simulation; writes the masked CSV and a 0/1 mask CSV.
MnarResult cmd_simulate_missing(const RunConfig& config);

// Full metric suite + per-feature shape breakdown + bivariate grid CSVs.
MetricReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& real_csv,
                          const std::filesystem::path& synth_csv,
                          const std::filesystem::path& out_dir);

// Transport-cost gap, per-feature bound conditions, and the WD-vs-t trace of
// the guided path under coupled vs independent sources.
nlohmann::json cmd_transport_report(const ModelBundle& bundle, const Dataset& data,
                                    std::size_t n_mc, std::uint64_t seed);

// Assembles final feature values from sampled low-res categories and
// high-res values: missing category -> empty cell, inflated category -> the
// exact original-scale inflated value, otherwise inverse-transformed.
Dataset assemble_mixed(const ModelBundle& bundle, const Eigen::MatrixXi& x_low,
                       const Eigen::MatrixXd& x_num_standardized);

}  // namespace cascade
