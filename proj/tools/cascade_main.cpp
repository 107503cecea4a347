// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cascade/bundle.hpp"
#include "cascade/error.hpp"
#include "cascade/pipeline.hpp"

namespace {

using cascade::Error;
using cascade::ErrorCode;
using cascade::RunConfig;

constexpr int kExitInternal = 1;
constexpr int kExitUser = 2;

// Applies one "a.b.c=value" override onto the config document. The value is
// parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    cascade::fail(ErrorCode::ConfigInvalid, "--set expects key=value, got '" + spec + "'");
  }
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  nlohmann::json* node = &doc;
  std::size_t begin = 0;
  for (;;) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) {
      cascade::fail(ErrorCode::ConfigInvalid, "--set has an empty path segment: " + spec);
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

nlohmann::json load_config_json(const std::string& config_path,
                                const std::vector<std::string>& overrides) {
  nlohmann::json doc = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      cascade::fail(ErrorCode::FileNotFound, "cannot open config file: " + config_path);
    }
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      cascade::fail(ErrorCode::ConfigInvalid,
                    "invalid config json in " + config_path + ": " + e.what());
    }
  }
  for (const auto& spec : overrides) apply_override(doc, spec);
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascade: cascaded flow matching for heterogeneous tabular data"};
  app.require_subcommand(1);
  app.footer("Thread count defaults to CASCADE_THREADS when set.");

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--set", overrides, "Override a config field, key=value (repeatable)");
    sub->add_option("--seed", seed, "Seed override for this command");
    sub->add_option("--out", out, "Output path override");
  };

  auto* fit = app.add_subcommand("fit", "Fit encoders and both models, persist the bundle");
  add_common(fit);

  auto* sample = app.add_subcommand("sample", "Sample rows from a fitted bundle to CSV");
  add_common(sample);
  std::string bundle_dir;
  std::int64_t sample_n = -1;
  int sample_steps = -1;
  sample->add_option("--bundle", bundle_dir, "Bundle directory from `cascade fit`");
  sample->add_option("--n", sample_n, "Number of rows to sample");
  sample->add_option("--steps", sample_steps, "ODE / flow steps");

  auto* simulate = app.add_subcommand("simulate-missing", "Apply the MNAR missingness simulator");
  add_common(simulate);
  std::optional<double> mnar_p;
  simulate->add_option("--p", mnar_p, "Target stage-1 missing rate");

  auto* evaluate = app.add_subcommand("evaluate", "Compute the metric suite for real vs synthetic");
  add_common(evaluate);
  std::string real_csv, synth_csv;
  evaluate->add_option("--real", real_csv, "Real data CSV (split internally)");
  evaluate->add_option("--synth", synth_csv, "Synthetic data CSV");

  auto* transport = app.add_subcommand("transport-report", "Transport-cost gap and WD trace");
  add_common(transport);
  std::string data_csv;
  std::size_t n_mc = 100000;
  transport->add_option("--bundle", bundle_dir, "Bundle directory from `cascade fit`");
  transport->add_option("--data", data_csv, "Data CSV to measure against");
  transport->add_option("--n-mc", n_mc, "Monte-Carlo draws");

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json doc = load_config_json(config_path, overrides);

    if (app.got_subcommand(fit)) {
      if (seed) doc["training"]["seed"] = *seed;
      if (!out.empty()) doc["out"] = out;
      RunConfig config = RunConfig::from_json(doc);
      if (config.data_csv.empty() || config.schema_json.empty()) {
        cascade::fail(ErrorCode::ConfigInvalid, "fit requires data.csv and data.schema");
      }
      if (config.out_dir.empty()) {
        cascade::fail(ErrorCode::ConfigInvalid, "fit requires an output directory (--out)");
      }
      cascade::cmd_fit(config);
      std::cout << "bundle written to " << config.out_dir << "\n";
    } else if (app.got_subcommand(sample)) {
      RunConfig config = RunConfig::from_json(doc);
      if (seed) config.sampling.seed = *seed;
      if (sample_n >= 0) config.sampling.n = sample_n;
      if (sample_steps > 0) config.sampling.steps = sample_steps;
      if (bundle_dir.empty()) bundle_dir = config.out_dir;
      if (bundle_dir.empty()) {
        cascade::fail(ErrorCode::ConfigInvalid, "sample requires --bundle");
      }
      const std::filesystem::path out_csv =
          out.empty() ? std::filesystem::path(bundle_dir) / "samples.csv"
                      : std::filesystem::path(out);
      const cascade::ModelBundle bundle = cascade::ModelBundle::load(bundle_dir);
      cascade::cmd_sample(bundle, config.sampling.n, config.sampling.steps,
                          config.sampling.seed, out_csv);
      std::cout << "samples written to " << out_csv.string() << "\n";
    } else if (app.got_subcommand(simulate)) {
      if (seed) doc["mnar"]["seed"] = *seed;
      if (mnar_p) doc["mnar"]["p"] = *mnar_p;
      if (!out.empty()) doc["out"] = out;
      RunConfig config = RunConfig::from_json(doc);
      if (config.data_csv.empty() || config.schema_json.empty()) {
        cascade::fail(ErrorCode::ConfigInvalid,
                      "simulate-missing requires data.csv and data.schema");
      }
      if (config.out_dir.empty()) {
        cascade::fail(ErrorCode::ConfigInvalid, "simulate-missing requires --out");
      }
      const auto result = cascade::cmd_simulate_missing(config);
      std::cout << "stage-1 missing rate " << result.stage1_rate << ", files in "
                << config.out_dir << "\n";
    } else if (app.got_subcommand(evaluate)) {
      if (seed) doc["metrics"]["seed"] = *seed;
      if (!out.empty()) doc["out"] = out;
      RunConfig config = RunConfig::from_json(doc);
      if (real_csv.empty()) real_csv = config.data_csv;
      if (real_csv.empty() || synth_csv.empty() || config.schema_json.empty()) {
        cascade::fail(ErrorCode::ConfigInvalid,
                      "evaluate requires --real (or data.csv), --synth, and data.schema");
      }
      const auto report = cascade::cmd_evaluate(config, real_csv, synth_csv,
                                                config.out_dir.empty()
                                                    ? std::filesystem::path{}
                                                    : std::filesystem::path(config.out_dir));
      std::cout << report.to_json().dump(2) << "\n";
    } else if (app.got_subcommand(transport)) {
      RunConfig config = RunConfig::from_json(doc);
      const std::uint64_t report_seed = seed.value_or(config.metrics.seed);
      if (bundle_dir.empty()) bundle_dir = config.out_dir;
      if (data_csv.empty()) data_csv = config.data_csv;
      if (bundle_dir.empty() || data_csv.empty()) {
        cascade::fail(ErrorCode::ConfigInvalid, "transport-report requires --bundle and --data");
      }
      const cascade::ModelBundle bundle = cascade::ModelBundle::load(bundle_dir);
      cascade::Dataset data = cascade::load_dataset(data_csv, bundle.schema);
      data = cascade::split_dataset(data, config.split_seed);
      const nlohmann::json report = cascade::cmd_transport_report(bundle, data, n_mc, report_seed);
      if (!out.empty()) {
        std::ofstream file(out);
        file << report.dump(2) << "\n";
      }
      std::cout << report.dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cascade::is_user_error(e.code()) ? kExitUser : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
