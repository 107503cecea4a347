// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cascade/csv.hpp"
#include "cascade/error.hpp"
#include "cascade/serialize.hpp"
#include "cascade/stats.hpp"
#include "cascade/transport.hpp"

namespace cascade {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return Rng(seed).fork(stream).next_u64();
}

void zero_gradients(LowResModel::Gradients& g) {
  for (auto& table : g.embeddings) table.setZero();
  g.trunk.set_zero();
}

void zero_gradients(HighResModel::Gradients& g) {
  for (auto& table : g.cond_embeddings) table.setZero();
  g.schedule_trunk.set_zero();
  g.field_trunk.set_zero();
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  read_field(j, "profile", c.profile);
  if (c.profile == "desk") {
    c.training.steps = 2000;
    c.training.batch = 256;
  } else if (c.profile == "paper") {
    c.training.steps = 30000;
    c.training.batch = 4096;
  } else if (!c.profile.empty()) {
    fail(ErrorCode::ConfigInvalid, "unknown profile '" + c.profile + "'");
  }

  if (j.contains("data")) {
    const auto& d = j.at("data");
    read_field(d, "csv", c.data_csv);
    read_field(d, "schema", c.schema_json);
    read_field(d, "split_seed", c.split_seed);
  }
  read_field(j, "out", c.out_dir);

  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    std::string kind = "dt";
    read_field(e, "kind", kind);
    if (kind == "dt") {
      c.encoder.kind = FeatureEncoder::Kind::dt;
    } else if (kind == "gmm") {
      c.encoder.kind = FeatureEncoder::Kind::gmm;
    } else {
      fail(ErrorCode::ConfigInvalid, "unknown encoder kind '" + kind + "'");
    }
    read_field(e, "max_depth", c.encoder.max_depth);
    read_field(e, "max_components", c.encoder.max_components);
    read_field(e, "min_leaf", c.encoder.min_leaf);
    read_field(e, "seed", c.encoder.seed);
  }

  if (j.contains("training")) {
    const auto& t = j.at("training");
    read_field(t, "steps", c.training.steps);
    read_field(t, "batch", c.training.batch);
    read_field(t, "lr", c.training.lr);
    read_field(t, "seed", c.training.seed);
    read_field(t, "wall_clock_cap_seconds", c.training.wall_clock_cap_seconds);
    read_field(t, "log_every", c.training.log_every);
    if (t.contains("lowres")) {
      const auto& l = t.at("lowres");
      read_field(l, "embed_dim", c.lowres.embed_dim);
      read_field(l, "time_dim", c.lowres.time_dim);
      read_field(l, "hidden", c.lowres.hidden);
      read_field(l, "sigma_min", c.lowres.sigma_min);
      read_field(l, "sigma_max", c.lowres.sigma_max);
    }
    if (t.contains("highres")) {
      const auto& h = t.at("highres");
      read_field(h, "cond_dim", c.highres.cond_dim);
      read_field(h, "time_dim", c.highres.time_dim);
      read_field(h, "field_hidden", c.highres.field_hidden);
      read_field(h, "schedule_hidden", c.highres.schedule_hidden);
      read_field(h, "d_floor", c.highres.d_floor);
    }
  }

  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    read_field(s, "n", c.sampling.n);
    read_field(s, "steps", c.sampling.steps);
    read_field(s, "seed", c.sampling.seed);
  }
  if (j.contains("mnar")) {
    const auto& m = j.at("mnar");
    read_field(m, "p", c.mnar.p);
    read_field(m, "seed", c.mnar.seed);
  }
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    read_field(m, "detection", c.metrics.detection);
    read_field(m, "mle", c.metrics.mle);
    read_field(m, "dcr", c.metrics.dcr);
    read_field(m, "mia", c.metrics.mia);
    read_field(m, "seed", c.metrics.seed);
    read_field(m, "onehot_max_cardinality", c.metrics.learner.onehot_max_cardinality);
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return nlohmann::json{
      {"profile", profile},
      {"data", {{"csv", data_csv}, {"schema", schema_json}, {"split_seed", split_seed}}},
      {"out", out_dir},
      {"encoder",
       {{"kind", encoder.kind == FeatureEncoder::Kind::dt ? "dt" : "gmm"},
        {"max_depth", encoder.max_depth},
        {"max_components", encoder.max_components},
        {"min_leaf", encoder.min_leaf},
        {"seed", encoder.seed}}},
      {"training",
       {{"steps", training.steps},
        {"batch", training.batch},
        {"lr", training.lr},
        {"seed", training.seed},
        {"wall_clock_cap_seconds", training.wall_clock_cap_seconds},
        {"log_every", training.log_every},
        {"lowres",
         {{"embed_dim", lowres.embed_dim},
          {"time_dim", lowres.time_dim},
          {"hidden", lowres.hidden},
          {"sigma_min", lowres.sigma_min},
          {"sigma_max", lowres.sigma_max}}},
        {"highres",
         {{"cond_dim", highres.cond_dim},
          {"time_dim", highres.time_dim},
          {"field_hidden", highres.field_hidden},
          {"schedule_hidden", highres.schedule_hidden},
          {"d_floor", highres.d_floor}}}}},
      {"sampling", {{"n", sampling.n}, {"steps", sampling.steps}, {"seed", sampling.seed}}},
      {"mnar", {{"p", mnar.p}, {"seed", mnar.seed}}},
      {"metrics",
       {{"detection", metrics.detection},
        {"mle", metrics.mle},
        {"dcr", metrics.dcr},
        {"mia", metrics.mia},
        {"seed", metrics.seed},
        {"onehot_max_cardinality", metrics.learner.onehot_max_cardinality}}}};
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::FileNotFound, "cannot open config file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, "invalid config json in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

ModelBundle cmd_fit(const RunConfig& config) {
  const FeatureSchema schema = FeatureSchema::load(config.schema_json);
  Dataset ds = load_dataset(config.data_csv, schema);
  ds = split_dataset(ds, config.split_seed);

  const Preprocessor pre = Preprocessor::fit(ds);
  const EncoderSet encoders = fit_encoder_set(ds, pre, config.encoder);
  const Eigen::MatrixXd standardized = pre.apply(ds);
  const Eigen::MatrixXi z = encoders.encode_matrix(standardized, ds.missing_mask);

  const int k_cat = ds.k_cat();
  const int k_num = ds.k_num();
  const int k_low = k_cat + k_num;
  const auto cards = encoders.lowres_cardinalities(ds.schema);
  const auto train_rows = ds.rows_with_split(Split::train);
  if (train_rows.empty()) {
    fail(ErrorCode::EmptyTrainingSet, "no training rows after split");
  }

  Rng master(config.training.seed);
  Rng init_rng = master.fork(0);
  LowResModel lowres(cards, config.lowres, init_rng);
  HighResModel highres(cards, k_num, config.highres, init_rng);
  AdamOptimizer opt_low(config.training.lr);
  AdamOptimizer opt_high(config.training.lr);
  Rng batch_rng = master.fork(1);
  Rng low_rng = master.fork(2);
  Rng high_rng = master.fork(3);

  auto low_grads = lowres.zero_gradients();
  auto high_grads = highres.zero_gradients();

  const int batch = config.training.batch;
  Eigen::MatrixXi x_low(batch, k_low);
  Eigen::MatrixXi z_batch(batch, k_num);
  Eigen::MatrixXd x1(batch, k_num);
  Eigen::VectorXd t_low(batch), t_high(batch);
  Eigen::MatrixXd noise(batch, k_low * config.lowres.embed_dim);
  Eigen::MatrixXd eps(batch, k_num);

  std::ostringstream loss_log;
  loss_log << "step,lowres_loss,highres_loss\n";
  const auto start = std::chrono::steady_clock::now();

  for (int step = 1; step <= config.training.steps; ++step) {
    for (int i = 0; i < batch; ++i) {
      const Eigen::Index row = train_rows[batch_rng.below(train_rows.size())];
      for (int j = 0; j < k_cat; ++j) x_low(i, j) = ds.cat_values(row, j);
      for (int f = 0; f < k_num; ++f) {
        const int code = z(row, f);
        x_low(i, k_cat + f) = code;
        z_batch(i, f) = code;
        x1(i, f) = standardized(row, f);
      }
    }

    for (int i = 0; i < batch; ++i) {
      t_low[i] = low_rng.uniform();
      for (Eigen::Index c = 0; c < noise.cols(); ++c) noise(i, c) = low_rng.normal();
    }
    zero_gradients(low_grads);
    const double loss_low = lowres.loss(x_low, t_low, noise, &low_grads);
    lowres.apply_gradients(opt_low, low_grads);

    const SourceBatch src = coupled_source_params(encoders, z_batch);
    for (int i = 0; i < batch; ++i) {
      t_high[i] = high_rng.uniform();
      for (int f = 0; f < k_num; ++f) eps(i, f) = high_rng.normal();
    }
    zero_gradients(high_grads);
    const double loss_high = highres.cfm_loss(x1, x_low, src, t_high, eps, &high_grads);
    highres.apply_gradients(opt_high, high_grads);

    if (step % config.training.log_every == 0 || step == config.training.steps) {
      loss_log << step << ',' << format_double(loss_low) << ',' << format_double(loss_high)
               << '\n';
    }
    if (config.training.wall_clock_cap_seconds > 0.0) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      if (elapsed.count() > config.training.wall_clock_cap_seconds) {
        loss_log << "# wall-clock cap reached at step " << step << "\n";
        break;
      }
    }
  }

  ModelBundle bundle;
  bundle.schema = ds.schema;
  bundle.preprocessor = pre;
  bundle.encoders = encoders;
  bundle.lowres = std::move(lowres);
  bundle.highres = std::move(highres);
  bundle.config_echo = config.to_json();

  if (!config.out_dir.empty()) {
    const std::filesystem::path out(config.out_dir);
    bundle.save(out);
    std::ofstream losses(out / "losses.csv");
    losses << loss_log.str();
    bundle.encoder_hash = hash_file(out / "encoders.json");
  } else {
    bundle.encoder_hash = fnv1a_hex(bundle.encoders.to_json().dump(2) + "\n");
  }
  return bundle;
}

Dataset assemble_mixed(const ModelBundle& bundle, const Eigen::MatrixXi& x_low,
                       const Eigen::MatrixXd& x_num_standardized) {
  const auto cat_cols = bundle.schema.categorical_columns();
  const int k_cat = static_cast<int>(cat_cols.size());
  const int k_num = bundle.encoders.k_num();
  const Eigen::Index n = x_low.rows();

  Dataset out;
  out.schema = bundle.schema;
  out.cat_values = x_low.leftCols(k_cat);
  out.num_values.resize(n, k_num);
  out.missing_mask = MaskMatrix::Zero(n, k_num);
  out.split.assign(static_cast<std::size_t>(n), Split::train);

  for (Eigen::Index i = 0; i < n; ++i) {
    for (int f = 0; f < k_num; ++f) {
      const FeatureEncoder& enc = bundle.encoders.encoders[static_cast<std::size_t>(f)];
      const int code = x_low(i, k_cat + f);
      if (enc.is_missing_category(code)) {
        out.missing_mask(i, f) = 1;
        out.num_values(i, f) = kNaN;
      } else if (enc.is_inflated_category(code)) {
        out.num_values(i, f) = enc.components[static_cast<std::size_t>(code)].inflated_value_raw;
      } else {
        out.num_values(i, f) = bundle.preprocessor.invert_value(f, x_num_standardized(i, f));
      }
    }
  }
  return out;
}

Dataset sample_dataset(const ModelBundle& bundle, std::int64_t n, int steps,
                       std::uint64_t seed) {
  const Eigen::MatrixXi x_low =
      bundle.lowres.sample(static_cast<Eigen::Index>(n), steps, derive_seed(seed, 1));
  const int k_cat = static_cast<int>(bundle.schema.categorical_columns().size());
  const Eigen::MatrixXi z = x_low.rightCols(bundle.encoders.k_num());
  const SourceBatch src = coupled_source_params(bundle.encoders, z);
  const Eigen::MatrixXd x_std = bundle.highres.sample(x_low, src, steps, derive_seed(seed, 2));
  (void)k_cat;
  return assemble_mixed(bundle, x_low, x_std);
}

std::string cmd_sample(const ModelBundle& bundle, std::int64_t n, int steps,
                       std::uint64_t seed, const std::filesystem::path& out_csv) {
  const Dataset sampled = sample_dataset(bundle, n, steps, seed);
  const std::string csv = dataset_to_csv(sampled);
  if (!out_csv.empty()) {
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) {
      fail(ErrorCode::FileNotFound, "cannot write " + out_csv.string());
    }
    out << csv;
  }
  return csv;
}

MnarResult cmd_simulate_missing(const RunConfig& config) {
  const FeatureSchema schema = FeatureSchema::load(config.schema_json);
  Dataset ds = load_dataset(config.data_csv, schema);
  MnarResult result = simulate_mnar(ds, config.mnar.p, config.mnar.seed);

  if (!config.out_dir.empty()) {
    const std::filesystem::path out(config.out_dir);
    std::filesystem::create_directories(out);
    save_dataset_csv(result.dataset, out / "data_masked.csv");

    std::ofstream mask(out / "mask.csv", std::ios::binary);
    std::vector<std::string> fields;
    for (const int c : result.dataset.num_schema_columns()) {
      fields.push_back(result.dataset.schema.columns[static_cast<std::size_t>(c)].name);
    }
    write_csv_row(mask, fields);
    for (Eigen::Index i = 0; i < result.dataset.n_rows(); ++i) {
      fields.clear();
      for (int f = 0; f < result.dataset.k_num(); ++f) {
        fields.push_back(result.dataset.missing_mask(i, f) ? "1" : "0");
      }
      write_csv_row(mask, fields);
    }
  }
  return result;
}

MetricReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& real_csv,
                          const std::filesystem::path& synth_csv,
                          const std::filesystem::path& out_dir) {
  const FeatureSchema schema = FeatureSchema::load(config.schema_json);
  Dataset real = load_dataset(real_csv, schema);
  real = split_dataset(real, config.split_seed);
  const Dataset real_train = subset_by_split(real, Split::train);
  const Dataset real_test = subset_by_split(real, Split::test);
  const Dataset synth = load_dataset(synth_csv, schema);

  const MetricReport report = evaluate_all(real_train, real_test, synth, config.metrics);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    {
      std::ofstream out(out_dir / "metrics.json");
      out << report.to_json().dump(2) << "\n";
    }
    {
      std::ofstream out(out_dir / "metrics.csv", std::ios::binary);
      out << report.csv_header() << "\n" << report.csv_row() << "\n";
    }
    {
      std::ofstream out(out_dir / "shape_per_feature.csv", std::ios::binary);
      out << "feature,score\n";
      for (const auto& [name, score] : report.shapes.per_feature) {
        out << csv_escape(name) << ',' << format_double(score) << "\n";
      }
    }
    {
      std::ofstream out(out_dir / "config.json");
      out << config.to_json().dump(2) << "\n";
    }
    // Bivariate 2-D histogram grids for every numerical feature pair.
    const auto num_cols = real.num_schema_columns();
    constexpr int kGrid = 20;
    for (std::size_t a = 0; a < num_cols.size(); ++a) {
      for (std::size_t b = a + 1; b < num_cols.size(); ++b) {
        const std::string& name_a =
            real.schema.columns[static_cast<std::size_t>(num_cols[a])].name;
        const std::string& name_b =
            real.schema.columns[static_cast<std::size_t>(num_cols[b])].name;
        double lo_a = kNaN, hi_a = kNaN, lo_b = kNaN, hi_b = kNaN;
        for (Eigen::Index i = 0; i < real_train.n_rows(); ++i) {
          if (real_train.missing_mask(i, static_cast<int>(a)) ||
              real_train.missing_mask(i, static_cast<int>(b))) {
            continue;
          }
          const double va = real_train.num_values(i, static_cast<int>(a));
          const double vb = real_train.num_values(i, static_cast<int>(b));
          lo_a = std::isnan(lo_a) ? va : std::min(lo_a, va);
          hi_a = std::isnan(hi_a) ? va : std::max(hi_a, va);
          lo_b = std::isnan(lo_b) ? vb : std::min(lo_b, vb);
          hi_b = std::isnan(hi_b) ? vb : std::max(hi_b, vb);
        }
        if (std::isnan(lo_a) || hi_a <= lo_a || hi_b <= lo_b) continue;

        auto grid_counts = [&](const Dataset& dset) {
          std::vector<int> counts(kGrid * kGrid, 0);
          for (Eigen::Index i = 0; i < dset.n_rows(); ++i) {
            if (dset.missing_mask(i, static_cast<int>(a)) ||
                dset.missing_mask(i, static_cast<int>(b))) {
              continue;
            }
            auto bin = [&](double v, double lo, double hi) {
              const int idx =
                  static_cast<int>(std::floor((v - lo) / (hi - lo) * kGrid));
              return std::clamp(idx, 0, kGrid - 1);
            };
            const int ba = bin(dset.num_values(i, static_cast<int>(a)), lo_a, hi_a);
            const int bb = bin(dset.num_values(i, static_cast<int>(b)), lo_b, hi_b);
            counts[static_cast<std::size_t>(ba * kGrid + bb)] += 1;
          }
          return counts;
        };
        const auto real_counts = grid_counts(real_train);
        const auto synth_counts = grid_counts(synth);
        std::ofstream out(out_dir / ("bivar_" + name_a + "__" + name_b + ".csv"),
                          std::ios::binary);
        out << "bin_a,bin_b,real_count,synth_count\n";
        for (int i = 0; i < kGrid; ++i) {
          for (int j = 0; j < kGrid; ++j) {
            out << i << ',' << j << ',' << real_counts[static_cast<std::size_t>(i * kGrid + j)]
                << ',' << synth_counts[static_cast<std::size_t>(i * kGrid + j)] << "\n";
          }
        }
      }
    }
  }
  return report;
}

nlohmann::json cmd_transport_report(const ModelBundle& bundle, const Dataset& data,
                                    std::size_t n_mc, std::uint64_t seed) {
  const Eigen::MatrixXd standardized = bundle.preprocessor.apply(data);
  auto rows = data.rows_with_split(Split::train);
  if (rows.empty()) {
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) rows.push_back(i);
  }

  const TransportGap gap =
      transport_cost_gap(standardized, data.missing_mask, rows, bundle.encoders, n_mc, seed);
  const std::vector<double> ts{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::size_t n_trace = std::min<std::size_t>(n_mc, 10000);
  const PathWdTrace trace = path_wd_trace(standardized, data.missing_mask, rows,
                                          bundle.encoders, ts, n_trace, derive_seed(seed, 7));

  // MC tolerance on the per-feature bound conditions.
  constexpr double kConditionTolerance = 0.02;
  bool all_dt = true;
  for (const auto& enc : bundle.encoders.encoders) {
    all_dt = all_dt && enc.kind == FeatureEncoder::Kind::dt;
  }

  nlohmann::json features = nlohmann::json::array();
  const auto num_cols = data.num_schema_columns();
  for (int f = 0; f < bundle.encoders.k_num(); ++f) {
    const auto fu = static_cast<std::size_t>(f);
    features.push_back(
        {{"feature", data.schema.columns[static_cast<std::size_t>(num_cols[fu])].name},
         {"mean_sq_deviation", gap.feature_sq_dev[fu]},
         {"mean_source_variance", gap.feature_var[fu]},
         {"sq_deviation_leq_1", gap.feature_sq_dev[fu] <= 1.0 + kConditionTolerance},
         {"source_variance_leq_1", gap.feature_var[fu] <= 1.0 + kConditionTolerance}});
  }

  return nlohmann::json{{"cost_coupled", gap.cost_coupled},
                        {"cost_independent", gap.cost_independent},
                        {"gap_std_error", gap.gap_std_error},
                        {"bound_guaranteed", all_dt},
                        {"features", std::move(features)},
                        {"wd_trace",
                         {{"t", trace.ts},
                          {"coupled", trace.wd_coupled},
                          {"independent", trace.wd_independent}}}};
}

}  // namespace cascade
