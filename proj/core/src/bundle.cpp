// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/bundle.hpp"

#include <fstream>

#include "cascade/error.hpp"
#include "cascade/serialize.hpp"

namespace cascade {

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) {
    fail(ErrorCode::FileNotFound, "cannot write " + path.string());
  }
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::FileNotFound, "cannot open " + path.string());
  }
  nlohmann::json j;
  in >> j;
  return j;
}

nlohmann::json lowres_config_json(const LowResConfig& c) {
  return {{"embed_dim", c.embed_dim},   {"time_dim", c.time_dim},
          {"hidden", c.hidden},         {"sigma_min", c.sigma_min},
          {"sigma_max", c.sigma_max}};
}

LowResConfig lowres_config_from_json(const nlohmann::json& j) {
  LowResConfig c;
  c.embed_dim = j.at("embed_dim").get<int>();
  c.time_dim = j.at("time_dim").get<int>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.sigma_min = j.at("sigma_min").get<double>();
  c.sigma_max = j.at("sigma_max").get<double>();
  return c;
}

nlohmann::json highres_config_json(const HighResConfig& c) {
  return {{"cond_dim", c.cond_dim},
          {"time_dim", c.time_dim},
          {"field_hidden", c.field_hidden},
          {"schedule_hidden", c.schedule_hidden},
          {"d_floor", c.d_floor}};
}

HighResConfig highres_config_from_json(const nlohmann::json& j) {
  HighResConfig c;
  c.cond_dim = j.at("cond_dim").get<int>();
  c.time_dim = j.at("time_dim").get<int>();
  c.field_hidden = j.at("field_hidden").get<std::vector<int>>();
  c.schedule_hidden = j.at("schedule_hidden").get<std::vector<int>>();
  c.d_floor = j.at("d_floor").get<double>();
  return c;
}

}  // namespace

void ModelBundle::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  schema.save(dir / "schema.json");
  write_json(dir / "preprocessor.json", preprocessor.to_json());
  write_json(dir / "encoders.json", encoders.to_json());
  write_json(dir / "config.json", config_echo);

  {
    std::vector<NamedTensor> tensors;
    for (std::size_t j = 0; j < lowres.embeddings().size(); ++j) {
      tensors.push_back(
          tensor_from_matrix("embeddings." + std::to_string(j), lowres.embeddings()[j]));
    }
    append_mlp_tensors(lowres.trunk(), "trunk.", tensors);
    save_tensors(dir / "lowres.bin", dir / "lowres.json", tensors);
    nlohmann::json meta{{"cardinalities", lowres.cardinalities()},
                        {"config", lowres_config_json(lowres.config())}};
    write_json(dir / "lowres.meta.json", meta);
  }
  {
    std::vector<NamedTensor> tensors;
    for (std::size_t j = 0; j < highres.cond_embeddings().size(); ++j) {
      tensors.push_back(tensor_from_matrix("cond_embeddings." + std::to_string(j),
                                           highres.cond_embeddings()[j]));
    }
    append_mlp_tensors(highres.schedule_trunk(), "schedule.", tensors);
    append_mlp_tensors(highres.field_trunk(), "field.", tensors);
    save_tensors(dir / "highres.bin", dir / "highres.json", tensors);
    std::vector<int> cards;
    for (const auto& table : highres.cond_embeddings()) {
      cards.push_back(static_cast<int>(table.rows()));
    }
    nlohmann::json meta{{"lowres_cardinalities", cards},
                        {"k_num", highres.k_num()},
                        {"config", highres_config_json(highres.config())}};
    write_json(dir / "highres.meta.json", meta);
  }

  const std::string enc_hash = hash_file(dir / "encoders.json");
  nlohmann::json manifest{
      {"format_version", kFormatVersion},
      {"encoder_hash", enc_hash},
      {"config_hash", fnv1a_hex(config_echo.dump())},
      {"components",
       {"schema.json", "preprocessor.json", "encoders.json", "config.json", "lowres.bin",
        "lowres.json", "lowres.meta.json", "highres.bin", "highres.json",
        "highres.meta.json"}}};
  write_json(dir / "manifest.json", manifest);
}

ModelBundle ModelBundle::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = read_json(dir / "manifest.json");
  if (manifest.value("format_version", 0) != kFormatVersion) {
    fail(ErrorCode::ConfigInvalid, "unsupported bundle format version in " + dir.string());
  }

  ModelBundle bundle;
  bundle.schema = FeatureSchema::load(dir / "schema.json");
  bundle.preprocessor = Preprocessor::from_json(read_json(dir / "preprocessor.json"));
  bundle.encoders = EncoderSet::from_json(read_json(dir / "encoders.json"));
  bundle.config_echo = read_json(dir / "config.json");

  bundle.encoder_hash = hash_file(dir / "encoders.json");
  if (bundle.encoder_hash != manifest.at("encoder_hash").get<std::string>()) {
    fail(ErrorCode::EncoderHashMismatch,
         "encoder set does not match the hash recorded at save time; refusing to sample");
  }

  {
    const nlohmann::json meta = read_json(dir / "lowres.meta.json");
    Rng init_rng(0);
    bundle.lowres = LowResModel(meta.at("cardinalities").get<std::vector<int>>(),
                                lowres_config_from_json(meta.at("config")), init_rng);
    const auto tensors = load_tensors(dir / "lowres.bin", dir / "lowres.json");
    for (std::size_t j = 0; j < bundle.lowres.embeddings().size(); ++j) {
      for (const auto& t : tensors) {
        if (t.name == "embeddings." + std::to_string(j)) {
          matrix_from_tensor(t, bundle.lowres.embeddings()[j]);
        }
      }
    }
    load_mlp_tensors(tensors, "trunk.", bundle.lowres.trunk());
  }
  {
    const nlohmann::json meta = read_json(dir / "highres.meta.json");
    Rng init_rng(0);
    bundle.highres = HighResModel(meta.at("lowres_cardinalities").get<std::vector<int>>(),
                                  meta.at("k_num").get<int>(),
                                  highres_config_from_json(meta.at("config")), init_rng);
    const auto tensors = load_tensors(dir / "highres.bin", dir / "highres.json");
    for (std::size_t j = 0; j < bundle.highres.cond_embeddings().size(); ++j) {
      for (const auto& t : tensors) {
        if (t.name == "cond_embeddings." + std::to_string(j)) {
          matrix_from_tensor(t, bundle.highres.cond_embeddings()[j]);
        }
      }
    }
    load_mlp_tensors(tensors, "schedule.", bundle.highres.schedule_trunk());
    load_mlp_tensors(tensors, "field.", bundle.highres.field_trunk());
  }
  return bundle;
}

}  // namespace cascade
