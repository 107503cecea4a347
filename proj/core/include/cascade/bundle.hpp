// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cascade/encoder.hpp"
#include "cascade/highres.hpp"
#include "cascade/lowres.hpp"
#include "cascade/preprocess.hpp"
#include "cascade/schema.hpp"

namespace cascade {

// Persisted model directory: manifest.json + schema / preprocessor / encoder
// JSON documents + one parameter file per network. Loading verifies the
// encoder-set hash recorded at save time; sampling from a bundle whose
// encoders were modified is refused.
struct ModelBundle {
  FeatureSchema schema;
  Preprocessor preprocessor;
  EncoderSet encoders;
  LowResModel lowres;
  HighResModel highres;
  nlohmann::json config_echo;
  std::string encoder_hash;

  static constexpr int kFormatVersion = 1;

  void save(const std::filesystem::path& dir) const;
  static ModelBundle load(const std::filesystem::path& dir);
};

}  // namespace cascade
