// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cascade {

enum class ColumnKind { categorical, numerical };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numerical;
  bool is_target = false;

  // Categorical only: declared label list, encoded to dense integers in this
  // order. A column that carries missing cells gets one extra trailing
  // category (the "missing" label, emitted as an empty cell).
  std::vector<std::string> categories;
  bool has_missing_category = false;

  int cardinality() const {
    return static_cast<int>(categories.size()) + (has_missing_category ? 1 : 0);
  }
  // Index of the missing category; only meaningful if has_missing_category.
  int missing_category() const { return static_cast<int>(categories.size()); }
};

struct FeatureSchema {
  std::vector<Column> columns;

  void validate() const;

  std::vector<int> categorical_columns() const;
  std::vector<int> numerical_columns() const;
  // -1 when the schema declares no target.
  int target_column() const;
  int find_column(const std::string& name) const;

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& j);
  static FeatureSchema load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Ignores has_missing_category so that a dataset whose columns acquired
  // missing categories still matches its declared schema.
  bool compatible_with(const FeatureSchema& other) const;
};

}  // namespace cascade
