// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/schema.hpp"

#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "cascade/error.hpp"

namespace cascade {

void FeatureSchema::validate() const {
  if (columns.empty()) {
    fail(ErrorCode::SchemaInvalid, "schema declares no columns");
  }
  std::unordered_set<std::string> names;
  int target_count = 0;
  for (const auto& column : columns) {
    if (column.name.empty()) {
      fail(ErrorCode::SchemaInvalid, "schema contains an unnamed column");
    }
    if (!names.insert(column.name).second) {
      fail(ErrorCode::SchemaInvalid, "duplicate column name: " + column.name);
    }
    if (column.is_target) ++target_count;
    if (column.kind == ColumnKind::categorical) {
      if (column.categories.size() < 2) {
        fail(ErrorCode::SchemaInvalid,
             "categorical column '" + column.name + "' needs at least 2 categories");
      }
      std::unordered_set<std::string> labels;
      for (const auto& label : column.categories) {
        if (!labels.insert(label).second) {
          fail(ErrorCode::SchemaInvalid,
               "duplicate category label in column '" + column.name + "': " + label);
        }
      }
    } else if (!column.categories.empty()) {
      fail(ErrorCode::SchemaInvalid,
           "numerical column '" + column.name + "' must not declare categories");
    }
  }
  if (target_count > 1) {
    fail(ErrorCode::SchemaInvalid, "schema declares more than one target column");
  }
}

std::vector<int> FeatureSchema::categorical_columns() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(columns.size()); ++i) {
    if (columns[i].kind == ColumnKind::categorical) out.push_back(i);
  }
  return out;
}

std::vector<int> FeatureSchema::numerical_columns() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(columns.size()); ++i) {
    if (columns[i].kind == ColumnKind::numerical) out.push_back(i);
  }
  return out;
}

int FeatureSchema::target_column() const {
  for (int i = 0; i < static_cast<int>(columns.size()); ++i) {
    if (columns[i].is_target) return i;
  }
  return -1;
}

int FeatureSchema::find_column(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(columns.size()); ++i) {
    if (columns[i].name == name) return i;
  }
  return -1;
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& column : columns) {
    nlohmann::json c;
    c["name"] = column.name;
    c["kind"] = column.kind == ColumnKind::categorical ? "categorical" : "numerical";
    if (column.is_target) c["target"] = true;
    if (column.kind == ColumnKind::categorical) {
      c["categories"] = column.categories;
      if (column.has_missing_category) c["has_missing_category"] = true;
    }
    cols.push_back(std::move(c));
  }
  return nlohmann::json{{"columns", std::move(cols)}};
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  FeatureSchema schema;
  if (!j.contains("columns") || !j["columns"].is_array()) {
    fail(ErrorCode::SchemaInvalid, "schema json must contain a 'columns' array");
  }
  for (const auto& c : j["columns"]) {
    Column column;
    column.name = c.at("name").get<std::string>();
    const std::string kind = c.at("kind").get<std::string>();
    if (kind == "categorical") {
      column.kind = ColumnKind::categorical;
      column.categories = c.at("categories").get<std::vector<std::string>>();
      column.has_missing_category = c.value("has_missing_category", false);
    } else if (kind == "numerical") {
      column.kind = ColumnKind::numerical;
    } else {
      fail(ErrorCode::SchemaInvalid, "unknown column kind: " + kind);
    }
    column.is_target = c.value("target", false);
    schema.columns.push_back(std::move(column));
  }
  schema.validate();
  return schema;
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::FileNotFound, "cannot open schema file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaInvalid, "invalid schema json in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void FeatureSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    fail(ErrorCode::FileNotFound, "cannot write schema file: " + path.string());
  }
  out << to_json().dump(2) << "\n";
}

bool FeatureSchema::compatible_with(const FeatureSchema& other) const {
  if (columns.size() != other.columns.size()) return false;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& a = columns[i];
    const auto& b = other.columns[i];
    if (a.name != b.name || a.kind != b.kind || a.is_target != b.is_target) return false;
    if (a.categories != b.categories) return false;
  }
  return true;
}

}  // namespace cascade
