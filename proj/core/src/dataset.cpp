// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "cascade/csv.hpp"
#include "cascade/error.hpp"
#include "cascade/rng.hpp"
#include "cascade/stats.hpp"

namespace cascade {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_numeric(const std::string& text, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    fail(ErrorCode::NonNumericValue,
         "non-numeric value '" + text + "' at row " + std::to_string(row) +
             ", column '" + column + "'");
  }
  return value;
}

}  // namespace

std::vector<Eigen::Index> Dataset::rows_with_split(Split tag) const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(split.size()); ++i) {
    if (split[i] == tag) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> Dataset::split_sizes() const {
  std::vector<std::size_t> sizes(3, 0);
  for (Split tag : split) sizes[static_cast<std::size_t>(tag)]++;
  return sizes;
}

Dataset load_dataset_text(const std::string& csv_text, const FeatureSchema& schema) {
  schema.validate();
  const CsvTable table = read_csv_text(csv_text);

  // Map schema columns onto file columns by header name; order-insensitive.
  std::unordered_map<std::string, int> header_pos;
  for (int i = 0; i < static_cast<int>(table.header.size()); ++i) {
    header_pos[table.header[i]] = i;
  }
  if (header_pos.size() != table.header.size()) {
    fail(ErrorCode::SchemaMismatch, "csv header contains duplicate column names");
  }
  std::vector<int> file_column(schema.columns.size());
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    auto it = header_pos.find(schema.columns[c].name);
    if (it == header_pos.end()) {
      fail(ErrorCode::SchemaMismatch,
           "csv header is missing schema column '" + schema.columns[c].name + "'");
    }
    file_column[c] = it->second;
  }
  if (table.header.size() != schema.columns.size()) {
    fail(ErrorCode::SchemaMismatch, "csv header does not match the schema column set");
  }

  Dataset ds;
  ds.schema = schema;
  const auto cat_cols = schema.categorical_columns();
  const auto num_cols = schema.numerical_columns();
  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  ds.cat_values.resize(n, static_cast<Eigen::Index>(cat_cols.size()));
  ds.num_values.resize(n, static_cast<Eigen::Index>(num_cols.size()));
  ds.missing_mask = MaskMatrix::Zero(n, static_cast<Eigen::Index>(num_cols.size()));
  ds.split.assign(static_cast<std::size_t>(n), Split::train);

  // Per-categorical-column label lookup.
  std::vector<std::unordered_map<std::string, int>> label_maps(cat_cols.size());
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    const auto& labels = schema.columns[cat_cols[j]].categories;
    for (int k = 0; k < static_cast<int>(labels.size()); ++k) {
      label_maps[j][labels[k]] = k;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    if (row.size() != table.header.size()) {
      fail(ErrorCode::RowArityMismatch,
           "row " + std::to_string(i) + " has " + std::to_string(row.size()) +
               " fields, expected " + std::to_string(table.header.size()));
    }
    for (std::size_t j = 0; j < cat_cols.size(); ++j) {
      Column& column = ds.schema.columns[static_cast<std::size_t>(cat_cols[j])];
      const std::string& cell = row[static_cast<std::size_t>(file_column[static_cast<std::size_t>(cat_cols[j])])];
      if (cell.empty()) {
        column.has_missing_category = true;
        ds.cat_values(i, static_cast<Eigen::Index>(j)) = column.missing_category();
        continue;
      }
      auto it = label_maps[j].find(cell);
      if (it == label_maps[j].end()) {
        fail(ErrorCode::UnknownCategoryLabel,
             "unknown category label '" + cell + "' at row " + std::to_string(i) +
                 ", column '" + column.name + "'");
      }
      ds.cat_values(i, static_cast<Eigen::Index>(j)) = it->second;
    }
    for (std::size_t j = 0; j < num_cols.size(); ++j) {
      const Column& column = ds.schema.columns[static_cast<std::size_t>(num_cols[j])];
      const std::string& cell = row[static_cast<std::size_t>(file_column[static_cast<std::size_t>(num_cols[j])])];
      if (cell.empty()) {
        if (column.is_target) {
          fail(ErrorCode::SchemaMismatch,
               "target column '" + column.name + "' has a missing value at row " +
                   std::to_string(i));
        }
        ds.missing_mask(i, static_cast<Eigen::Index>(j)) = 1;
        ds.num_values(i, static_cast<Eigen::Index>(j)) = kNaN;
      } else {
        ds.num_values(i, static_cast<Eigen::Index>(j)) = parse_numeric(cell, static_cast<std::size_t>(i), column.name);
      }
    }
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& csv_path, const FeatureSchema& schema) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::FileNotFound, "cannot open csv file: " + csv_path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_dataset_text(buffer.str(), schema);
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream out;
  std::vector<std::string> fields;
  fields.reserve(ds.schema.columns.size());
  for (const auto& column : ds.schema.columns) fields.push_back(column.name);
  write_csv_row(out, fields);

  const auto cat_cols = ds.cat_schema_columns();
  const auto num_cols = ds.num_schema_columns();
  std::vector<int> kind_index(ds.schema.columns.size(), -1);
  std::vector<bool> is_cat(ds.schema.columns.size(), false);
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    kind_index[static_cast<std::size_t>(cat_cols[j])] = static_cast<int>(j);
    is_cat[static_cast<std::size_t>(cat_cols[j])] = true;
  }
  for (std::size_t j = 0; j < num_cols.size(); ++j) {
    kind_index[static_cast<std::size_t>(num_cols[j])] = static_cast<int>(j);
  }

  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    fields.clear();
    for (std::size_t c = 0; c < ds.schema.columns.size(); ++c) {
      const Column& column = ds.schema.columns[c];
      const int j = kind_index[c];
      if (is_cat[c]) {
        const int code = ds.cat_values(i, j);
        if (column.has_missing_category && code == column.missing_category()) {
          fields.emplace_back();
        } else {
          fields.push_back(column.categories[static_cast<std::size_t>(code)]);
        }
      } else {
        if (ds.missing_mask(i, j)) {
          fields.emplace_back();
        } else {
          fields.push_back(format_double(ds.num_values(i, j)));
        }
      }
    }
    write_csv_row(out, fields);
  }
  return out.str();
}

void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorCode::FileNotFound, "cannot write csv file: " + path.string());
  }
  out << dataset_to_csv(ds);
}

Dataset split_dataset(const Dataset& ds, std::uint64_t seed) {
  const Eigen::Index n = ds.n_rows();
  if (n < 10) {
    fail(ErrorCode::EmptyInput, "split requires at least 10 rows");
  }
  const auto n_size = static_cast<std::size_t>(n);
  const auto n_train = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(n)));

  Rng rng(seed);
  const auto order = rng.permutation(n_size);
  Dataset out = ds;
  for (std::size_t pos = 0; pos < n_size; ++pos) {
    Split tag = Split::test;
    if (pos < n_train) {
      tag = Split::train;
    } else if (pos < n_train + n_val) {
      tag = Split::val;
    }
    out.split[order[pos]] = tag;
  }
  return out;
}

Dataset subset_by_split(const Dataset& ds, Split tag) {
  const auto rows = ds.rows_with_split(tag);
  Dataset out;
  out.schema = ds.schema;
  out.cat_values.resize(static_cast<Eigen::Index>(rows.size()), ds.cat_values.cols());
  out.num_values.resize(static_cast<Eigen::Index>(rows.size()), ds.num_values.cols());
  out.missing_mask.resize(static_cast<Eigen::Index>(rows.size()), ds.missing_mask.cols());
  out.split.assign(rows.size(), tag);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.cat_values.row(static_cast<Eigen::Index>(i)) = ds.cat_values.row(rows[i]);
    out.num_values.row(static_cast<Eigen::Index>(i)) = ds.num_values.row(rows[i]);
    out.missing_mask.row(static_cast<Eigen::Index>(i)) = ds.missing_mask.row(rows[i]);
  }
  return out;
}

}  // namespace cascade
