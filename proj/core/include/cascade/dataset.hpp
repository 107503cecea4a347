// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cascade/schema.hpp"

namespace cascade {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// In-memory table. Categorical cells are dense integer codes; numerical cells
// carry NaN wherever missing_mask is set, so any code path that consumes a
// masked value without checking the mask poisons its result.
struct Dataset {
  FeatureSchema schema;
  Eigen::MatrixXi cat_values;   // n x K_cat, codes into schema category lists
  Eigen::MatrixXd num_values;   // n x K_num, NaN at masked entries
  MaskMatrix missing_mask;      // n x K_num, 1 = missing
  std::vector<Split> split;     // one tag per row, defaults to train

  Eigen::Index n_rows() const { return cat_values.rows() > 0 ? cat_values.rows() : num_values.rows(); }
  int k_cat() const { return static_cast<int>(cat_values.cols()); }
  int k_num() const { return static_cast<int>(num_values.cols()); }

  // Schema column index of the j-th categorical / numerical column.
  std::vector<int> cat_schema_columns() const { return schema.categorical_columns(); }
  std::vector<int> num_schema_columns() const { return schema.numerical_columns(); }

  std::vector<Eigen::Index> rows_with_split(Split tag) const;
  std::vector<std::size_t> split_sizes() const;  // {train, val, test}
};

// Parses a CSV against the schema. Empty numerical cells become missing;
// empty categorical cells are encoded as an extra trailing category of that
// column. Fails on unknown labels, arity mismatches, and non-numeric text.
Dataset load_dataset(const std::filesystem::path& csv_path, const FeatureSchema& schema);
Dataset load_dataset_text(const std::string& csv_text, const FeatureSchema& schema);

// Writes the dataset back out; missing cells (either kind) become empty cells.
std::string dataset_to_csv(const Dataset& ds);
void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

// Seeded 70/10/20 shuffle split: n_train = floor(0.7 n), n_val = floor(0.1 n),
// the remaining rows are test. Requires n >= 10.
Dataset split_dataset(const Dataset& ds, std::uint64_t seed);

// Row subset with the given tags, preserving order.
Dataset subset_by_split(const Dataset& ds, Split tag);

}  // namespace cascade
