// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cascade/mlp.hpp"

namespace cascade {

// Parameter serialization: flat little-endian float64 payload plus a JSON
// manifest listing tensor names, shapes, and offsets. Version 1.
struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major
};

void save_tensors(const std::filesystem::path& bin_path,
                  const std::filesystem::path& manifest_path,
                  const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& bin_path,
                                      const std::filesystem::path& manifest_path);

NamedTensor tensor_from_matrix(const std::string& name, const Eigen::MatrixXd& m);
NamedTensor tensor_from_vector(const std::string& name, const Eigen::VectorXd& v);
void matrix_from_tensor(const NamedTensor& t, Eigen::MatrixXd& out);
void vector_from_tensor(const NamedTensor& t, Eigen::VectorXd& out);

void append_mlp_tensors(const Mlp& mlp, const std::string& prefix,
                        std::vector<NamedTensor>& out);
// Consumes tensors named "<prefix>layers.<i>.weight/bias"; shapes must match.
void load_mlp_tensors(const std::vector<NamedTensor>& tensors, const std::string& prefix,
                      Mlp& mlp);

// FNV-1a 64-bit hash, hex encoded.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::filesystem::path& path);

}  // namespace cascade
