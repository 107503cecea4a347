// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cascade/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "parameter files are little-endian");

namespace cascade {

void save_tensors(const std::filesystem::path& bin_path,
                  const std::filesystem::path& manifest_path,
                  const std::vector<NamedTensor>& tensors) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) {
    fail(ErrorCode::FileNotFound, "cannot write " + bin_path.string());
  }
  nlohmann::json entries = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& tensor : tensors) {
    std::size_t count = 1;
    for (const std::size_t s : tensor.shape) count *= s;
    if (count != tensor.data.size()) {
      fail(ErrorCode::ShapeMismatch, "tensor '" + tensor.name + "': shape/data mismatch");
    }
    bin.write(reinterpret_cast<const char*>(tensor.data.data()),
              static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
    entries.push_back({{"name", tensor.name},
                       {"shape", tensor.shape},
                       {"offset", offset},
                       {"count", count}});
    offset += count;
  }
  std::ofstream manifest(manifest_path);
  if (!manifest) {
    fail(ErrorCode::FileNotFound, "cannot write " + manifest_path.string());
  }
  manifest << nlohmann::json{{"version", 1}, {"dtype", "float64-le"}, {"tensors", entries}}
                  .dump(2)
           << "\n";
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& bin_path,
                                      const std::filesystem::path& manifest_path) {
  std::ifstream manifest(manifest_path);
  if (!manifest) {
    fail(ErrorCode::FileNotFound, "cannot open " + manifest_path.string());
  }
  nlohmann::json j;
  manifest >> j;
  if (j.value("version", 0) != 1) {
    fail(ErrorCode::ConfigInvalid, "unsupported parameter file version in " + manifest_path.string());
  }
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) {
    fail(ErrorCode::FileNotFound, "cannot open " + bin_path.string());
  }
  std::vector<NamedTensor> tensors;
  for (const auto& entry : j.at("tensors")) {
    NamedTensor tensor;
    tensor.name = entry.at("name").get<std::string>();
    tensor.shape = entry.at("shape").get<std::vector<std::size_t>>();
    const auto count = entry.at("count").get<std::size_t>();
    const auto offset = entry.at("offset").get<std::size_t>();
    tensor.data.resize(count);
    bin.seekg(static_cast<std::streamoff>(offset * sizeof(double)));
    bin.read(reinterpret_cast<char*>(tensor.data.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (!bin) {
      fail(ErrorCode::ConfigInvalid, "truncated parameter file " + bin_path.string());
    }
    tensors.push_back(std::move(tensor));
  }
  return tensors;
}

NamedTensor tensor_from_matrix(const std::string& name, const Eigen::MatrixXd& m) {
  NamedTensor t;
  t.name = name;
  t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  }
  return t;
}

NamedTensor tensor_from_vector(const std::string& name, const Eigen::VectorXd& v) {
  NamedTensor t;
  t.name = name;
  t.shape = {static_cast<std::size_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

void matrix_from_tensor(const NamedTensor& t, Eigen::MatrixXd& out) {
  if (t.shape.size() != 2 || static_cast<Eigen::Index>(t.shape[0]) != out.rows() ||
      static_cast<Eigen::Index>(t.shape[1]) != out.cols()) {
    fail(ErrorCode::ShapeMismatch, "tensor '" + t.name + "': unexpected shape");
  }
  std::size_t idx = 0;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = t.data[idx++];
  }
}

void vector_from_tensor(const NamedTensor& t, Eigen::VectorXd& out) {
  if (t.shape.size() != 1 || static_cast<Eigen::Index>(t.shape[0]) != out.size()) {
    fail(ErrorCode::ShapeMismatch, "tensor '" + t.name + "': unexpected shape");
  }
  std::memcpy(out.data(), t.data.data(), t.data.size() * sizeof(double));
}

void append_mlp_tensors(const Mlp& mlp, const std::string& prefix,
                        std::vector<NamedTensor>& out) {
  for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
    const auto& layer = mlp.layers()[l];
    out.push_back(tensor_from_matrix(prefix + "layers." + std::to_string(l) + ".weight",
                                     layer.weight));
    out.push_back(tensor_from_vector(prefix + "layers." + std::to_string(l) + ".bias",
                                     layer.bias));
  }
}

void load_mlp_tensors(const std::vector<NamedTensor>& tensors, const std::string& prefix,
                      Mlp& mlp) {
  auto find = [&](const std::string& name) -> const NamedTensor& {
    for (const auto& t : tensors) {
      if (t.name == name) return t;
    }
    fail(ErrorCode::ConfigInvalid, "missing tensor '" + name + "'");
  };
  for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
    matrix_from_tensor(find(prefix + "layers." + std::to_string(l) + ".weight"),
                       mlp.layers()[l].weight);
    vector_from_tensor(find(prefix + "layers." + std::to_string(l) + ".bias"),
                       mlp.layers()[l].bias);
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << hash;
  return out.str();
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::FileNotFound, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a_hex(buffer.str());
}

}  // namespace cascade
