// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace cascade {

// Deterministic xoshiro256++ generator. Every stochastic operation in the
// library takes one of these (or a seed) explicitly; there is no global RNG
// state. Streams are stable across platforms and runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1), never exactly 0 or 1. Drives the inverse-CDF normal.
  double uniform_open();
  // Standard normal via the inverse CDF; one uniform per draw.
  double normal();
  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Independent substream derived from the original seed and `stream`.
  // fork(i) is identical no matter how much this generator has been used,
  // which keeps batched work independent of its partitioning.
  Rng fork(std::uint64_t stream) const;

  // Seeded Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::array<std::uint64_t, 4> state_;
  std::uint64_t seed_;
};

}  // namespace cascade
