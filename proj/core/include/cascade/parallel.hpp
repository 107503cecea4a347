// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace cascade {

// Thread count resolution: CASCADE_THREADS env var when set, otherwise the
// hardware concurrency, at least 1.
std::size_t default_thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks across
// at most `threads` std::threads; each index is processed exactly once, so
// results must not depend on scheduling. threads == 0 means default.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = 0);

}  // namespace cascade
