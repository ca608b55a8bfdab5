// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace sinq {

/// Worker cap: SINQ_THREADS if set to a positive integer, else hardware concurrency.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Items are claimed in index
/// order; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = worker_count());

}  // namespace sinq
