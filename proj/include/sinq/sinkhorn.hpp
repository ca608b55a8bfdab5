// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "sinq/matrix.hpp"
#include "sinq/metrics.hpp"

namespace sinq {

struct SinkhornConfig {
  std::size_t max_iters = 16;
  double sigma_floor_eps = 1e-8;
  /// Bound on |log update| per entry per half-iteration.
  double log_step_clip = 2.0;
  bool early_stop = true;
  /// Stop once imbalance - 1 (the relative spread of all stds) is at most this.
  double convergence_tol = 1e-4;

  void validate() const;
};

/// Imbalance after each iteration; entry 0 is the input matrix.
struct SinkhornTrace {
  std::vector<Imbalance> imbalance;
  std::size_t best_iteration = 0;
};

/// Diagonal factors with W[i][j] = W_hat[i][j] · row[i] · col[j].
struct SinkhornFactors {
  std::vector<double> row;
  std::vector<double> col;
  SinkhornTrace trace;
};

struct SinkhornResult {
  WeightMatrix normalized;
  std::vector<double> row_factors;
  std::vector<double> col_factors;
  SinkhornTrace trace;
};

/// Alternately divides columns and rows by their current std. Factors accumulate in
/// the log domain, each half-step update is clipped, and with early stopping the
/// iterate of lowest imbalance is returned. The iteration runs on W / sigma_max(W), so
/// the std floor sigma_min(W) becomes sigma_min / sigma_max and the whole procedure is
/// invariant to a global rescaling of W.
/// Throws DimensionError when W has fewer than 2 rows or columns.
SinkhornFactors sinkhorn_factors(MatrixView w, const SinkhornConfig& cfg);

SinkhornResult sinkhorn_normalize(const WeightMatrix& w, const SinkhornConfig& cfg = {});

/// W[i][j] / (row[i] · col[j]) materialized as float32.
WeightMatrix apply_inverse_factors(MatrixView w, const std::vector<double>& row, const std::vector<double>& col);

}  // namespace sinq
