// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>

#include "sinq/matrix.hpp"

namespace sinq {

/// Ratio of the largest to the smallest row/column std. `infinite` is set when the
/// smallest std is zero; `value` is then meaningless.
struct Imbalance {
  double value = 1.0;
  bool infinite = false;

  static Imbalance from_extremes(double sigma_max, double sigma_min);

  /// Infinite sorts after every finite value.
  friend bool operator<(const Imbalance& a, const Imbalance& b) {
    if (a.infinite || b.infinite) return !a.infinite && b.infinite;
    return a.value < b.value;
  }
  friend bool operator==(const Imbalance&, const Imbalance&) = default;
};

/// Imbalance from precomputed per-row and per-column stds.
Imbalance imbalance_of_stds(std::span<const double> row_std, std::span<const double> col_std);

/// Throws DimensionError when rows < 2 or cols < 2.
Imbalance imbalance(MatrixView w);
inline Imbalance imbalance(const WeightMatrix& w) { return imbalance(w.view()); }

/// Mean Pearson kurtosis (population moments) over the rows or columns. Zero-variance
/// vectors are skipped; nullopt when every vector was skipped.
std::optional<double> mean_kurtosis(MatrixView w, Axis axis);
inline std::optional<double> mean_kurtosis(const WeightMatrix& w, Axis axis) { return mean_kurtosis(w.view(), axis); }

/// Pearson kurtosis of one vector; nullopt for zero variance.
std::optional<double> kurtosis(std::span<const float> x);

/// p == 2: mean squared error. Otherwise mean of |delta|^p.
double recon_error(const WeightMatrix& w, const WeightMatrix& w_approx, double p = 2.0);

struct MatrixReport {
  Imbalance imbalance;
  std::optional<double> row_kurtosis_mean;
  std::optional<double> col_kurtosis_mean;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

MatrixReport analyze(const WeightMatrix& w);

}  // namespace sinq
