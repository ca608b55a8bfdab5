// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sinq/matrix.hpp"
#include "sinq/sinq.hpp"

namespace sinq {

/// Floor for per-channel activation magnitudes.
inline constexpr double kChannelEpsilon = 1e-8;

struct CalibrationSet {
  /// samples x channels
  WeightMatrix x;
  std::vector<double> mu;

  /// Computes mu from x.
  explicit CalibrationSet(WeightMatrix activations);
};

struct AlphaSearchConfig {
  /// Ascending exponents in [0, 1].
  std::vector<double> grid = default_grid(21);

  /// `points` evenly spaced exponents from 0 to 1 (a single point means {0}).
  static std::vector<double> default_grid(std::size_t points);
  void validate() const;
};

/// mu[j] = max(mean_k |X[k][j]|, eps). Throws DimensionError for an empty set.
std::vector<double> channel_abs_mean(MatrixView x);

/// Gaussian activations with log-normal per-channel scales. If `dominant_channel` is set
/// that channel's scale is multiplied by 100.
WeightMatrix gen_calibration(std::size_t samples, std::size_t channels, std::uint64_t seed,
                             std::optional<std::size_t> dominant_channel = std::nullopt);

/// X·Wᵀ in double, samples x rows.
std::vector<double> reference_outputs(const WeightMatrix& w, MatrixView x);

/// sum |X·Wᵀ - X·W_approxᵀ| with W_approx taken from the factored product.
double awq_objective(const WeightMatrix& w, MatrixView x, const DualScaleQuantizedMatrix& qm);
double awq_objective(std::span<const double> reference, MatrixView x, const DualScaleQuantizedMatrix& qm);

struct AsinqResult {
  DualScaleQuantizedMatrix qm;
  double alpha_star = 0.0;
  std::size_t best_index = 0;
  /// One objective per grid point.
  std::vector<double> objectives;
  /// Effective factors at alpha_star (column factors already divided by mu^alpha).
  std::vector<TileFactors> factors;
};

/// Normalizes W once, then for each alpha quantizes with column scale t = col / mu^alpha
/// and keeps the grid argmin of the 1-norm output error (ties to the smaller alpha).
/// Requires a dual-scale parameterization.
AsinqResult asinq_quantize(const WeightMatrix& w, const CalibrationSet& calib, const QuantizeOptions& opts,
                           const SinkhornConfig& cfg = {}, const AlphaSearchConfig& search = {});

}  // namespace sinq
