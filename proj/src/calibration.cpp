// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "sinq/error.hpp"
#include "sinq/parallel.hpp"

namespace sinq {

CalibrationSet::CalibrationSet(WeightMatrix activations)
    : x(std::move(activations)), mu(channel_abs_mean(x.view())) {}

std::vector<double> AlphaSearchConfig::default_grid(std::size_t points) {
  if (points == 0) throw InvalidArgumentError("alpha grid needs at least one point");
  std::vector<double> g(points, 0.0);
  for (std::size_t k = 1; k < points; ++k) g[k] = static_cast<double>(k) / static_cast<double>(points - 1);
  return g;
}

void AlphaSearchConfig::validate() const {
  if (grid.empty()) throw InvalidArgumentError("alpha grid is empty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0 && grid[k] <= 1.0)) throw InvalidArgumentError("alpha grid entries must lie in [0, 1]");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw InvalidArgumentError("alpha grid must be strictly ascending");
  }
}

std::vector<double> channel_abs_mean(MatrixView x) {
  if (x.rows() == 0 || x.cols() == 0) throw DimensionError("channel_abs_mean: empty calibration set");
  std::vector<double> mu(x.cols(), 0.0);
  for (std::size_t k = 0; k < x.rows(); ++k) {
    const auto r = x.row(k);
    for (std::size_t j = 0; j < x.cols(); ++j) mu[j] += std::abs(static_cast<double>(r[j]));
  }
  for (double& m : mu) m = std::max(m / static_cast<double>(x.rows()), kChannelEpsilon);
  return mu;
}

WeightMatrix gen_calibration(std::size_t samples, std::size_t channels, std::uint64_t seed,
                             std::optional<std::size_t> dominant_channel) {
  if (samples == 0 || channels == 0) throw DimensionError("gen_calibration: empty shape");
  if (dominant_channel && *dominant_channel >= channels) {
    throw InvalidArgumentError("gen_calibration: dominant channel out of range");
  }
  Rng rng(seed);
  std::vector<double> sigma(channels);
  for (double& s : sigma) s = std::exp(0.5 * rng.normal());
  if (dominant_channel) sigma[*dominant_channel] *= 100.0;
  std::vector<float> data(samples * channels);
  for (std::size_t k = 0; k < samples; ++k) {
    for (std::size_t j = 0; j < channels; ++j) {
      data[k * channels + j] = static_cast<float>(rng.normal() * sigma[j]);
    }
  }
  return {samples, channels, std::move(data)};
}

std::vector<double> reference_outputs(const WeightMatrix& w, MatrixView x) {
  if (x.cols() != w.cols()) throw ShapeMismatchError("calibration channels do not match the weight input dimension");
  std::vector<double> y(x.rows() * w.rows(), 0.0);
  std::vector<double> xs(w.cols());
  for (std::size_t s = 0; s < x.rows(); ++s) {
    const auto xr = x.row(s);
    std::copy(xr.begin(), xr.end(), xs.begin());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const auto wr = w.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < w.cols(); ++j) dot += xs[j] * wr[j];
      y[s * w.rows() + i] = dot;
    }
  }
  return y;
}

double awq_objective(std::span<const double> reference, MatrixView x, const DualScaleQuantizedMatrix& qm) {
  if (reference.size() != x.rows() * qm.rows) throw ShapeMismatchError("awq_objective: reference size mismatch");
  const auto approx = quantized_matmul_transposed(x, qm);
  double total = 0.0;
  for (std::size_t k = 0; k < approx.size(); ++k) total += std::abs(reference[k] - approx[k]);
  return total;
}

double awq_objective(const WeightMatrix& w, MatrixView x, const DualScaleQuantizedMatrix& qm) {
  if (w.rows() != qm.rows || w.cols() != qm.cols) throw ShapeMismatchError("awq_objective: weight shape mismatch");
  const auto ref = reference_outputs(w, x);
  return awq_objective(ref, x, qm);
}

AsinqResult asinq_quantize(const WeightMatrix& w, const CalibrationSet& calib, const QuantizeOptions& opts,
                           const SinkhornConfig& cfg, const AlphaSearchConfig& search) {
  opts.validate();
  search.validate();
  if (!has_column_scale(opts.param_kind)) {
    throw InvalidArgumentError("asinq needs a column scale to absorb the activation scales");
  }
  if (calib.mu.size() != w.cols() || calib.x.cols() != w.cols()) {
    throw ShapeMismatchError("calibration channels do not match the weight input dimension");
  }

  const auto base = compute_tile_factors(w.view(), opts, cfg);
  const auto ranges = tile_partition(w.rows(), w.cols(), opts.tile_spec);
  const bool one_d = opts.tile_spec.mode == TilingMode::OneD;
  const auto ref = reference_outputs(w, calib.x.view());

  auto factors_at = [&](double alpha) {
    std::vector<TileFactors> f = base;
    if (alpha == 0.0) return f;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const std::size_t c0 = one_d ? 0 : ranges[k].col_start;
      const std::size_t m = one_d ? w.cols() : ranges[k].cols();
      if (f[k].col.empty()) f[k].col.assign(m, 1.0);
      for (std::size_t j = 0; j < m; ++j) f[k].col[j] /= std::pow(calib.mu[c0 + j], alpha);
    }
    return f;
  };

  std::vector<double> objectives(search.grid.size());
  parallel_for(search.grid.size(), [&](std::size_t k) {
    const auto qm = quantize_with_tile_factors(w.view(), opts, factors_at(search.grid[k]));
    objectives[k] = awq_objective(ref, calib.x.view(), qm);
  });

  std::size_t best = 0;
  for (std::size_t k = 1; k < objectives.size(); ++k) {
    if (objectives[k] < objectives[best]) best = k;
  }
  auto f = factors_at(search.grid[best]);
  auto qm = quantize_with_tile_factors(w.view(), opts, f);
  return {std::move(qm), search.grid[best], best, std::move(objectives), std::move(f)};
}

}  // namespace sinq
