// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sinq/error.hpp"

namespace sinq {

Imbalance Imbalance::from_extremes(double sigma_max, double sigma_min) {
  if (!(sigma_min > 0.0)) return {std::numeric_limits<double>::infinity(), true};
  return {sigma_max / sigma_min, false};
}

Imbalance imbalance_of_stds(std::span<const double> row_std, std::span<const double> col_std) {
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (double s : row_std) {
    hi = std::max(hi, s);
    lo = std::min(lo, s);
  }
  for (double s : col_std) {
    hi = std::max(hi, s);
    lo = std::min(lo, s);
  }
  return Imbalance::from_extremes(hi, lo);
}

Imbalance imbalance(MatrixView w) {
  if (w.rows() < 2 || w.cols() < 2) {
    throw DimensionError("imbalance needs at least 2 rows and 2 columns");
  }
  const auto rs = axis_std(w, Axis::PerRow);
  const auto cs = axis_std(w, Axis::PerColumn);
  return imbalance_of_stds(rs, cs);
}

namespace {

std::optional<double> kurtosis_strided(const float* p, std::size_t n, std::size_t step) {
  if (n == 0) return std::nullopt;
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += p[k * step];
  mean /= static_cast<double>(n);
  double m2 = 0.0;
  double m4 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = p[k * step] - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (!(m2 > 0.0)) return std::nullopt;
  return m4 / (m2 * m2);
}

}  // namespace

std::optional<double> kurtosis(std::span<const float> x) { return kurtosis_strided(x.data(), x.size(), 1); }

std::optional<double> mean_kurtosis(MatrixView w, Axis axis) {
  const bool per_row = axis == Axis::PerRow;
  const std::size_t count = per_row ? w.rows() : w.cols();
  const std::size_t len = per_row ? w.cols() : w.rows();
  if (len < 2) {
    throw DimensionError("kurtosis needs vectors of length >= 2");
  }
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto value = per_row ? kurtosis_strided(w.row(k).data(), len, 1)
                               : kurtosis_strided(w.row(0).data() + k, len, w.stride());
    if (value) {
      sum += *value;
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return sum / static_cast<double>(used);
}

double recon_error(const WeightMatrix& w, const WeightMatrix& w_approx, double p) {
  if (w.rows() != w_approx.rows() || w.cols() != w_approx.cols()) {
    throw ShapeMismatchError("recon_error: shapes differ");
  }
  if (!(p > 0.0)) {
    throw InvalidArgumentError("recon_error: p must be positive");
  }
  const auto a = w.data();
  const auto b = w_approx.data();
  double acc = 0.0;
  if (p == 2.0) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = static_cast<double>(a[k]) - b[k];
      acc += d * d;
    }
  } else {
    for (std::size_t k = 0; k < a.size(); ++k) {
      acc += std::pow(std::abs(static_cast<double>(a[k]) - b[k]), p);
    }
  }
  return acc / static_cast<double>(a.size());
}

MatrixReport analyze(const WeightMatrix& w) {
  MatrixReport rep;
  const auto rs = axis_std(w, Axis::PerRow);
  const auto cs = axis_std(w, Axis::PerColumn);
  rep.imbalance = imbalance_of_stds(rs, cs);
  rep.sigma_max = std::max(*std::max_element(rs.begin(), rs.end()), *std::max_element(cs.begin(), cs.end()));
  rep.sigma_min = std::min(*std::min_element(rs.begin(), rs.end()), *std::min_element(cs.begin(), cs.end()));
  if (w.cols() >= 2) rep.row_kurtosis_mean = mean_kurtosis(w, Axis::PerRow);
  if (w.rows() >= 2) rep.col_kurtosis_mean = mean_kurtosis(w, Axis::PerColumn);
  return rep;
}

}  // namespace sinq
