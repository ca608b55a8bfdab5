// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/sinkhorn.hpp"

#include <algorithm>
#include <cmath>

#include "sinq/error.hpp"

namespace sinq {

void SinkhornConfig::validate() const {
  if (!(sigma_floor_eps > 0.0) || !(log_step_clip > 0.0) || !(convergence_tol > 0.0)) {
    throw InvalidArgumentError("sinkhorn config: eps, clip and tolerance must be positive");
  }
}

namespace {

double std_from_sums(double s1, double s2, std::size_t n) {
  if (n < 2) return 0.0;
  const double dn = static_cast<double>(n);
  const double var = (s2 - s1 * s1 / dn) / (dn - 1.0);
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

// Std of each column of diag(row_scale)·W. Sums are taken relative to the first
// row's value to limit cancellation.
void column_stds(MatrixView w, const std::vector<double>& row_scale, std::vector<double>& out,
                 std::vector<double>& s1, std::vector<double>& s2, std::vector<double>& pivot) {
  const std::size_t n = w.rows();
  const std::size_t m = w.cols();
  s1.assign(m, 0.0);
  s2.assign(m, 0.0);
  pivot.resize(m);
  {
    const auto r0 = w.row(0);
    for (std::size_t j = 0; j < m; ++j) pivot[j] = r0[j] * row_scale[0];
  }
  for (std::size_t i = 1; i < n; ++i) {
    const float* row = w.row(i).data();
    const double a = row_scale[i];
    double* p1 = s1.data();
    double* p2 = s2.data();
    const double* k = pivot.data();
    for (std::size_t j = 0; j < m; ++j) {
      const double d = row[j] * a - k[j];
      p1[j] += d;
      p2[j] += d * d;
    }
  }
  out.resize(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = std_from_sums(s1[j], s2[j], n);
}

// Std of each row of W·diag(col_scale).
void row_stds(MatrixView w, const std::vector<double>& col_scale, std::vector<double>& out) {
  const std::size_t m = w.cols();
  out.resize(w.rows());
  const double* c = col_scale.data();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const float* row = w.row(i).data();
    const double k = row[0] * c[0];
    double a1[4] = {0, 0, 0, 0};
    double a2[4] = {0, 0, 0, 0};
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      for (std::size_t l = 0; l < 4; ++l) {
        const double d = row[j + l] * c[j + l] - k;
        a1[l] += d;
        a2[l] += d * d;
      }
    }
    for (; j < m; ++j) {
      const double d = row[j] * c[j] - k;
      a1[0] += d;
      a2[0] += d * d;
    }
    out[i] = std_from_sums((a1[0] + a1[1]) + (a1[2] + a1[3]), (a2[0] + a2[1]) + (a2[2] + a2[3]), m);
  }
}

double clipped_log(double sigma, double floor, double clip) {
  return std::clamp(std::log(std::max(sigma, floor)), -clip, clip);
}

}  // namespace

SinkhornFactors sinkhorn_factors(MatrixView w, const SinkhornConfig& cfg) {
  cfg.validate();
  const std::size_t n = w.rows();
  const std::size_t m = w.cols();
  if (n < 2 || m < 2) {
    throw DimensionError("sinkhorn normalization needs at least 2 rows and 2 columns");
  }

  SinkhornFactors result;
  result.row.assign(n, 1.0);
  result.col.assign(m, 1.0);

  std::vector<double> row_cur = axis_std(w, Axis::PerRow);
  std::vector<double> col_cur = axis_std(w, Axis::PerColumn);
  const Imbalance initial = imbalance_of_stds(row_cur, col_cur);
  result.trace.imbalance.push_back(initial);
  if (cfg.max_iters == 0) return result;

  const double sigma_max = std::max(*std::max_element(row_cur.begin(), row_cur.end()),
                                    *std::max_element(col_cur.begin(), col_cur.end()));
  const double sigma_min = std::min(*std::min_element(row_cur.begin(), row_cur.end()),
                                    *std::min_element(col_cur.begin(), col_cur.end()));
  if (!(sigma_max > 0.0)) return result;  // constant matrix: nothing to balance

  const double floor = std::max(sigma_min / sigma_max, cfg.sigma_floor_eps);
  const double log_g = std::log(sigma_max);

  std::vector<double> row_log(n, log_g);
  std::vector<double> col_log(m, 0.0);
  for (double& s : row_cur) s /= sigma_max;
  for (double& s : col_cur) s /= sigma_max;

  std::vector<double> best_row_log;
  std::vector<double> best_col_log;
  Imbalance best = initial;
  std::size_t best_iter = 0;

  std::vector<double> scale;
  std::vector<double> raw;
  std::vector<double> s1, s2, pivot;

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    for (std::size_t j = 0; j < m; ++j) col_log[j] += clipped_log(col_cur[j], floor, cfg.log_step_clip);

    scale.resize(m);
    for (std::size_t j = 0; j < m; ++j) scale[j] = std::exp(-col_log[j]);
    row_stds(w, scale, raw);
    for (std::size_t i = 0; i < n; ++i) {
      const double cur = raw[i] * std::exp(-row_log[i]);
      const double u = clipped_log(cur, floor, cfg.log_step_clip);
      row_log[i] += u;
      row_cur[i] = cur * std::exp(-u);
    }

    scale.resize(n);
    for (std::size_t i = 0; i < n; ++i) scale[i] = std::exp(-row_log[i]);
    column_stds(w, scale, raw, s1, s2, pivot);
    for (std::size_t j = 0; j < m; ++j) col_cur[j] = raw[j] * std::exp(-col_log[j]);

    const Imbalance now = imbalance_of_stds(row_cur, col_cur);
    result.trace.imbalance.push_back(now);
    const bool improved = now < best;
    if (improved) {
      best = now;
      best_iter = it;
      best_row_log = row_log;
      best_col_log = col_log;
    }
    if (cfg.early_stop) {
      if (!improved) break;
      if (!now.infinite && now.value - 1.0 <= cfg.convergence_tol) break;
    }
  }

  if (cfg.early_stop) {
    result.trace.best_iteration = best_iter;
    if (best_iter == 0) return result;
    row_log = std::move(best_row_log);
    col_log = std::move(best_col_log);
  } else {
    result.trace.best_iteration = static_cast<std::size_t>(
        std::min_element(result.trace.imbalance.begin(), result.trace.imbalance.end()) -
        result.trace.imbalance.begin());
  }
  for (std::size_t i = 0; i < n; ++i) result.row[i] = std::exp(row_log[i]);
  for (std::size_t j = 0; j < m; ++j) result.col[j] = std::exp(col_log[j]);
  return result;
}

WeightMatrix apply_inverse_factors(MatrixView w, const std::vector<double>& row, const std::vector<double>& col) {
  if (row.size() != w.rows() || col.size() != w.cols()) {
    throw ShapeMismatchError("apply_inverse_factors: factor lengths do not match");
  }
  std::vector<double> inv_col(col.size());
  for (std::size_t j = 0; j < col.size(); ++j) inv_col[j] = 1.0 / col[j];
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double inv_r = 1.0 / row[i];
    const auto src = w.row(i);
    float* dst = out.data() + i * w.cols();
    for (std::size_t j = 0; j < w.cols(); ++j) {
      dst[j] = static_cast<float>(src[j] * inv_r * inv_col[j]);
    }
  }
  return {w.rows(), w.cols(), std::move(out)};
}

SinkhornResult sinkhorn_normalize(const WeightMatrix& w, const SinkhornConfig& cfg) {
  auto f = sinkhorn_factors(w.view(), cfg);
  auto normalized = apply_inverse_factors(w.view(), f.row, f.col);
  return {std::move(normalized), std::move(f.row), std::move(f.col), std::move(f.trace)};
}

}  // namespace sinq
