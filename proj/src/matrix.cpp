// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/matrix.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "sinq/error.hpp"

namespace sinq {

MatrixView MatrixView::subview(const TileRange& range) const {
  return {data_ + range.row_start * stride_ + range.col_start, range.rows(), range.cols(), stride_};
}

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols) : WeightMatrix(rows, cols, std::vector<float>(rows * cols)) {}

WeightMatrix::WeightMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows_ == 0 || cols_ == 0) {
    throw DimensionError("matrix dimensions must be positive");
  }
  if (data_.size() != rows_ * cols_) {
    throw ShapeMismatchError("matrix data length " + std::to_string(data_.size()) + " != " + std::to_string(rows_) +
                             "x" + std::to_string(cols_));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) {
      throw InvalidArgumentError("matrix entries must be finite");
    }
  }
}

WeightMatrix WeightMatrix::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.begin()->size() : 0;
  std::vector<float> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) {
      throw ShapeMismatchError("ragged row list");
    }
    data.insert(data.end(), r.begin(), r.end());
  }
  return {n, m, std::move(data)};
}

WeightMatrix WeightMatrix::transposed() const {
  std::vector<float> out(data_.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      out[j * rows_ + i] = data_[i * cols_ + j];
    }
  }
  return {cols_, rows_, std::move(out)};
}

WeightMatrix WeightMatrix::scaled(float k) const {
  std::vector<float> out(data_);
  for (float& v : out) v *= k;
  return {rows_, cols_, std::move(out)};
}

TileSpec::TileSpec(TilingMode mode, std::size_t group_size) : mode(mode), group_size(group_size) {
  if (group_size == 0) {
    throw InvalidArgumentError("group size must be >= 1");
  }
}

namespace {

// Two-pass sample std of a strided sequence.
double sample_std(const float* p, std::size_t n, std::size_t step) {
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += p[k * step];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = p[k * step] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

std::vector<double> axis_std(MatrixView w, Axis axis) {
  std::vector<double> out;
  if (axis == Axis::PerRow) {
    out.resize(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      out[i] = sample_std(w.row(i).data(), w.cols(), 1);
    }
  } else {
    // Same two-pass sums as sample_std, swept row-major so columns stay cache friendly.
    const std::size_t n = w.rows(), m = w.cols();
    out.assign(m, 0.0);
    if (n < 2) return out;
    std::vector<double> mean(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const float* r = w.row(i).data();
      for (std::size_t j = 0; j < m; ++j) mean[j] += r[j];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const float* r = w.row(i).data();
      for (std::size_t j = 0; j < m; ++j) {
        const double d = r[j] - mean[j];
        out[j] += d * d;
      }
    }
    for (double& v : out) v = std::sqrt(v / static_cast<double>(n - 1));
  }
  return out;
}

std::vector<TileRange> tile_partition(std::size_t rows, std::size_t cols, const TileSpec& spec) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("cannot tile an empty matrix");
  }
  if (spec.group_size == 0) {
    throw InvalidArgumentError("group size must be >= 1");
  }
  const std::size_t t = spec.group_size;
  std::vector<TileRange> tiles;
  if (spec.mode == TilingMode::OneD) {
    for (std::size_t c = 0; c < cols; c += t) {
      tiles.push_back({0, rows, c, std::min(cols, c + t)});
    }
  } else {
    for (std::size_t r = 0; r < rows; r += t) {
      for (std::size_t c = 0; c < cols; c += t) {
        tiles.push_back({r, std::min(rows, r + t), c, std::min(cols, c + t)});
      }
    }
  }
  return tiles;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 == 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgumentError("Rng::below(0)");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

WeightMatrix gen_synthetic(std::size_t rows, std::size_t cols, double outlier_frac, double outlier_scale,
                           std::uint64_t seed) {
  if (!(outlier_frac >= 0.0 && outlier_frac <= 1.0)) {
    throw InvalidArgumentError("outlier_frac must be in [0, 1]");
  }
  if (!(outlier_scale >= 1.0) || !std::isfinite(outlier_scale)) {
    throw InvalidArgumentError("outlier_scale must be >= 1");
  }
  if (rows == 0 || cols == 0) {
    throw DimensionError("gen_synthetic: dimensions must be positive");
  }
  Rng rng(seed);
  const std::size_t n = rows * cols;
  std::vector<float> data(n);
  for (float& v : data) v = static_cast<float>(rng.normal());

  const auto count = static_cast<std::size_t>(std::llround(outlier_frac * static_cast<double>(n)));
  // Partial Fisher-Yates: the first `count` slots become the outlier positions.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(n - k));
    std::swap(idx[k], idx[pick]);
    data[idx[k]] *= static_cast<float>(outlier_scale);
  }
  return {rows, cols, std::move(data)};
}

}  // namespace sinq
