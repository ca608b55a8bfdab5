// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace sinq {

struct TileRange;

/// Non-owning, read-only view of a row-major 2-D float block.
class MatrixView {
 public:
  MatrixView() = default;
  MatrixView(const float* data, std::size_t rows, std::size_t cols, std::size_t stride)
      : data_(data), rows_(rows), cols_(cols), stride_(stride) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t stride() const { return stride_; }
  std::size_t size() const { return rows_ * cols_; }

  float operator()(std::size_t i, std::size_t j) const { return data_[i * stride_ + j]; }
  std::span<const float> row(std::size_t i) const { return {data_ + i * stride_, cols_}; }

  MatrixView subview(const TileRange& range) const;

 private:
  const float* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
};

/// Dense row-major float32 matrix. Immutable once constructed; every entry is finite.
class WeightMatrix {
 public:
  /// rows x cols of zeros.
  WeightMatrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of `data`; throws if the length is wrong or any entry is NaN/Inf.
  WeightMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static WeightMatrix from_rows(std::initializer_list<std::initializer_list<float>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  float operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const float> data() const { return data_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  MatrixView view() const { return {data_.data(), rows_, cols_, cols_}; }

  WeightMatrix transposed() const;
  WeightMatrix scaled(float k) const;

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<float> data_;
};

enum class Axis { PerRow, PerColumn };

enum class TilingMode { OneD, TwoD };

/// OneD: full-height column groups of width T. TwoD: T x T square tiles.
struct TileSpec {
  TilingMode mode = TilingMode::OneD;
  std::size_t group_size = 64;

  TileSpec() = default;
  TileSpec(TilingMode mode, std::size_t group_size);

  friend bool operator==(const TileSpec&, const TileSpec&) = default;
};

/// Half-open index bounds of one tile.
struct TileRange {
  std::size_t row_start = 0;
  std::size_t row_end = 0;
  std::size_t col_start = 0;
  std::size_t col_end = 0;

  std::size_t rows() const { return row_end - row_start; }
  std::size_t cols() const { return col_end - col_start; }
  std::size_t size() const { return rows() * cols(); }

  friend bool operator==(const TileRange&, const TileRange&) = default;
};

/// Sample standard deviation (n-1 denominator) of each row or column.
/// A length-1 axis yields 0.
std::vector<double> axis_std(MatrixView w, Axis axis);
inline std::vector<double> axis_std(const WeightMatrix& w, Axis axis) { return axis_std(w.view(), axis); }

/// Tiles in row-major tile order. Ragged tails keep their smaller natural size.
std::vector<TileRange> tile_partition(std::size_t rows, std::size_t cols, const TileSpec& spec);

/// Seeded generator. The engine output is fixed by the standard; the uniform and
/// normal transforms are done here so fixtures match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// I.i.d. standard normal entries; exactly round(outlier_frac * rows * cols) distinct
/// uniformly chosen entries are multiplied by outlier_scale.
WeightMatrix gen_synthetic(std::size_t rows, std::size_t cols, double outlier_frac, double outlier_scale,
                           std::uint64_t seed);

}  // namespace sinq
