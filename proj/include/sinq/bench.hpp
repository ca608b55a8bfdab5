// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sinq/report.hpp"
#include "sinq/sinq.hpp"

namespace sinq {

struct BenchFixture {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double outlier_frac = 0.0;
  double outlier_scale = 1.0;
  std::uint64_t seed = 0;

  std::string label() const;
};

struct BenchConfig {
  std::vector<std::pair<std::size_t, std::size_t>> sizes;
  std::vector<double> outlier_fracs;
  std::vector<double> outlier_scales;
  std::vector<int> bits;
  std::vector<TilingMode> tilings;
  std::vector<ParamKind> params;
  std::vector<AuxPrecision> aux;
  std::size_t group_size = 64;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;

  /// sizes {64², 256², 1024², 4096×1024} × outliers {0, 0.1%, 1%} × {×10, ×50};
  /// ablation bits {3, 4} × tiling {1d, 2d} × all params × aux {f16, i8}.
  static BenchConfig default_suite();
  /// Same axes with sizes {64², 256²} only.
  static BenchConfig quick_suite();

  std::vector<BenchFixture> fixtures() const;
  std::size_t cell_count() const;
};

struct TimingRow {
  std::string method;
  double median_s = 0.0;
  /// median / RTN median.
  double ratio = 1.0;
};

struct BenchResult {
  /// One row per (fixture, bits, tiling, params, aux) cell. ScaleShift cells run RTN,
  /// the dual kinds run SINQ.
  RunReport ablation;
  /// RTN first (ratio 1.00), then SINQ. Each rep times the whole fixture list
  /// single-threaded at 4 bits, group 64, f16 aux: RTN with scale-shift, SINQ with dual-shift.
  std::vector<TimingRow> timing;
};

BenchResult run_bench(const BenchConfig& cfg);

std::string timing_csv(const std::vector<TimingRow>& rows);
std::string timing_table(const std::vector<TimingRow>& rows);

}  // namespace sinq
