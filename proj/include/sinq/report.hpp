// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sinq/artifact.hpp"

namespace sinq {

struct ReportRow {
  std::string name;
  double bits_per_weight = 0.0;
  std::uint64_t total_bits = 0;
  TensorStats stats;
  double mse = 0.0;
  double wall_time_s = 0.0;
};

/// Per-tensor rows in input order. CSV columns:
///   name, bits_per_weight, total_bits, imbalance_before, imbalance_after,
///   row_kurtosis_before, row_kurtosis_after, col_kurtosis_before, col_kurtosis_after,
///   mse, wall_time_s
/// An infinite imbalance prints as "inf"; an undefined kurtosis as an empty field.
struct RunReport {
  std::vector<ReportRow> rows;

  std::uint64_t total_bits() const;
  std::string to_csv() const;
  std::string to_json() const;
  /// Writes <stem>.csv and <stem>.json.
  void save(const std::filesystem::path& stem) const;
};

/// Row for a quantized tensor against its original.
ReportRow make_report_row(const ArtifactTensor& t, const WeightMatrix& original, const WeightMatrix& reconstructed,
                          double wall_time_s);

}  // namespace sinq
