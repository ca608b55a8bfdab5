// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "sinq/matrix.hpp"

namespace testutil {

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num = std::max(num, std::abs(a[k] - b[k]));
    den = std::max(den, std::abs(b[k]));
  }
  return den > 0.0 ? num / den : num;
}

// Naive double-precision std with the n-1 denominator.
inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline std::vector<double> column(const sinq::WeightMatrix& w, std::size_t j) {
  std::vector<double> c(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) c[i] = w(i, j);
  return c;
}

inline std::vector<double> row(const sinq::WeightMatrix& w, std::size_t i) {
  const auto r = w.row(i);
  return {r.begin(), r.end()};
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("sinq_test_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
