// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sinq/sinq.hpp"

namespace sinq {

/// Shape statistics recorded at quantization time. "after" refers to the matrix the
/// quantizer actually saw (after normalization, for sinq / asinq). nullopt imbalance
/// means infinite; nullopt kurtosis means undefined.
struct TensorStats {
  std::optional<double> imbalance_before;
  std::optional<double> imbalance_after;
  std::optional<double> row_kurtosis_before;
  std::optional<double> row_kurtosis_after;
  std::optional<double> col_kurtosis_before;
  std::optional<double> col_kurtosis_after;

  friend bool operator==(const TensorStats&, const TensorStats&) = default;
};

struct ArtifactTensor {
  std::string name;
  std::string method = "sinq";
  std::optional<double> alpha;
  /// qm holds Wᵀ (groups run along the original output dimension).
  bool transposed = false;
  TensorStats stats;
  DualScaleQuantizedMatrix qm;

  friend bool operator==(const ArtifactTensor&, const ArtifactTensor&) = default;
};

/// "SINQ1" | u32 LE manifest length | JSON manifest | zero padding | blobs.
/// Blob offsets are relative to the data region, which starts at the first 64-byte
/// boundary after the manifest; every blob starts 64-byte aligned.
struct QuantArtifact {
  std::vector<ArtifactTensor> tensors;

  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError on any structural problem.
  static QuantArtifact parse(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static QuantArtifact load(const std::filesystem::path& path);

  friend bool operator==(const QuantArtifact&, const QuantArtifact&) = default;
};

inline constexpr char kArtifactMagic[] = "SINQ1";
inline constexpr std::size_t kBlobAlignment = 64;

}  // namespace sinq
