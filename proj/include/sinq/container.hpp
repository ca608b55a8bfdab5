// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sinq/matrix.hpp"

namespace sinq {

enum class TensorDtype { Float32, Float16 };

struct NamedTensor {
  std::string name;
  TensorDtype dtype = TensorDtype::Float32;
  WeightMatrix value;
};

/// Named 2-D tensors in a single file:
///   u64 LE header length | JSON header {name: {dtype, shape, data_offsets}} | raw data.
/// Offsets are [begin, end) relative to the start of the data region; data is little-endian.
/// Float16 tensors are widened to float32 on load and narrowed (round-to-nearest-even) on save.
class TensorContainer {
 public:
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  void add(std::string name, WeightMatrix value, TensorDtype dtype = TensorDtype::Float32);

  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError on any structural problem.
  static TensorContainer parse(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static TensorContainer load(const std::filesystem::path& path);
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace sinq
