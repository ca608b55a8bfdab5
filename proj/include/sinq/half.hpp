// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace sinq {

/// IEEE binary16 conversion, round-to-nearest-even. Finite inputs beyond the half
/// range saturate to +-65504 instead of becoming infinity.
std::uint16_t float_to_half(float value);
float half_to_float(std::uint16_t bits);

inline constexpr float kHalfMax = 65504.0f;

}  // namespace sinq
