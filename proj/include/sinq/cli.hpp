// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace sinq::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNoCalib = 4;

/// Entry point of the `sinq` tool: quantize, dequantize, eval, bench, gen, gen-calib.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sinq::cli
