// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "sinq/artifact.hpp"
#include "sinq/calibration.hpp"

namespace sinq {

enum class Method { Rtn, Sinq, Asinq };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct QuantizeRequest {
  Method method = Method::Sinq;
  /// For Rtn the param kind is forced to ScaleShift.
  QuantizeOptions opts;
  SinkhornConfig sinkhorn;
  AlphaSearchConfig search;
  /// Quantize Wᵀ so column groups run along the rows of W.
  bool transpose = false;
};

/// One tensor through the chosen method, with before/after shape statistics.
/// Asinq requires `calib`.
ArtifactTensor quantize_tensor(std::string name, const WeightMatrix& w, const QuantizeRequest& req,
                               const CalibrationSet* calib = nullptr);

/// dequantize(t.qm), transposed back when the tensor was stored transposed.
WeightMatrix reconstruct(const ArtifactTensor& t);

/// Imbalance as stored in reports and manifests: nullopt when infinite.
inline std::optional<double> finite_or_null(const Imbalance& im) {
  return im.infinite ? std::nullopt : std::optional<double>(im.value);
}

}  // namespace sinq
