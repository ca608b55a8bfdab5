// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/pipeline.hpp"

#include <optional>

#include "sinq/error.hpp"

namespace sinq {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Rtn: return "rtn";
    case Method::Sinq: return "sinq";
    case Method::Asinq: return "asinq";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "rtn") return Method::Rtn;
  if (s == "sinq") return Method::Sinq;
  if (s == "asinq") return Method::Asinq;
  throw InvalidArgumentError("unknown method '" + std::string(s) + "'");
}

namespace {

void fill_before(TensorStats& st, const MatrixReport& r) {
  st.imbalance_before = finite_or_null(r.imbalance);
  st.row_kurtosis_before = r.row_kurtosis_mean;
  st.col_kurtosis_before = r.col_kurtosis_mean;
}

void fill_after(TensorStats& st, const MatrixReport& r) {
  st.imbalance_after = finite_or_null(r.imbalance);
  st.row_kurtosis_after = r.row_kurtosis_mean;
  st.col_kurtosis_after = r.col_kurtosis_mean;
}

}  // namespace

WeightMatrix reconstruct(const ArtifactTensor& t) {
  auto w = dequantize(t.qm);
  return t.transposed ? w.transposed() : w;
}

ArtifactTensor quantize_tensor(std::string name, const WeightMatrix& input, const QuantizeRequest& req,
                               const CalibrationSet* calib) {
  if (req.transpose && req.method == Method::Asinq) {
    throw InvalidArgumentError("asinq scales input channels and cannot run transposed");
  }
  std::optional<WeightMatrix> transposed;
  if (req.transpose) transposed = input.transposed();
  const WeightMatrix& w = transposed ? *transposed : input;
  ArtifactTensor out;
  out.transposed = req.transpose;
  out.name = std::move(name);
  out.method = std::string(to_string(req.method));
  const auto before = analyze(w);
  fill_before(out.stats, before);

  QuantizeOptions opts = req.opts;
  std::vector<TileFactors> factors;
  switch (req.method) {
    case Method::Rtn: {
      opts.param_kind = ParamKind::ScaleShift;
      const std::size_t domains =
          opts.tile_spec.mode == TilingMode::OneD ? 1 : tile_partition(w.rows(), w.cols(), opts.tile_spec).size();
      factors.assign(domains, TileFactors{});
      out.qm = quantize_with_tile_factors(w.view(), opts, factors);
      fill_after(out.stats, before);
      return out;
    }
    case Method::Sinq:
      if (opts.param_kind == ParamKind::ScaleShift) {
        throw InvalidArgumentError("sinq needs a dual-scale parameterization");
      }
      factors = compute_tile_factors(w.view(), opts, req.sinkhorn);
      out.qm = quantize_with_tile_factors(w.view(), opts, factors);
      break;
    case Method::Asinq: {
      if (!calib) throw InvalidArgumentError("asinq requires calibration activations");
      auto res = asinq_quantize(w, *calib, opts, req.sinkhorn, req.search);
      out.qm = std::move(res.qm);
      out.alpha = res.alpha_star;
      factors = std::move(res.factors);
      break;
    }
  }
  fill_after(out.stats, analyze(apply_tile_factors(w.view(), opts.tile_spec, factors)));
  return out;
}

}  // namespace sinq
