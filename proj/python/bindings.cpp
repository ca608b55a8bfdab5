// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "sinq/artifact.hpp"
#include "sinq/calibration.hpp"
#include "sinq/error.hpp"
#include "sinq/metrics.hpp"
#include "sinq/pipeline.hpp"
#include "sinq/sinkhorn.hpp"
#include "sinq/sinq.hpp"

namespace py = pybind11;
using namespace sinq;

namespace {

using FArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

WeightMatrix to_matrix(const FArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  std::vector<float> data(a.data(), a.data() + r * c);
  return {r, c, std::move(data)};
}

py::array_t<float> to_array(const WeightMatrix& w) {
  py::array_t<float> out({w.rows(), w.cols()});
  std::memcpy(out.mutable_data(), w.data().data(), w.size() * sizeof(float));
  return out;
}

QuantizeOptions make_opts(int bits, std::size_t group_size, const std::string& tiling, const std::string& params,
                          const std::string& codebook, const std::string& aux) {
  return {bits, TileSpec{parse_tiling(tiling), group_size}, parse_param_kind(params), parse_codebook(codebook),
          parse_aux_precision(aux)};
}

py::object imbalance_value(const Imbalance& im) {
  return py::float_(im.infinite ? std::numeric_limits<double>::infinity() : im.value);
}

}  // namespace

PYBIND11_MODULE(_sinq, m) {
  m.doc() = "SINQ weight quantization: Sinkhorn normalization, dual-scale quantizers, NF4, A-SINQ.";

  py::register_exception<ShapeMismatchError>(m, "ShapeMismatchError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<InvalidArgumentError>(m, "InvalidArgumentError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_OverflowError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<DualScaleQuantizedMatrix>(m, "QuantizedMatrix")
      .def_property_readonly("shape", [](const DualScaleQuantizedMatrix& q) { return py::make_tuple(q.rows, q.cols); })
      .def_readonly("bits", &DualScaleQuantizedMatrix::bits)
      .def_property_readonly("params", [](const DualScaleQuantizedMatrix& q) { return std::string(to_string(q.param_kind)); })
      .def_property_readonly("tiling", [](const DualScaleQuantizedMatrix& q) { return std::string(to_string(q.tile_spec.mode)); })
      .def_property_readonly("group_size", [](const DualScaleQuantizedMatrix& q) { return q.tile_spec.group_size; })
      .def_property_readonly("num_tiles", [](const DualScaleQuantizedMatrix& q) { return q.tiles.size(); })
      .def("memory_footprint_bits", &memory_footprint_bits)
      .def("bits_per_weight",
           [](const DualScaleQuantizedMatrix& q) {
             return static_cast<double>(memory_footprint_bits(q)) / static_cast<double>(q.rows * q.cols);
           })
      .def("dequantize", [](const DualScaleQuantizedMatrix& q) { return to_array(dequantize(q)); })
      .def("__eq__", [](const DualScaleQuantizedMatrix& a, const DualScaleQuantizedMatrix& b) { return a == b; });

  m.def("gen_synthetic",
        [](std::size_t rows, std::size_t cols, double frac, double scale, std::uint64_t seed) {
          return to_array(gen_synthetic(rows, cols, frac, scale, seed));
        },
        py::arg("rows"), py::arg("cols"), py::arg("outlier_frac") = 0.0, py::arg("outlier_scale") = 1.0,
        py::arg("seed") = 0);

  m.def("imbalance", [](const FArray& w) { return imbalance_value(imbalance(to_matrix(w))); });
  m.def("mean_kurtosis", [](const FArray& w, const std::string& axis) {
    return mean_kurtosis(to_matrix(w), axis == "row" ? Axis::PerRow : Axis::PerColumn);
  }, py::arg("w"), py::arg("axis") = "row");

  m.def("sinkhorn_normalize",
        [](const FArray& w, std::size_t max_iters, bool early_stop) {
          SinkhornConfig cfg;
          cfg.max_iters = max_iters;
          cfg.early_stop = early_stop;
          auto r = sinkhorn_normalize(to_matrix(w), cfg);
          std::vector<double> trace;
          for (const auto& im : r.trace.imbalance) trace.push_back(im.infinite ? INFINITY : im.value);
          return py::make_tuple(to_array(r.normalized), r.row_factors, r.col_factors, trace);
        },
        py::arg("w"), py::arg("max_iters") = 16, py::arg("early_stop") = true,
        "Returns (normalized, row_factors, col_factors, imbalance_trace).");

  m.def("rtn_quantize",
        [](const FArray& w, int bits, std::size_t group_size, const std::string& tiling, const std::string& aux) {
          return rtn_quantize(to_matrix(w), bits, TileSpec{parse_tiling(tiling), group_size}, parse_aux_precision(aux));
        },
        py::arg("w"), py::arg("bits") = 4, py::arg("group_size") = 64, py::arg("tiling") = "1d",
        py::arg("aux") = "f16");

  m.def("sinq_quantize",
        [](const FArray& w, int bits, std::size_t group_size, const std::string& tiling, const std::string& params,
           const std::string& codebook, const std::string& aux, std::size_t niter) {
          SinkhornConfig cfg;
          cfg.max_iters = niter;
          return sinq_quantize(to_matrix(w), make_opts(bits, group_size, tiling, params, codebook, aux), cfg);
        },
        py::arg("w"), py::arg("bits") = 4, py::arg("group_size") = 64, py::arg("tiling") = "1d",
        py::arg("params") = "dual-shift", py::arg("codebook") = "uniform", py::arg("aux") = "f16",
        py::arg("niter") = 16);

  m.def("asinq_quantize",
        [](const FArray& w, const FArray& x, int bits, std::size_t group_size, const std::string& tiling,
           const std::string& params, const std::string& aux, std::size_t alpha_points) {
          AlphaSearchConfig search;
          search.grid = AlphaSearchConfig::default_grid(alpha_points);
          auto r = asinq_quantize(to_matrix(w), CalibrationSet(to_matrix(x)),
                                  make_opts(bits, group_size, tiling, params, "uniform", aux), {}, search);
          return py::make_tuple(std::move(r.qm), r.alpha_star, r.objectives);
        },
        py::arg("w"), py::arg("x"), py::arg("bits") = 4, py::arg("group_size") = 64, py::arg("tiling") = "1d",
        py::arg("params") = "dual-shift", py::arg("aux") = "i8", py::arg("alpha_points") = 21,
        "Returns (qm, alpha_star, objectives).");

  m.def("quantized_forward",
        [](const FArray& x, const DualScaleQuantizedMatrix& qm, const std::string& side) {
          if (x.ndim() != 1) throw DimensionError("expected a 1-D activation vector");
          const std::span<const float> xs(x.data(), static_cast<std::size_t>(x.shape(0)));
          return quantized_forward(xs, qm, side == "left" ? Contraction::Left : Contraction::Right);
        },
        py::arg("x"), py::arg("qm"), py::arg("side") = "left");

  m.def("aux_param_count",
        [](std::size_t rows, std::size_t cols, std::size_t group_size, const std::string& tiling,
           const std::string& params) {
          return aux_param_count(rows, cols, TileSpec{parse_tiling(tiling), group_size}, parse_param_kind(params));
        },
        py::arg("rows"), py::arg("cols"), py::arg("group_size") = 64, py::arg("tiling") = "1d",
        py::arg("params") = "dual-shift");

  m.def("pack_codes", [](const std::vector<std::uint8_t>& codes, int bits) {
    const auto p = pack_codes(codes, bits);
    return py::bytes(reinterpret_cast<const char*>(p.data()), p.size());
  });
  m.def("unpack_codes", [](const py::bytes& b, std::size_t count, int bits) {
    const std::string s = b;
    return unpack_codes(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()), count, bits);
  });

  m.def("nf4_levels", [] {
    const auto& l = nf4_levels().levels();
    return std::vector<float>(l.begin(), l.end());
  });

  m.def("save_artifact",
        [](const std::string& path, const std::vector<std::pair<std::string, DualScaleQuantizedMatrix>>& items) {
          QuantArtifact art;
          for (const auto& [name, qm] : items) {
            ArtifactTensor t;
            t.name = name;
            t.qm = qm;
            art.tensors.push_back(std::move(t));
          }
          art.save(path);
        });
  m.def("load_artifact", [](const std::string& path) {
    std::vector<std::pair<std::string, DualScaleQuantizedMatrix>> out;
    for (auto& t : QuantArtifact::load(path).tensors) out.emplace_back(t.name, std::move(t.qm));
    return out;
  });
}
