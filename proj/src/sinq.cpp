// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/sinq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sinq/error.hpp"

namespace sinq {

std::string_view to_string(ParamKind k) {
  switch (k) {
    case ParamKind::ScaleShift: return "scale-shift";
    case ParamKind::DualScale: return "dual";
    case ParamKind::DualScaleShift: return "dual-shift";
  }
  return "?";
}

std::string_view to_string(CodebookKind k) { return k == CodebookKind::Uniform ? "uniform" : "nf4"; }
std::string_view to_string(TilingMode m) { return m == TilingMode::OneD ? "1d" : "2d"; }
std::string_view to_string(AuxPrecision p) { return p == AuxPrecision::Float16 ? "f16" : "i8"; }

ParamKind parse_param_kind(std::string_view s) {
  if (s == "scale-shift") return ParamKind::ScaleShift;
  if (s == "dual") return ParamKind::DualScale;
  if (s == "dual-shift") return ParamKind::DualScaleShift;
  throw InvalidArgumentError("unknown param kind '" + std::string(s) + "'");
}

CodebookKind parse_codebook(std::string_view s) {
  if (s == "uniform") return CodebookKind::Uniform;
  if (s == "nf4") return CodebookKind::NF4;
  throw InvalidArgumentError("unknown codebook '" + std::string(s) + "'");
}

TilingMode parse_tiling(std::string_view s) {
  if (s == "1d") return TilingMode::OneD;
  if (s == "2d") return TilingMode::TwoD;
  throw InvalidArgumentError("unknown tiling '" + std::string(s) + "'");
}

AuxPrecision parse_aux_precision(std::string_view s) {
  if (s == "f16") return AuxPrecision::Float16;
  if (s == "i8") return AuxPrecision::Int8;
  throw InvalidArgumentError("unknown aux precision '" + std::string(s) + "'");
}

namespace {

std::vector<float> to_floats(std::span<const double> v) {
  std::vector<float> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return static_cast<float>(x); });
  return out;
}

// Per-row fit, aux encoding and rounding for one tile. `row` holds the tile's row
// factors (empty = ones); `col` holds the decoded column scales the codes are computed
// against (empty = no column scale).
PackedTile quantize_tile(MatrixView tile, const TileRange& range, std::span<const double> row,
                         std::span<const float> col, const QuantizeOptions& opts) {
  const std::size_t n = tile.rows();
  const std::size_t m = tile.cols();
  const bool shifted = stores_shift(opts.param_kind, opts.codebook);
  const bool nf4 = opts.codebook == CodebookKind::NF4;
  const UniformCodebook uniform(nf4 ? 4 : opts.bits);
  const SymmetricGrid grid{opts.bits};

  std::vector<float> scale(n);
  std::vector<float> shift(shifted ? n : 0);
  std::vector<double> v(m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = tile.row(i);
    const double r = row.empty() ? 1.0 : row[i];
    for (std::size_t j = 0; j < m; ++j) {
      v[j] = col.empty() ? src[j] / r : src[j] / (r * col[j]);
    }
    double s = 0.0;
    if (shifted) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      s = (*hi - *lo) / uniform.max_code();
      if (*hi == *lo && *lo != 0.0) {
        // The eps rule (s = 1e-8, z = c / 1e-8) does not survive aux storage (f16 flushes
        // s to 0); s = |c|, z = +-1 with Q = 0 keeps the constant up to aux rounding.
        s = std::abs(*lo);
      } else if (!(s > kScaleEpsilon)) {
        s = kScaleEpsilon;
      }
      shift[i] = static_cast<float>(*lo / s);
    } else {
      double absmax = 0.0;
      for (double x : v) absmax = std::max(absmax, std::abs(x));
      s = nf4 ? std::max(absmax, kScaleEpsilon) : grid.fit(absmax);
    }
    scale[i] = static_cast<float>(s * r);
  }

  PackedTile out;
  out.range = range;
  out.scale = encode_aux(scale, opts.aux_precision);
  const auto s_dec = decode_aux(out.scale);
  std::vector<float> z_dec;
  if (shifted) {
    out.shift = encode_aux(shift, opts.aux_precision);
    z_dec = decode_aux(*out.shift);
  }

  const NormalFloatCodebook* cb = nf4 ? &nf4_levels() : nullptr;
  std::vector<std::uint8_t> codes(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = tile.row(i);
    const float s = s_dec[i];
    std::uint8_t* dst = codes.data() + i * m;
    if (shifted) {
      const float z = z_dec[i];
      if (col.empty()) {
        if (!(s > 0.0f)) {
          std::fill(dst, dst + m, std::uint8_t{0});
          continue;
        }
        for (std::size_t j = 0; j < m; ++j) dst[j] = rtn_code(src[j] / s, z, uniform.max_code());
      } else {
        for (std::size_t j = 0; j < m; ++j) {
          const float denom = s * col[j];
          dst[j] = denom > 0.0f ? rtn_code(src[j] / denom, z, uniform.max_code()) : std::uint8_t{0};
        }
      }
    } else {
      const std::uint8_t zero = nf4 ? cb->zero_code() : std::uint8_t{0};
      for (std::size_t j = 0; j < m; ++j) {
        const float denom = col.empty() ? s : s * col[j];
        if (!(denom > 0.0f)) {
          dst[j] = zero;
        } else {
          dst[j] = nf4 ? cb->nearest(src[j] / denom) : grid.encode(src[j] / denom);
        }
      }
    }
  }
  out.codes = pack_codes(codes, opts.bits);
  return out;
}

std::span<const float> slice(const std::vector<float>& v, std::size_t start, std::size_t len) {
  return v.empty() ? std::span<const float>{} : std::span<const float>(v).subspan(start, len);
}

}  // namespace

void QuantizeOptions::validate() const {
  if (codebook == CodebookKind::NF4) {
    if (bits != 4) throw InvalidArgumentError("nf4 codebook requires bits = 4");
    if (param_kind == ParamKind::DualScaleShift) {
      throw InvalidArgumentError("nf4 codebook is shift-free; use dual or scale-shift");
    }
  } else {
    UniformCodebook{bits};
  }
  if (tile_spec.group_size == 0) throw InvalidArgumentError("group size must be >= 1");
}

void DualScaleQuantizedMatrix::validate() const {
  if (rows == 0 || cols == 0) throw FormatError("quantized matrix: empty shape");
  QuantizeOptions opts{bits, tile_spec, param_kind, codebook, aux_precision};
  try {
    opts.validate();
  } catch (const InvalidArgumentError& e) {
    throw FormatError(std::string("quantized matrix: ") + e.what());
  }
  const auto expected = tile_partition(rows, cols, tile_spec);
  if (tiles.size() != expected.size()) throw FormatError("quantized matrix: tile count mismatch");
  const bool shifted = stores_shift(param_kind, codebook);
  const bool dual = has_column_scale(param_kind);
  const bool one_d = tile_spec.mode == TilingMode::OneD;
  auto check_aux = [](const AuxVector& a, AuxPrecision p, std::size_t len, const char* what) {
    const bool ok = a.precision == p && a.length == len &&
                    (p == AuxPrecision::Float16 ? a.halves.size() == len : a.bytes.size() == len);
    if (!ok) throw FormatError(std::string("quantized matrix: bad ") + what + " vector");
  };
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const auto& t = tiles[k];
    if (!(t.range == expected[k])) throw FormatError("quantized matrix: tile range mismatch");
    if (t.codes.size() != packed_size(t.range.size(), bits)) throw FormatError("quantized matrix: code stream size");
    check_aux(t.scale, aux_precision, t.range.rows(), "scale");
    if (shifted != t.shift.has_value()) throw FormatError("quantized matrix: shift presence");
    if (t.shift) check_aux(*t.shift, aux_precision, t.range.rows(), "shift");
    const bool tile_cols = dual && !one_d;
    if (tile_cols != t.col_scale.has_value()) throw FormatError("quantized matrix: tile column scale presence");
    if (t.col_scale) check_aux(*t.col_scale, AuxPrecision::Float16, t.range.cols(), "column scale");
  }
  if ((dual && one_d) != col_scale.has_value()) throw FormatError("quantized matrix: column scale presence");
  if (col_scale) check_aux(*col_scale, AuxPrecision::Float16, cols, "column scale");
}

DualScaleQuantizedMatrix quantize_with_tile_factors(MatrixView w, const QuantizeOptions& opts,
                                                    std::span<const TileFactors> factors) {
  opts.validate();
  const auto ranges = tile_partition(w.rows(), w.cols(), opts.tile_spec);
  const bool one_d = opts.tile_spec.mode == TilingMode::OneD;
  const bool dual = has_column_scale(opts.param_kind);
  if (factors.size() != (one_d ? 1 : ranges.size())) {
    throw InvalidArgumentError("quantize: one factor set (OneD) or one per tile (TwoD) required");
  }
  auto check_len = [&](const TileFactors& f, std::size_t n, std::size_t m) {
    if (!f.row.empty() && f.row.size() != n) throw ShapeMismatchError("quantize: row factor length");
    if (!f.col.empty() && f.col.size() != m) throw ShapeMismatchError("quantize: column factor length");
    if (!dual && !f.col.empty() && std::any_of(f.col.begin(), f.col.end(), [](double c) { return c != 1.0; })) {
      throw InvalidArgumentError("scale-shift cannot store column factors");
    }
  };

  DualScaleQuantizedMatrix qm;
  qm.rows = w.rows();
  qm.cols = w.cols();
  qm.bits = opts.bits;
  qm.tile_spec = opts.tile_spec;
  qm.param_kind = opts.param_kind;
  qm.codebook = opts.codebook;
  qm.aux_precision = opts.aux_precision;
  qm.tiles.reserve(ranges.size());

  if (one_d) {
    const auto& f = factors[0];
    check_len(f, w.rows(), w.cols());
    std::vector<float> t_dec;
    if (dual) {
      const std::vector<double> ones(f.col.empty() ? w.cols() : 0, 1.0);
      qm.col_scale = encode_aux(to_floats(f.col.empty() ? ones : f.col), AuxPrecision::Float16);
      t_dec = decode_aux(*qm.col_scale);
    }
    for (const auto& r : ranges) {
      qm.tiles.push_back(quantize_tile(w.subview(r), r, f.row, slice(t_dec, r.col_start, r.cols()), opts));
    }
  } else {
    for (std::size_t k = 0; k < ranges.size(); ++k) {
      const auto& r = ranges[k];
      const auto& f = factors[k];
      check_len(f, r.rows(), r.cols());
      std::optional<AuxVector> t_aux;
      std::vector<float> t_dec;
      if (dual) {
        const std::vector<double> ones(f.col.empty() ? r.cols() : 0, 1.0);
        t_aux = encode_aux(to_floats(f.col.empty() ? ones : f.col), AuxPrecision::Float16);
        t_dec = decode_aux(*t_aux);
      }
      auto tile = quantize_tile(w.subview(r), r, f.row, t_dec, opts);
      tile.col_scale = std::move(t_aux);
      qm.tiles.push_back(std::move(tile));
    }
  }
  return qm;
}

std::vector<TileFactors> compute_tile_factors(MatrixView w, const QuantizeOptions& opts, const SinkhornConfig& cfg,
                                              std::vector<SinkhornTrace>* traces) {
  std::vector<TileFactors> out;
  const bool normalize = has_column_scale(opts.param_kind) && cfg.max_iters > 0;
  if (opts.param_kind == ParamKind::ScaleShift && cfg.max_iters > 0) {
    throw InvalidArgumentError("scale-shift stores no column factors; normalization requires max_iters = 0");
  }
  auto run = [&](MatrixView v) {
    TileFactors f;
    if (normalize && v.rows() >= 2 && v.cols() >= 2) {
      auto sf = sinkhorn_factors(v, cfg);
      f.row = std::move(sf.row);
      f.col = std::move(sf.col);
      if (traces) traces->push_back(std::move(sf.trace));
    }
    return f;
  };
  if (opts.tile_spec.mode == TilingMode::OneD) {
    out.push_back(run(w));
  } else {
    for (const auto& r : tile_partition(w.rows(), w.cols(), opts.tile_spec)) out.push_back(run(w.subview(r)));
  }
  return out;
}

WeightMatrix apply_tile_factors(MatrixView w, const TileSpec& spec, std::span<const TileFactors> factors) {
  const bool one_d = spec.mode == TilingMode::OneD;
  const auto ranges = tile_partition(w.rows(), w.cols(), spec);
  if (factors.size() != (one_d ? 1 : ranges.size())) throw InvalidArgumentError("apply_tile_factors: factor count");
  std::vector<float> out(w.size());
  for (std::size_t k = 0; k < (one_d ? 1 : ranges.size()); ++k) {
    const TileRange r = one_d ? TileRange{0, w.rows(), 0, w.cols()} : ranges[k];
    const auto& f = factors[k];
    if ((!f.row.empty() && f.row.size() != r.rows()) || (!f.col.empty() && f.col.size() != r.cols())) {
      throw ShapeMismatchError("apply_tile_factors: factor length");
    }
    for (std::size_t i = 0; i < r.rows(); ++i) {
      const auto src = w.row(r.row_start + i);
      const double rf = f.row.empty() ? 1.0 : f.row[i];
      float* dst = out.data() + (r.row_start + i) * w.cols();
      for (std::size_t j = 0; j < r.cols(); ++j) {
        const double cf = f.col.empty() ? 1.0 : f.col[j];
        dst[r.col_start + j] = static_cast<float>(src[r.col_start + j] / (rf * cf));
      }
    }
  }
  return {w.rows(), w.cols(), std::move(out)};
}

DualScaleQuantizedMatrix quantize_with_factors(MatrixView w, std::span<const double> row, std::span<const double> col,
                                               const QuantizeOptions& opts) {
  if (opts.tile_spec.mode == TilingMode::OneD) {
    const TileFactors f{{row.begin(), row.end()}, {col.begin(), col.end()}};
    return quantize_with_tile_factors(w, opts, std::span<const TileFactors>(&f, 1));
  }
  if (!row.empty() && row.size() != w.rows()) throw ShapeMismatchError("quantize: row factor length");
  if (!col.empty() && col.size() != w.cols()) throw ShapeMismatchError("quantize: column factor length");
  std::vector<TileFactors> per_tile;
  for (const auto& r : tile_partition(w.rows(), w.cols(), opts.tile_spec)) {
    TileFactors f;
    if (!row.empty()) f.row.assign(row.begin() + r.row_start, row.begin() + r.row_end);
    if (!col.empty()) f.col.assign(col.begin() + r.col_start, col.begin() + r.col_end);
    per_tile.push_back(std::move(f));
  }
  return quantize_with_tile_factors(w, opts, per_tile);
}

DualScaleQuantizedMatrix sinq_quantize(const WeightMatrix& w, const QuantizeOptions& opts, const SinkhornConfig& cfg) {
  opts.validate();
  const auto factors = compute_tile_factors(w.view(), opts, cfg, nullptr);
  return quantize_with_tile_factors(w.view(), opts, factors);
}

DualScaleQuantizedMatrix rtn_quantize(const WeightMatrix& w, int bits, const TileSpec& tile_spec, AuxPrecision aux) {
  const QuantizeOptions opts{bits, tile_spec, ParamKind::ScaleShift, CodebookKind::Uniform, aux};
  const TileFactors none;
  const std::vector<TileFactors> factors(tile_spec.mode == TilingMode::OneD
                                             ? 1
                                             : tile_partition(w.rows(), w.cols(), tile_spec).size(),
                                         none);
  return quantize_with_tile_factors(w.view(), opts, factors);
}

namespace {

struct DecodedTile {
  std::vector<std::uint8_t> codes;
  std::vector<float> scale;
  std::vector<float> shift;
  std::vector<float> col;
};

DecodedTile decode_tile(const DualScaleQuantizedMatrix& qm, std::size_t index) {
  const auto& t = qm.tiles[index];
  DecodedTile d;
  d.codes = unpack_codes(t.codes, t.range.size(), qm.bits);
  d.scale = decode_aux(t.scale);
  if (t.shift) d.shift = decode_aux(*t.shift);
  if (t.col_scale) {
    d.col = decode_aux(*t.col_scale);
  } else if (qm.col_scale) {
    const auto all = decode_aux(*qm.col_scale);
    d.col.assign(all.begin() + t.range.col_start, all.begin() + t.range.col_end);
  }
  return d;
}

void decode_row(const DualScaleQuantizedMatrix& qm, const PackedTile& tile, const DecodedTile& d, std::size_t i,
                float* out) {
  const std::size_t m = tile.range.cols();
  const std::uint8_t* q = d.codes.data() + i * m;
  const float s = d.scale[i];
  if (!d.shift.empty()) {
    const float z = d.shift[i];
    for (std::size_t j = 0; j < m; ++j) out[j] = s * (static_cast<float>(q[j]) + z);
  } else if (qm.codebook == CodebookKind::NF4) {
    const auto& cb = nf4_levels();
    for (std::size_t j = 0; j < m; ++j) out[j] = s * cb.level(q[j]);
  } else {
    const SymmetricGrid grid{qm.bits};
    for (std::size_t j = 0; j < m; ++j) out[j] = s * static_cast<float>(grid.decode(q[j]));
  }
}

}  // namespace

WeightMatrix dequantize(const DualScaleQuantizedMatrix& qm) {
  qm.validate();
  std::vector<float> out(qm.rows * qm.cols);
  std::vector<float> buf;
  for (std::size_t k = 0; k < qm.tiles.size(); ++k) {
    const auto& tile = qm.tiles[k];
    const auto d = decode_tile(qm, k);
    const std::size_t m = tile.range.cols();
    buf.resize(m);
    for (std::size_t i = 0; i < tile.range.rows(); ++i) {
      decode_row(qm, tile, d, i, buf.data());
      float* dst = out.data() + (tile.range.row_start + i) * qm.cols + tile.range.col_start;
      if (d.col.empty()) {
        std::copy(buf.begin(), buf.end(), dst);
      } else {
        for (std::size_t j = 0; j < m; ++j) dst[j] = buf[j] * d.col[j];
      }
    }
  }
  for (float v : out) {
    if (!std::isfinite(v)) throw FormatError("dequantize: non-finite reconstruction");
  }
  return {qm.rows, qm.cols, std::move(out)};
}

std::vector<float> quantized_forward(std::span<const float> x, const DualScaleQuantizedMatrix& qm, Contraction side) {
  qm.validate();
  if (qm.tile_spec.mode != TilingMode::OneD) {
    throw InvalidArgumentError("quantized_forward requires OneD tiling");
  }
  const std::size_t in = side == Contraction::Left ? qm.rows : qm.cols;
  if (x.size() != in) throw ShapeMismatchError("quantized_forward: activation length mismatch");

  std::vector<float> t_all;
  if (qm.col_scale) t_all = decode_aux(*qm.col_scale);
  std::vector<double> acc(side == Contraction::Left ? qm.cols : qm.rows, 0.0);
  std::vector<float> buf;
  for (std::size_t k = 0; k < qm.tiles.size(); ++k) {
    const auto& tile = qm.tiles[k];
    DecodedTile d;
    d.codes = unpack_codes(tile.codes, tile.range.size(), qm.bits);
    d.scale = decode_aux(tile.scale);
    if (tile.shift) d.shift = decode_aux(*tile.shift);
    const std::size_t c0 = tile.range.col_start;
    const std::size_t m = tile.range.cols();
    buf.resize(m);
    for (std::size_t i = 0; i < tile.range.rows(); ++i) {
      decode_row(qm, tile, d, i, buf.data());  // s ⊙ (Q + z), no t
      if (side == Contraction::Left) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) acc[c0 + j] += xi * buf[j];
      } else {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double xt = t_all.empty() ? x[c0 + j] : static_cast<double>(x[c0 + j]) * t_all[c0 + j];
          dot += buf[j] * xt;
        }
        acc[i] += dot;
      }
    }
  }
  std::vector<float> y(acc.size());
  for (std::size_t j = 0; j < acc.size(); ++j) {
    const double scale = (side == Contraction::Left && !t_all.empty()) ? t_all[j] : 1.0;
    y[j] = static_cast<float>(acc[j] * scale);
  }
  return y;
}

std::vector<double> quantized_matmul_transposed(MatrixView x, const DualScaleQuantizedMatrix& qm) {
  qm.validate();
  if (x.cols() != qm.cols) throw ShapeMismatchError("quantized_matmul_transposed: activation width mismatch");
  const std::size_t samples = x.rows();
  std::vector<double> y(samples * qm.rows, 0.0);
  std::vector<float> buf;
  std::vector<double> xt;
  for (std::size_t k = 0; k < qm.tiles.size(); ++k) {
    const auto& tile = qm.tiles[k];
    const auto d = decode_tile(qm, k);
    const std::size_t c0 = tile.range.col_start;
    const std::size_t m = tile.range.cols();
    // Activations block scaled by this tile's column scales.
    xt.resize(samples * m);
    for (std::size_t s = 0; s < samples; ++s) {
      const auto xr = x.row(s);
      for (std::size_t j = 0; j < m; ++j) {
        xt[s * m + j] = d.col.empty() ? xr[c0 + j] : static_cast<double>(xr[c0 + j]) * d.col[j];
      }
    }
    buf.resize(m);
    for (std::size_t i = 0; i < tile.range.rows(); ++i) {
      decode_row(qm, tile, d, i, buf.data());
      const std::size_t out_row = tile.range.row_start + i;
      for (std::size_t s = 0; s < samples; ++s) {
        const double* xs = xt.data() + s * m;
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j) dot += xs[j] * buf[j];
        y[s * qm.rows + out_row] += dot;
      }
    }
  }
  return y;
}

std::uint64_t aux_param_count(std::size_t rows, std::size_t cols, const TileSpec& spec, ParamKind kind) {
  const bool one_d = spec.mode == TilingMode::OneD;
  const std::uint64_t per_row = has_shift(kind) ? 2 : 1;
  std::uint64_t total = 0;
  for (const auto& r : tile_partition(rows, cols, spec)) {
    total += per_row * r.rows();
    if (!one_d && has_column_scale(kind)) total += r.cols();
  }
  if (one_d && has_column_scale(kind)) total += cols;
  return total;
}

std::uint64_t memory_footprint_bits(const DualScaleQuantizedMatrix& qm) {
  std::uint64_t bits = kMetadataBits;
  for (const auto& t : qm.tiles) {
    bits += 8ull * t.codes.size();
    bits += t.scale.payload_bits();
    if (t.shift) bits += t.shift->payload_bits();
    if (t.col_scale) bits += t.col_scale->payload_bits();
  }
  if (qm.col_scale) bits += qm.col_scale->payload_bits();
  return bits;
}

}  // namespace sinq
