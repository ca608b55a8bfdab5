// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/quantizer.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>

#include "sinq/error.hpp"
#include "sinq/half.hpp"

namespace sinq {

UniformCodebook::UniformCodebook(int bits) : bits_(bits) {
  if (bits < 2 || bits > 8) {
    throw InvalidArgumentError("uniform codebook needs 2 <= bits <= 8, got " + std::to_string(bits));
  }
}

bool is_supported_bit_width(int bits) { return bits == 2 || bits == 3 || bits == 4 || bits == 6 || bits == 8; }

NormalFloatCodebook::NormalFloatCodebook(const std::array<float, 16>& levels) : levels_(levels) {
  if (levels_.front() != -1.0f || levels_.back() != 1.0f) {
    throw InvalidArgumentError("normal-float codebook must span [-1, 1]");
  }
  int zeros = 0;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (k > 0 && !(levels_[k] > levels_[k - 1])) {
      throw InvalidArgumentError("normal-float levels must be strictly increasing");
    }
    if (levels_[k] == 0.0f) {
      zero_code_ = static_cast<std::uint8_t>(k);
      ++zeros;
    }
  }
  if (zeros != 1) {
    throw InvalidArgumentError("normal-float codebook must contain exactly one zero level");
  }
}

std::uint8_t NormalFloatCodebook::nearest(float x) const {
  // First level >= x; the answer is it or its predecessor.
  const auto it = std::lower_bound(levels_.begin(), levels_.end(), x,
                                   [](float level, float v) { return level < v; });
  if (it == levels_.begin()) return 0;
  if (it == levels_.end()) return 15;
  const auto hi = static_cast<std::size_t>(it - levels_.begin());
  const double d_lo = static_cast<double>(x) - levels_[hi - 1];
  const double d_hi = static_cast<double>(levels_[hi]) - x;
  return static_cast<std::uint8_t>(d_lo <= d_hi ? hi - 1 : hi);
}

const NormalFloatCodebook& nf4_levels() {
  // Offset 0.9677083: 8 positive quantiles of linspace(offset, 0.5, 9), 7 negative of
  // linspace(offset, 0.5, 8), a zero, all divided by the largest magnitude.
  static const NormalFloatCodebook codebook({
      -1.0f,
      -0.6961928009986877f,
      -0.5250730514526367f,
      -0.39491748809814453f,
      -0.28444138169288635f,
      -0.18477343022823334f,
      -0.09105003625154495f,
      0.0f,
      0.07958029955625534f,
      0.16093020141124725f,
      0.24611230194568634f,
      0.33791524171829224f,
      0.44070982933044434f,
      0.5626170039176941f,
      0.7229568362236023f,
      1.0f,
  });
  return codebook;
}

UniformFit fit_uniform_tile(MatrixView tile, int bits) {
  const UniformCodebook cb(bits);
  if (tile.rows() == 0 || tile.cols() == 0) {
    throw DimensionError("fit_uniform_tile: empty tile");
  }
  UniformFit fit;
  fit.scale.resize(tile.rows());
  fit.shift.resize(tile.rows());
  for (std::size_t i = 0; i < tile.rows(); ++i) {
    const auto row = tile.row(i);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    const double range = static_cast<double>(*hi) - *lo;
    double s = range / cb.max_code();
    if (!(s > kScaleEpsilon)) s = kScaleEpsilon;
    fit.scale[i] = static_cast<float>(s);
    fit.shift[i] = static_cast<float>(*lo / s);
  }
  return fit;
}

std::vector<std::uint8_t> rtn_quantize_tile(MatrixView tile, std::span<const float> scale,
                                            std::span<const float> shift, int bits) {
  const UniformCodebook cb(bits);
  if (scale.size() != tile.rows() || shift.size() != tile.rows()) {
    throw ShapeMismatchError("rtn_quantize_tile: one scale and shift per row required");
  }
  std::vector<std::uint8_t> codes(tile.size());
  for (std::size_t i = 0; i < tile.rows(); ++i) {
    const float s = scale[i];
    const float z = shift[i];
    if (!(s > 0.0f)) {
      throw InvalidArgumentError("rtn_quantize_tile: scales must be positive");
    }
    const auto row = tile.row(i);
    std::uint8_t* out = codes.data() + i * tile.cols();
    for (std::size_t j = 0; j < row.size(); ++j) {
      out[j] = rtn_code(row[j] / s, z, cb.max_code());
    }
  }
  return codes;
}

QuantizedTile uniform_quantize_tile(MatrixView tile, int bits) {
  auto fit = fit_uniform_tile(tile, bits);
  QuantizedTile q;
  q.rows = tile.rows();
  q.cols = tile.cols();
  q.codes = rtn_quantize_tile(tile, fit.scale, fit.shift, bits);
  q.scale = std::move(fit.scale);
  q.shift = std::move(fit.shift);
  return q;
}

std::vector<float> dequantize_uniform_tile(const QuantizedTile& tile) {
  if (!tile.shift) {
    throw InvalidArgumentError("dequantize_uniform_tile: tile has no shift");
  }
  std::vector<float> out(tile.rows * tile.cols);
  for (std::size_t i = 0; i < tile.rows; ++i) {
    const float s = tile.scale[i];
    const float z = (*tile.shift)[i];
    for (std::size_t j = 0; j < tile.cols; ++j) {
      const std::size_t k = i * tile.cols + j;
      out[k] = s * (static_cast<float>(tile.codes[k]) + z);
    }
  }
  return out;
}

double SymmetricGrid::fit(double absmax) const {
  const double s = absmax / hi();
  return s > kScaleEpsilon ? s : kScaleEpsilon;
}

std::uint8_t SymmetricGrid::encode(float w_over_s) const {
  const float q = std::clamp(std::nearbyint(w_over_s), static_cast<float>(lo()), static_cast<float>(hi()));
  const auto v = static_cast<std::int32_t>(q);
  return static_cast<std::uint8_t>(static_cast<std::uint32_t>(v) & ((1u << bits) - 1u));
}

std::int32_t SymmetricGrid::decode(std::uint8_t code) const {
  const std::int32_t v = code;
  return (v & (1 << (bits - 1))) ? v - (1 << bits) : v;
}

QuantizedTile codebook_quantize_tile(MatrixView tile, const NormalFloatCodebook& codebook) {
  if (tile.rows() == 0 || tile.cols() == 0) {
    throw DimensionError("codebook_quantize_tile: empty tile");
  }
  QuantizedTile q;
  q.rows = tile.rows();
  q.cols = tile.cols();
  q.codes.resize(tile.size());
  q.scale.resize(tile.rows());
  for (std::size_t i = 0; i < tile.rows(); ++i) {
    const auto row = tile.row(i);
    double absmax = 0.0;
    for (float v : row) absmax = std::max(absmax, static_cast<double>(std::abs(v)));
    const float s = static_cast<float>(absmax > kScaleEpsilon ? absmax : kScaleEpsilon);
    q.scale[i] = s;
    std::uint8_t* out = q.codes.data() + i * tile.cols();
    for (std::size_t j = 0; j < row.size(); ++j) {
      out[j] = codebook.nearest(row[j] / s);
    }
  }
  return q;
}

std::vector<std::uint8_t> pack_codes(std::span<const std::uint8_t> codes, int bits) {
  if (bits < 1 || bits > 8) {
    throw InvalidArgumentError("pack_codes: bits must be in [1, 8]");
  }
  const std::uint32_t limit = 1u << bits;
  std::vector<std::uint8_t> out(packed_size(codes.size(), bits), 0);
  std::size_t bitpos = 0;
  for (std::uint8_t c : codes) {
    if (c >= limit) {
      throw RangeError("pack_codes: code " + std::to_string(c) + " does not fit in " + std::to_string(bits) + " bits");
    }
    const std::size_t byte = bitpos >> 3;
    const unsigned offset = bitpos & 7u;
    const std::uint32_t v = static_cast<std::uint32_t>(c) << offset;
    out[byte] |= static_cast<std::uint8_t>(v & 0xffu);
    if (offset + static_cast<unsigned>(bits) > 8u) out[byte + 1] |= static_cast<std::uint8_t>(v >> 8);
    bitpos += static_cast<std::size_t>(bits);
  }
  return out;
}

std::vector<std::uint8_t> unpack_codes(std::span<const std::uint8_t> bytes, std::size_t count, int bits) {
  if (bits < 1 || bits > 8) {
    throw InvalidArgumentError("unpack_codes: bits must be in [1, 8]");
  }
  if (bytes.size() < packed_size(count, bits)) {
    throw FormatError("unpack_codes: stream too short");
  }
  const std::uint32_t mask = (1u << bits) - 1u;
  std::vector<std::uint8_t> out(count);
  std::size_t bitpos = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t byte = bitpos >> 3;
    const unsigned offset = bitpos & 7u;
    std::uint32_t v = bytes[byte];
    if (offset + static_cast<unsigned>(bits) > 8u) v |= static_cast<std::uint32_t>(bytes[byte + 1]) << 8;
    out[k] = static_cast<std::uint8_t>((v >> offset) & mask);
    bitpos += static_cast<std::size_t>(bits);
  }
  return out;
}

std::uint64_t AuxVector::payload_bits() const {
  if (precision == AuxPrecision::Float16) return 16ull * length;
  return 8ull * length + 64ull;
}

std::size_t AuxVector::serialized_size(AuxPrecision precision, std::size_t length) {
  return precision == AuxPrecision::Float16 ? 2 * length : 8 + length;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

void AuxVector::append_to(std::vector<std::uint8_t>& out) const {
  if (precision == AuxPrecision::Float16) {
    for (std::uint16_t h : halves) {
      out.push_back(static_cast<std::uint8_t>(h & 0xffu));
      out.push_back(static_cast<std::uint8_t>(h >> 8));
    }
  } else {
    put_u32(out, std::bit_cast<std::uint32_t>(scale));
    put_u32(out, std::bit_cast<std::uint32_t>(shift));
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
}

AuxVector AuxVector::parse(std::span<const std::uint8_t> in, AuxPrecision precision, std::size_t length) {
  if (in.size() != serialized_size(precision, length)) {
    throw FormatError("aux vector: payload size mismatch");
  }
  AuxVector a;
  a.precision = precision;
  a.length = length;
  if (precision == AuxPrecision::Float16) {
    a.halves.resize(length);
    for (std::size_t k = 0; k < length; ++k) {
      a.halves[k] = static_cast<std::uint16_t>(in[2 * k] | (in[2 * k + 1] << 8));
    }
  } else {
    a.scale = std::bit_cast<float>(get_u32(in.data()));
    a.shift = std::bit_cast<float>(get_u32(in.data() + 4));
    if (!std::isfinite(a.scale) || !std::isfinite(a.shift) || !(a.scale > 0.0f)) {
      throw FormatError("aux vector: invalid int8 header");
    }
    a.bytes.assign(in.begin() + 8, in.end());
  }
  return a;
}

AuxVector encode_aux(std::span<const float> v, AuxPrecision precision) {
  AuxVector a;
  a.precision = precision;
  a.length = v.size();
  for (float x : v) {
    if (!std::isfinite(x)) throw InvalidArgumentError("encode_aux: non-finite entry");
  }
  if (precision == AuxPrecision::Float16) {
    a.halves.resize(v.size());
    std::transform(v.begin(), v.end(), a.halves.begin(), float_to_half);
    return a;
  }
  a.bytes.resize(v.size());
  if (v.empty()) {
    a.scale = static_cast<float>(kScaleEpsilon);
    return a;
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double step = (static_cast<double>(*hi) - *lo) / 255.0;
  if (!(step > kScaleEpsilon)) step = kScaleEpsilon;
  a.scale = static_cast<float>(step);
  a.shift = *lo;
  const double s = a.scale;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double q = std::nearbyint((static_cast<double>(v[k]) - a.shift) / s);
    a.bytes[k] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
  }
  return a;
}

std::vector<float> decode_aux(const AuxVector& a) {
  std::vector<float> out(a.length);
  if (a.precision == AuxPrecision::Float16) {
    if (a.halves.size() != a.length) throw FormatError("aux vector: length mismatch");
    std::transform(a.halves.begin(), a.halves.end(), out.begin(), half_to_float);
    return out;
  }
  if (a.bytes.size() != a.length) throw FormatError("aux vector: length mismatch");
  for (std::size_t k = 0; k < a.length; ++k) {
    out[k] = static_cast<float>(static_cast<double>(a.shift) + a.bytes[k] * static_cast<double>(a.scale));
  }
  return out;
}

}  // namespace sinq
