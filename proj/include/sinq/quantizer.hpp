// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sinq/matrix.hpp"

namespace sinq {

/// Scale floor for degenerate (constant) rows and vectors.
inline constexpr double kScaleEpsilon = 1e-8;

/// Integer levels 0 .. 2^bits - 1.
class UniformCodebook {
 public:
  explicit UniformCodebook(int bits);
  int bits() const { return bits_; }
  std::uint32_t max_code() const { return (1u << bits_) - 1u; }

 private:
  int bits_;
};

/// Uniform widths the toolkit accepts end to end.
bool is_supported_bit_width(int bits);

/// 16 ascending levels in [-1, 1] with an exact zero.
class NormalFloatCodebook {
 public:
  explicit NormalFloatCodebook(const std::array<float, 16>& levels);

  const std::array<float, 16>& levels() const { return levels_; }
  float level(std::uint8_t code) const { return levels_[code]; }
  std::uint8_t zero_code() const { return zero_code_; }

  /// Index of the nearest level; exact ties go to the lower index.
  std::uint8_t nearest(float x) const;

 private:
  std::array<float, 16> levels_;
  std::uint8_t zero_code_ = 0;
};

/// The NF4 codebook (equal-probability normal quantiles, normalized to [-1, 1]).
const NormalFloatCodebook& nf4_levels();

/// Output of the per-tile primitives: unpacked codes (tile row-major) plus per-row
/// scale and, for shifted grids, shift.
struct QuantizedTile {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> codes;
  std::vector<float> scale;
  std::optional<std::vector<float>> shift;
};

struct UniformFit {
  std::vector<float> scale;
  std::vector<float> shift;
};

/// Min/max range fit per row: s = (max - min) / (2^bits - 1), z = min / s.
/// Constant rows get s = eps and z = value / eps.
UniformFit fit_uniform_tile(MatrixView tile, int bits);

/// Round-half-even code for w / s - z, clamped to [0, max_code]. Evaluated in float32.
inline std::uint8_t rtn_code(float w_over_s, float z, std::uint32_t max_code) {
  const float q = std::nearbyint(w_over_s - z);
  if (!(q > 0.0f)) return 0;
  if (q >= static_cast<float>(max_code)) return static_cast<std::uint8_t>(max_code);
  return static_cast<std::uint8_t>(q);
}

/// codes = clamp(round(w / s - z), 0, 2^bits - 1) per row.
std::vector<std::uint8_t> rtn_quantize_tile(MatrixView tile, std::span<const float> scale,
                                            std::span<const float> shift, int bits);

/// Fit + round in one call (the plain RTN primitive).
QuantizedTile uniform_quantize_tile(MatrixView tile, int bits);

/// s·(Q + z) for a uniform tile.
std::vector<float> dequantize_uniform_tile(const QuantizedTile& tile);

/// Symmetric (shift-free) uniform grid used by the dual-scale parameterization:
/// signed levels -2^(bits-1) .. 2^(bits-1) - 1 stored as two's complement in `bits`.
struct SymmetricGrid {
  int bits;
  std::int32_t lo() const { return -(1 << (bits - 1)); }
  std::int32_t hi() const { return (1 << (bits - 1)) - 1; }
  /// Scale for a row whose largest magnitude is `absmax`.
  double fit(double absmax) const;
  std::uint8_t encode(float w_over_s) const;
  std::int32_t decode(std::uint8_t code) const;
};

/// Per row: s = max|w| (eps floor), codes = nearest level of w / s. Dequant is s·level[code].
QuantizedTile codebook_quantize_tile(MatrixView tile, const NormalFloatCodebook& codebook);

/// Little-endian bitstream: code i occupies bits [i·bits, (i+1)·bits); zero-padded to a
/// byte boundary. Throws RangeError if a code does not fit.
std::vector<std::uint8_t> pack_codes(std::span<const std::uint8_t> codes, int bits);
std::vector<std::uint8_t> unpack_codes(std::span<const std::uint8_t> bytes, std::size_t count, int bits);
inline std::size_t packed_size(std::size_t count, int bits) {
  return (count * static_cast<std::size_t>(bits) + 7) / 8;
}

enum class AuxPrecision { Float16, Int8 };

/// Encoded auxiliary vector. Float16 holds one half per entry; Int8 holds one byte per
/// entry plus a float32 scale and shift for the whole vector.
struct AuxVector {
  AuxPrecision precision = AuxPrecision::Float16;
  std::size_t length = 0;
  std::vector<std::uint16_t> halves;
  std::vector<std::uint8_t> bytes;
  float scale = 0.0f;
  float shift = 0.0f;

  /// Storage cost in bits (8 per entry + 64 header for Int8, 16 per entry for Float16).
  std::uint64_t payload_bits() const;

  /// Serialized form: raw little-endian halves, or [scale f32][shift f32][codes].
  void append_to(std::vector<std::uint8_t>& out) const;
  static std::size_t serialized_size(AuxPrecision precision, std::size_t length);
  static AuxVector parse(std::span<const std::uint8_t> in, AuxPrecision precision, std::size_t length);

  friend bool operator==(const AuxVector&, const AuxVector&) = default;
};

AuxVector encode_aux(std::span<const float> v, AuxPrecision precision);
std::vector<float> decode_aux(const AuxVector& a);

}  // namespace sinq
