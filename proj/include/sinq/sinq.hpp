// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sinq/matrix.hpp"
#include "sinq/quantizer.hpp"
#include "sinq/sinkhorn.hpp"

namespace sinq {

/// ScaleShift:      W ≈ s ⊙ (Q + z)
/// DualScale:       W ≈ s ⊙ Q ⊙ t
/// DualScaleShift:  W ≈ s ⊙ (Q + z) ⊙ t
enum class ParamKind { ScaleShift, DualScale, DualScaleShift };

enum class CodebookKind { Uniform, NF4 };

inline bool has_shift(ParamKind k) { return k != ParamKind::DualScale; }
inline bool has_column_scale(ParamKind k) { return k != ParamKind::ScaleShift; }
/// z is stored only for shifted kinds on the uniform grid; NF4 is always shift-free.
inline bool stores_shift(ParamKind k, CodebookKind c) { return has_shift(k) && c == CodebookKind::Uniform; }

std::string_view to_string(ParamKind k);
std::string_view to_string(CodebookKind k);
std::string_view to_string(TilingMode m);
std::string_view to_string(AuxPrecision p);
ParamKind parse_param_kind(std::string_view s);
CodebookKind parse_codebook(std::string_view s);
TilingMode parse_tiling(std::string_view s);
AuxPrecision parse_aux_precision(std::string_view s);

/// One stored tile: packed codes (tile row-major, byte padded), the per-row scale s
/// (row factors already folded in), optional per-row shift z, and in TwoD mode the tile's
/// own column scale segment t.
struct PackedTile {
  TileRange range;
  std::vector<std::uint8_t> codes;
  AuxVector scale;
  std::optional<AuxVector> shift;
  std::optional<AuxVector> col_scale;

  friend bool operator==(const PackedTile&, const PackedTile&) = default;
};

struct DualScaleQuantizedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int bits = 4;
  TileSpec tile_spec;
  ParamKind param_kind = ParamKind::DualScaleShift;
  CodebookKind codebook = CodebookKind::Uniform;
  /// Precision of s and z. Column scales t are always Float16.
  AuxPrecision aux_precision = AuxPrecision::Float16;
  std::vector<PackedTile> tiles;
  /// OneD dual-scale kinds: one length-cols vector shared by all column groups.
  std::optional<AuxVector> col_scale;

  /// Throws FormatError if the parts are inconsistent with the header fields.
  void validate() const;

  friend bool operator==(const DualScaleQuantizedMatrix&, const DualScaleQuantizedMatrix&) = default;
};

inline bool stores_shift(const DualScaleQuantizedMatrix& qm) { return stores_shift(qm.param_kind, qm.codebook); }

struct QuantizeOptions {
  int bits = 4;
  TileSpec tile_spec{TilingMode::OneD, 64};
  ParamKind param_kind = ParamKind::DualScaleShift;
  CodebookKind codebook = CodebookKind::Uniform;
  AuxPrecision aux_precision = AuxPrecision::Float16;

  /// Throws InvalidArgumentError for unsupported combinations.
  void validate() const;
};

/// Diagonal factors for one normalization domain (the full matrix in OneD, one tile in
/// TwoD). Empty vectors mean all ones.
struct TileFactors {
  std::vector<double> row;
  std::vector<double> col;
};

/// Normalization factors per domain, as sinq_quantize computes them. Appends one trace
/// per normalized domain when `traces` is non-null.
std::vector<TileFactors> compute_tile_factors(MatrixView w, const QuantizeOptions& opts, const SinkhornConfig& cfg,
                                              std::vector<SinkhornTrace>* traces = nullptr);

/// Quantizes with one factor set (OneD) or one per tile in partition order (TwoD).
DualScaleQuantizedMatrix quantize_with_tile_factors(MatrixView w, const QuantizeOptions& opts,
                                                    std::span<const TileFactors> factors);

/// W[i][j] / (row[i]·col[j]) with the factors of each domain: the matrix the quantizer
/// sees before t is rounded to Float16.
WeightMatrix apply_tile_factors(MatrixView w, const TileSpec& spec, std::span<const TileFactors> factors);

/// Quantizes W given fixed diagonal factors: the quantizer sees W[i][j] / (row[i]·col[j]),
/// row factors are folded into s and col factors become t. Empty `row`/`col` mean ones.
/// In TwoD mode the global factors are sliced per tile and t is stored per tile.
DualScaleQuantizedMatrix quantize_with_factors(MatrixView w, std::span<const double> row, std::span<const double> col,
                                               const QuantizeOptions& opts);

/// Normalize (Sinkhorn) then quantize. OneD normalizes the full matrix once; TwoD
/// normalizes each tile independently. ScaleShift cannot store column factors, so it
/// requires cfg.max_iters == 0 (the plain RTN pipeline).
DualScaleQuantizedMatrix sinq_quantize(const WeightMatrix& w, const QuantizeOptions& opts,
                                       const SinkhornConfig& cfg = {});

/// Plain round-to-nearest baseline: ScaleShift, no normalization.
DualScaleQuantizedMatrix rtn_quantize(const WeightMatrix& w, int bits, const TileSpec& tile_spec,
                                      AuxPrecision aux = AuxPrecision::Float16);

WeightMatrix dequantize(const DualScaleQuantizedMatrix& qm);

/// Which side the activation vector multiplies.
enum class Contraction {
  /// y = x · W_approx, x has `rows` entries; t scales the output.
  Left,
  /// y = W_approx · x, x has `cols` entries; t scales the input.
  Right,
};

/// Matrix-vector product against the quantized form without materializing W_approx.
/// Requires OneD tiling.
std::vector<float> quantized_forward(std::span<const float> x, const DualScaleQuantizedMatrix& qm,
                                     Contraction side = Contraction::Left);

/// Y = X · W_approxᵀ for a batch X (samples x cols), for any tiling. Row-wise decode of
/// s ⊙ (Q + z); t is applied to the activations.
std::vector<double> quantized_matmul_transposed(MatrixView x, const DualScaleQuantizedMatrix& qm);

/// Number of auxiliary parameters (scales, shifts, column scales) for a layout.
std::uint64_t aux_param_count(std::size_t rows, std::size_t cols, const TileSpec& spec, ParamKind kind);

/// Fixed header cost charged per quantized matrix (shape, bit width, layout enums).
inline constexpr std::uint64_t kMetadataBits = 128;

/// Packed code bits + aux payload bits + kMetadataBits.
std::uint64_t memory_footprint_bits(const DualScaleQuantizedMatrix& qm);

}  // namespace sinq
