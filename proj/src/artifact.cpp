// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/artifact.hpp"

#include <cstring>

#include "json.hpp"

#include "sinq/container.hpp"
#include "sinq/error.hpp"

namespace sinq {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kMagicLen = 5;
constexpr std::size_t kPrefixLen = kMagicLen + 4;

std::size_t align_up(std::size_t v) { return (v + kBlobAlignment - 1) / kBlobAlignment * kBlobAlignment; }

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> opt_from(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

class BlobWriter {
 public:
  ordered_json add(const std::vector<std::uint8_t>& bytes) {
    data_.resize(align_up(data_.size()), 0);
    const std::size_t off = data_.size();
    data_.insert(data_.end(), bytes.begin(), bytes.end());
    return {{"offset", off}, {"length", bytes.size()}};
  }
  const std::vector<std::uint8_t>& data() const { return data_; }

 private:
  std::vector<std::uint8_t> data_;
};

std::span<const std::uint8_t> blob_at(std::span<const std::uint8_t> data, const ordered_json& ref) {
  const auto off = ref.at("offset").get<std::size_t>();
  const auto len = ref.at("length").get<std::size_t>();
  if (off % kBlobAlignment != 0) throw FormatError("artifact: blob is not 64-byte aligned");
  if (off > data.size() || len > data.size() - off) throw FormatError("artifact: blob out of bounds");
  return data.subspan(off, len);
}

// Splits a concatenated per-tile aux blob back into vectors of the given lengths.
std::vector<AuxVector> split_aux(std::span<const std::uint8_t> blob, AuxPrecision p,
                                 const std::vector<std::size_t>& lengths) {
  std::vector<AuxVector> out;
  std::size_t pos = 0;
  for (std::size_t len : lengths) {
    const std::size_t n = AuxVector::serialized_size(p, len);
    if (n > blob.size() - pos) throw FormatError("artifact: aux blob too short");
    out.push_back(AuxVector::parse(blob.subspan(pos, n), p, len));
    pos += n;
  }
  if (pos != blob.size()) throw FormatError("artifact: aux blob has trailing bytes");
  return out;
}

}  // namespace

std::vector<std::uint8_t> QuantArtifact::serialize() const {
  BlobWriter blobs;
  ordered_json list = ordered_json::array();
  for (const auto& t : tensors) {
    const auto& qm = t.qm;
    qm.validate();
    std::vector<std::uint8_t> codes, scale, shift, col;
    for (const auto& tile : qm.tiles) {
      codes.insert(codes.end(), tile.codes.begin(), tile.codes.end());
      tile.scale.append_to(scale);
      if (tile.shift) tile.shift->append_to(shift);
      if (tile.col_scale) tile.col_scale->append_to(col);
    }
    if (qm.col_scale) qm.col_scale->append_to(col);

    ordered_json b;
    b["codes"] = blobs.add(codes);
    b["scale"] = blobs.add(scale);
    b["shift"] = stores_shift(qm) ? blobs.add(shift) : ordered_json(nullptr);
    b["col_scale"] = has_column_scale(qm.param_kind) ? blobs.add(col) : ordered_json(nullptr);

    ordered_json e;
    e["name"] = t.name;
    e["shape"] = {qm.rows, qm.cols};
    e["bits"] = qm.bits;
    e["tiling"] = to_string(qm.tile_spec.mode);
    e["group_size"] = qm.tile_spec.group_size;
    e["params"] = to_string(qm.param_kind);
    e["codebook"] = to_string(qm.codebook);
    e["aux"] = to_string(qm.aux_precision);
    e["col_scale_precision"] = "f16";
    e["method"] = t.method;
    e["alpha"] = opt(t.alpha);
    e["transposed"] = t.transposed;
    e["stats"] = {{"imbalance_before", opt(t.stats.imbalance_before)},
                  {"imbalance_after", opt(t.stats.imbalance_after)},
                  {"row_kurtosis_before", opt(t.stats.row_kurtosis_before)},
                  {"row_kurtosis_after", opt(t.stats.row_kurtosis_after)},
                  {"col_kurtosis_before", opt(t.stats.col_kurtosis_before)},
                  {"col_kurtosis_after", opt(t.stats.col_kurtosis_after)}};
    e["blobs"] = std::move(b);
    list.push_back(std::move(e));
  }
  ordered_json manifest = {{"format", "SINQ1"}, {"version", 1}, {"tensors", std::move(list)}};
  const std::string text = manifest.dump();
  if (text.size() > 0xffffffffu) throw FormatError("artifact: manifest too large");

  const std::size_t data_start = align_up(kPrefixLen + text.size());
  std::vector<std::uint8_t> out(data_start, 0);
  std::memcpy(out.data(), kArtifactMagic, kMagicLen);
  const auto mlen = static_cast<std::uint32_t>(text.size());
  std::memcpy(out.data() + kMagicLen, &mlen, 4);
  std::memcpy(out.data() + kPrefixLen, text.data(), text.size());
  out.insert(out.end(), blobs.data().begin(), blobs.data().end());
  return out;
}

QuantArtifact QuantArtifact::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPrefixLen || std::memcmp(bytes.data(), kArtifactMagic, kMagicLen) != 0) {
    throw FormatError("artifact: missing SINQ1 magic");
  }
  std::uint32_t mlen = 0;
  std::memcpy(&mlen, bytes.data() + kMagicLen, 4);
  if (mlen > bytes.size() - kPrefixLen) throw FormatError("artifact: manifest length exceeds file size");
  const std::size_t data_start = align_up(kPrefixLen + mlen);
  if (data_start > bytes.size()) throw FormatError("artifact: truncated before data region");
  const auto data = bytes.subspan(data_start);
  const auto* mbegin = reinterpret_cast<const char*>(bytes.data() + kPrefixLen);

  QuantArtifact art;
  try {
    const auto manifest = ordered_json::parse(mbegin, mbegin + mlen);
    if (manifest.at("format") != "SINQ1") throw FormatError("artifact: unknown format tag");
    if (manifest.at("version") != 1) throw FormatError("artifact: unsupported version");
    for (const auto& e : manifest.at("tensors")) {
      ArtifactTensor t;
      t.name = e.at("name").get<std::string>();
      t.method = e.at("method").get<std::string>();
      t.alpha = opt_from(e.at("alpha"));
      t.transposed = e.at("transposed").get<bool>();
      const auto& st = e.at("stats");
      t.stats = {opt_from(st.at("imbalance_before")),    opt_from(st.at("imbalance_after")),
                 opt_from(st.at("row_kurtosis_before")), opt_from(st.at("row_kurtosis_after")),
                 opt_from(st.at("col_kurtosis_before")), opt_from(st.at("col_kurtosis_after"))};
      if (e.at("col_scale_precision") != "f16") throw FormatError("artifact: column scales must be f16");

      auto& qm = t.qm;
      const auto& shape = e.at("shape");
      if (!shape.is_array() || shape.size() != 2) throw FormatError("artifact: shape must be 2-D");
      qm.rows = shape[0].get<std::size_t>();
      qm.cols = shape[1].get<std::size_t>();
      if (qm.rows == 0 || qm.cols == 0) throw FormatError("artifact: empty shape");
      qm.bits = e.at("bits").get<int>();
      const auto group = e.at("group_size").get<std::size_t>();
      if (group == 0) throw FormatError("artifact: group size 0");
      try {
        qm.tile_spec = TileSpec{parse_tiling(e.at("tiling").get<std::string>()), group};
        qm.param_kind = parse_param_kind(e.at("params").get<std::string>());
        qm.codebook = parse_codebook(e.at("codebook").get<std::string>());
        qm.aux_precision = parse_aux_precision(e.at("aux").get<std::string>());
        QuantizeOptions{qm.bits, qm.tile_spec, qm.param_kind, qm.codebook, qm.aux_precision}.validate();
      } catch (const InvalidArgumentError& err) {
        throw FormatError(std::string("artifact: ") + err.what());
      }

      const auto& b = e.at("blobs");
      const auto codes = blob_at(data, b.at("codes"));
      if (qm.rows > codes.size() * 8 || qm.cols > codes.size() * 8 / qm.rows) {
        throw FormatError("artifact: code blob too short for shape");
      }
      const auto ranges = tile_partition(qm.rows, qm.cols, qm.tile_spec);
      std::size_t pos = 0;
      std::vector<std::size_t> row_lens, col_lens;
      for (const auto& r : ranges) {
        PackedTile tile;
        tile.range = r;
        const std::size_t n = packed_size(r.size(), qm.bits);
        if (n > codes.size() - pos) throw FormatError("artifact: code blob too short");
        tile.codes.assign(codes.begin() + pos, codes.begin() + pos + n);
        pos += n;
        qm.tiles.push_back(std::move(tile));
        row_lens.push_back(r.rows());
        col_lens.push_back(r.cols());
      }
      if (pos != codes.size()) throw FormatError("artifact: code blob has trailing bytes");

      auto scales = split_aux(blob_at(data, b.at("scale")), qm.aux_precision, row_lens);
      for (std::size_t k = 0; k < ranges.size(); ++k) qm.tiles[k].scale = std::move(scales[k]);
      if (stores_shift(qm)) {
        auto shifts = split_aux(blob_at(data, b.at("shift")), qm.aux_precision, row_lens);
        for (std::size_t k = 0; k < ranges.size(); ++k) qm.tiles[k].shift = std::move(shifts[k]);
      } else if (!b.at("shift").is_null()) {
        throw FormatError("artifact: unexpected shift blob");
      }
      if (has_column_scale(qm.param_kind)) {
        const auto blob = blob_at(data, b.at("col_scale"));
        if (qm.tile_spec.mode == TilingMode::OneD) {
          auto v = split_aux(blob, AuxPrecision::Float16, {qm.cols});
          qm.col_scale = std::move(v[0]);
        } else {
          auto v = split_aux(blob, AuxPrecision::Float16, col_lens);
          for (std::size_t k = 0; k < ranges.size(); ++k) qm.tiles[k].col_scale = std::move(v[k]);
        }
      } else if (!b.at("col_scale").is_null()) {
        throw FormatError("artifact: unexpected column scale blob");
      }
      qm.validate();
      art.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& err) {
    throw FormatError(std::string("artifact: bad manifest: ") + err.what());
  }
  return art;
}

void QuantArtifact::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

QuantArtifact QuantArtifact::load(const std::filesystem::path& path) { return parse(read_file(path)); }

}  // namespace sinq
