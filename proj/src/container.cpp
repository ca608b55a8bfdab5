// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "sinq/error.hpp"
#include "sinq/half.hpp"

namespace sinq {

static_assert(std::endian::native == std::endian::little, "containers assume a little-endian host");

namespace {

using ordered_json = nlohmann::ordered_json;

std::size_t dtype_size(TensorDtype d) { return d == TensorDtype::Float32 ? 4 : 2; }

const char* dtype_name(TensorDtype d) { return d == TensorDtype::Float32 ? "F32" : "F16"; }

TensorDtype parse_dtype(const std::string& s) {
  if (s == "F32" || s == "float32") return TensorDtype::Float32;
  if (s == "F16" || s == "float16") return TensorDtype::Float16;
  throw FormatError("container: unsupported dtype '" + s + "'");
}

}  // namespace

const NamedTensor* TensorContainer::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void TensorContainer::add(std::string name, WeightMatrix value, TensorDtype dtype) {
  if (name.empty() || name == "__metadata__") throw InvalidArgumentError("container: invalid tensor name");
  if (find(name)) throw InvalidArgumentError("container: duplicate tensor '" + name + "'");
  tensors.push_back({std::move(name), dtype, std::move(value)});
}

std::vector<std::uint8_t> TensorContainer::serialize() const {
  ordered_json header = ordered_json::object();
  std::size_t offset = 0;
  for (const auto& t : tensors) {
    const std::size_t len = t.value.size() * dtype_size(t.dtype);
    header[t.name] = {{"dtype", dtype_name(t.dtype)},
                      {"shape", {t.value.rows(), t.value.cols()}},
                      {"data_offsets", {offset, offset + len}}};
    offset += len;
  }
  std::string text = header.dump();
  text.append((8 - text.size() % 8) % 8, ' ');

  std::vector<std::uint8_t> out(8 + text.size() + offset);
  const std::uint64_t hlen = text.size();
  std::memcpy(out.data(), &hlen, 8);
  std::memcpy(out.data() + 8, text.data(), text.size());
  std::uint8_t* data = out.data() + 8 + text.size();
  for (const auto& t : tensors) {
    const auto v = t.value.data();
    if (t.dtype == TensorDtype::Float32) {
      std::memcpy(data, v.data(), v.size() * 4);
      data += v.size() * 4;
    } else {
      for (float f : v) {
        const std::uint16_t h = float_to_half(f);
        std::memcpy(data, &h, 2);
        data += 2;
      }
    }
  }
  return out;
}

TensorContainer TensorContainer::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("container: truncated header length");
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, bytes.data(), 8);
  if (hlen > bytes.size() - 8) throw FormatError("container: header length exceeds file size");
  const auto* hbegin = reinterpret_cast<const char*>(bytes.data() + 8);
  ordered_json header;
  try {
    header = ordered_json::parse(hbegin, hbegin + hlen);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container: bad JSON header: ") + e.what());
  }
  if (!header.is_object()) throw FormatError("container: header is not an object");

  const std::span<const std::uint8_t> data = bytes.subspan(8 + hlen);
  struct Entry {
    std::string name;
    TensorDtype dtype;
    std::size_t rows, cols, begin, end;
  };
  std::vector<Entry> entries;
  try {
    for (const auto& [name, info] : header.items()) {
      if (name == "__metadata__") continue;
      Entry e{name, parse_dtype(info.at("dtype").get<std::string>()), 0, 0, 0, 0};
      const auto& shape = info.at("shape");
      if (!shape.is_array() || shape.size() != 2) throw FormatError("container: tensor '" + name + "' is not 2-D");
      e.rows = shape[0].get<std::size_t>();
      e.cols = shape[1].get<std::size_t>();
      const auto& off = info.at("data_offsets");
      if (!off.is_array() || off.size() != 2) throw FormatError("container: bad data_offsets for '" + name + "'");
      e.begin = off[0].get<std::size_t>();
      e.end = off[1].get<std::size_t>();
      entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container: bad tensor entry: ") + e.what());
  }

  std::vector<const Entry*> by_offset;
  for (const auto& e : entries) {
    if (e.rows == 0 || e.cols == 0) throw FormatError("container: tensor '" + e.name + "' has an empty shape");
    if (e.rows > std::numeric_limits<std::size_t>::max() / e.cols / 4) {
      throw FormatError("container: tensor '" + e.name + "' is too large");
    }
    if (e.begin > e.end || e.end > data.size()) throw FormatError("container: tensor '" + e.name + "' out of bounds");
    if (e.end - e.begin != e.rows * e.cols * dtype_size(e.dtype)) {
      throw FormatError("container: tensor '" + e.name + "' byte length does not match its shape");
    }
    by_offset.push_back(&e);
  }
  std::sort(by_offset.begin(), by_offset.end(), [](const Entry* a, const Entry* b) { return a->begin < b->begin; });
  for (std::size_t k = 1; k < by_offset.size(); ++k) {
    if (by_offset[k]->begin < by_offset[k - 1]->end) throw FormatError("container: overlapping tensors");
  }

  TensorContainer c;
  for (const Entry* e : by_offset) {
    const std::size_t n = e->rows * e->cols;
    std::vector<float> v(n);
    const std::uint8_t* src = data.data() + e->begin;
    if (e->dtype == TensorDtype::Float32) {
      std::memcpy(v.data(), src, n * 4);
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        std::uint16_t h;
        std::memcpy(&h, src + 2 * k, 2);
        v[k] = half_to_float(h);
      }
    }
    try {
      c.tensors.push_back({e->name, e->dtype, WeightMatrix(e->rows, e->cols, std::move(v))});
    } catch (const Error& err) {
      throw FormatError("container: tensor '" + e->name + "': " + err.what());
    }
  }
  return c;
}

void TensorContainer::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

TensorContainer TensorContainer::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace sinq
