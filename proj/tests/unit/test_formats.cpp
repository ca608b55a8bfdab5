// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "sinq/artifact.hpp"
#include "sinq/calibration.hpp"
#include "sinq/container.hpp"
#include "sinq/error.hpp"
#include "sinq/pipeline.hpp"
#include "sinq/report.hpp"

using namespace sinq;
using nlohmann::json;

namespace {

std::vector<std::uint8_t> raw_container(const std::string& header, std::size_t data_bytes) {
  std::vector<std::uint8_t> out(8);
  const std::uint64_t n = header.size();
  for (int k = 0; k < 8; ++k) out[k] = static_cast<std::uint8_t>(n >> (8 * k));
  out.insert(out.end(), header.begin(), header.end());
  out.resize(out.size() + data_bytes, 0);
  return out;
}

QuantArtifact sample_artifact() {
  QuantArtifact a;
  const auto w = gen_synthetic(40, 72, 0.01, 50, 1);
  QuantizeRequest req;
  a.tensors.push_back(quantize_tensor("layer.0", w, req));
  req.method = Method::Rtn;
  req.opts.aux_precision = AuxPrecision::Int8;
  a.tensors.push_back(quantize_tensor("layer.1", w, req));
  req.method = Method::Sinq;
  req.opts.param_kind = ParamKind::DualScale;
  req.opts.codebook = CodebookKind::NF4;
  req.opts.tile_spec = TileSpec{TilingMode::TwoD, 32};
  a.tensors.push_back(quantize_tensor("layer.2", w, req));
  req.opts.codebook = CodebookKind::Uniform;
  req.opts.bits = 3;
  req.transpose = true;
  a.tensors.push_back(quantize_tensor("layer.3", w, req));
  req.method = Method::Asinq;
  req.transpose = false;
  req.opts.tile_spec = TileSpec{TilingMode::OneD, 24};
  req.search.grid = {0.0, 0.5, 1.0};
  const CalibrationSet c(gen_calibration(16, 72, 2, 4));
  a.tensors.push_back(quantize_tensor("layer.4", w, req, &c));
  return a;
}

}  // namespace

TEST_CASE("container round trip and layout") {
  TensorContainer c;
  c.add("b", gen_synthetic(3, 5, 0.0, 1, 1));
  c.add("a", gen_synthetic(4, 2, 0.0, 1, 2), TensorDtype::Float16);
  const auto bytes = c.serialize();
  std::uint64_t n = 0;
  for (int k = 0; k < 8; ++k) n |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  CHECK(n % 8 == 0);
  const auto header = json::parse(std::string(bytes.begin() + 8, bytes.begin() + 8 + n));
  CHECK(header["b"]["dtype"] == "F32");
  CHECK(header["a"]["dtype"] == "F16");
  CHECK(header["b"]["data_offsets"] == json::array({0, 60}));
  CHECK(bytes.size() == 8 + n + 60 + 16);

  const auto back = TensorContainer::parse(bytes);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].name == "b");
  CHECK(back.tensors[0].value == c.tensors[0].value);
  CHECK(back.tensors[1].dtype == TensorDtype::Float16);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(back.tensors[1].value.data()[k] == doctest::Approx(c.tensors[1].value.data()[k]).epsilon(1e-3));
  }
  CHECK(back.serialize() == bytes);

  const auto dir = testutil::scratch_dir("container");
  c.save(dir / "w.bin");
  CHECK(TensorContainer::load(dir / "w.bin").serialize() == bytes);
  CHECK_THROWS_AS(TensorContainer::load(dir / "missing.bin"), IoError);
  CHECK_THROWS_AS(c.add("a", gen_synthetic(2, 2, 0.0, 1, 3)), InvalidArgumentError);
}

TEST_CASE("container accepts foreign headers") {
  const std::string h =
      R"({"__metadata__":{"k":"v"},"y":{"dtype":"float32","shape":[1,2],"data_offsets":[8,16]},)"
      R"("x":{"dtype":"F32","shape":[2,1],"data_offsets":[0,8]}})";
  auto bytes = raw_container(h, 16);
  const float vals[4] = {1, 2, 3, 4};
  std::memcpy(bytes.data() + 8 + h.size(), vals, 16);
  const auto c = TensorContainer::parse(bytes);
  REQUIRE(c.tensors.size() == 2);
  CHECK(c.tensors[0].name == "x");
  CHECK(c.tensors[0].value(1, 0) == 2.0f);
  CHECK(c.find("y")->value(0, 1) == 4.0f);
  CHECK(c.find("z") == nullptr);
}

TEST_CASE("container rejects malformed input") {
  auto check_bad = [](const std::string& h, std::size_t data) {
    CHECK_THROWS_AS(TensorContainer::parse(raw_container(h, data)), FormatError);
  };
  check_bad("not json", 0);
  check_bad(R"({"x":{"dtype":"I32","shape":[1,1],"data_offsets":[0,4]}})", 4);
  check_bad(R"({"x":{"dtype":"F32","shape":[1,2],"data_offsets":[0,4]}})", 4);
  check_bad(R"({"x":{"dtype":"F32","shape":[1,1],"data_offsets":[0,4]}})", 2);
  check_bad(R"({"x":{"dtype":"F32","shape":[1,1,1],"data_offsets":[0,4]}})", 4);
  check_bad(R"({"x":{"dtype":"F32","shape":[1,1],"data_offsets":[0,4]},)"
            R"("y":{"dtype":"F32","shape":[1,1],"data_offsets":[2,6]}})",
            8);
  CHECK_THROWS_AS(TensorContainer::parse(std::vector<std::uint8_t>(5)), FormatError);
  auto huge = raw_container("{}", 0);
  huge[7] = 0x7f;
  CHECK_THROWS_AS(TensorContainer::parse(huge), FormatError);

  const std::string h = R"({"x":{"dtype":"F32","shape":[1,1],"data_offsets":[0,4]}})";
  auto nan = raw_container(h, 4);
  const float v = NAN;
  std::memcpy(nan.data() + 8 + h.size(), &v, 4);
  CHECK_THROWS_AS(TensorContainer::parse(nan), FormatError);
}

TEST_CASE("artifact write read write is byte identical") {
  const auto a = sample_artifact();
  const auto bytes = a.serialize();
  CHECK(std::memcmp(bytes.data(), kArtifactMagic, 5) == 0);
  const auto back = QuantArtifact::parse(bytes);
  CHECK(back == a);
  CHECK(back.serialize() == bytes);
  for (std::size_t k = 0; k < a.tensors.size(); ++k) {
    CHECK(dequantize(back.tensors[k].qm) == dequantize(a.tensors[k].qm));
  }
  CHECK(back.tensors[3].transposed);
  CHECK(reconstruct(back.tensors[3]).rows() == 40);
  CHECK(back.tensors[4].alpha.has_value());

  const auto dir = testutil::scratch_dir("artifact");
  a.save(dir / "q.sinq");
  CHECK(QuantArtifact::load(dir / "q.sinq").serialize() == bytes);
}

TEST_CASE("artifact manifest and alignment") {
  const auto bytes = sample_artifact().serialize();
  std::uint32_t n = 0;
  for (int k = 0; k < 4; ++k) n |= static_cast<std::uint32_t>(bytes[5 + k]) << (8 * k);
  const auto m = json::parse(std::string(bytes.begin() + 9, bytes.begin() + 9 + n));
  CHECK(m["version"] == 1);
  const std::size_t base = (9 + n + 63) / 64 * 64;
  for (const auto& t : m["tensors"]) {
    for (const auto& [key, blob] : t["blobs"].items()) {
      if (blob.is_null()) continue;
      CHECK(blob["offset"].get<std::size_t>() % kBlobAlignment == 0);
      CHECK(base + blob["offset"].get<std::size_t>() + blob["length"].get<std::size_t>() <= bytes.size());
    }
  }
  CHECK(m["tensors"][1]["blobs"]["col_scale"].is_null());
  CHECK(m["tensors"][2]["blobs"]["shift"].is_null());
}

TEST_CASE("artifact rejects malformed input") {
  const auto good = sample_artifact().serialize();
  auto bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(QuantArtifact::parse(bad), FormatError);
  CHECK_THROWS_AS(QuantArtifact::parse(std::span(good).first(good.size() - 1)), FormatError);
  CHECK_THROWS_AS(QuantArtifact::parse(std::span(good).first(7)), FormatError);
  bad = good;
  bad[5] = 0xff;
  bad[6] = 0xff;
  CHECK_THROWS_AS(QuantArtifact::parse(bad), FormatError);

  // corrupt one manifest field at a time
  std::uint32_t n = 0;
  for (int k = 0; k < 4; ++k) n |= static_cast<std::uint32_t>(good[5 + k]) << (8 * k);
  const std::string manifest(good.begin() + 9, good.begin() + 9 + n);
  for (const auto& [from, to] : std::vector<std::pair<std::string, std::string>>{
           {R"("bits":4)", R"("bits":5)"},
           {R"("tiling":"1d")", R"("tiling":"3d")"},
           {R"("version":1)", R"("version":2)"},
           {R"("aux":"f16")", R"("aux":"x16")"}}) {
    auto pos = manifest.find(from);
    REQUIRE(pos != std::string::npos);
    auto edited = manifest;
    edited.replace(pos, from.size(), to);
    REQUIRE(edited.size() == manifest.size());
    auto bytes = good;
    std::copy(edited.begin(), edited.end(), bytes.begin() + 9);
    CHECK_THROWS_AS(QuantArtifact::parse(bytes), FormatError);
  }
}

TEST_CASE("report formatting") {
  const auto w = gen_synthetic(32, 64, 0.01, 50, 5);
  auto t = quantize_tensor("x", w, QuantizeRequest{});
  const auto rec = reconstruct(t);
  auto row = make_report_row(t, w, rec, 0.5);
  CHECK(row.mse == recon_error(w, rec));
  CHECK(row.total_bits == memory_footprint_bits(t.qm));
  CHECK(row.bits_per_weight == doctest::Approx(static_cast<double>(row.total_bits) / w.size()));
  RunReport r;
  r.rows.push_back(row);
  row.name = "y";
  row.stats.imbalance_before.reset();
  row.stats.row_kurtosis_after.reset();
  r.rows.push_back(row);
  const auto csv = r.to_csv();
  CHECK(csv.rfind("name,bits_per_weight,total_bits,imbalance_before,imbalance_after,row_kurtosis_before,"
                  "row_kurtosis_after,col_kurtosis_before,col_kurtosis_after,mse,wall_time_s\n",
                  0) == 0);
  const auto last = csv.substr(csv.find("\ny,") + 1);
  CHECK(last.find(",inf,") != std::string::npos);
  CHECK(last.find(",,") != std::string::npos);
  CHECK(r.total_bits() == 2 * row.total_bits);
  const auto j = json::parse(r.to_json());
  CHECK(j["tensors"].size() == 2);
  CHECK(j["metadata"]["bits_accounting"].get<std::string>().find("activations excluded") != std::string::npos);
}
