// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "sinq/error.hpp"
#include "sinq/quantizer.hpp"

using namespace sinq;

namespace {

WeightMatrix one_row(std::vector<float> v) { return {1, v.size(), std::move(v)}; }

// Inverse standard normal CDF by bisection on erfc.
double norm_ppf(double p) {
  double lo = -10.0, hi = 10.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Equal-probability quantile construction: 8 positive and 7 negative levels between
// offset and 1/2, a reserved zero, normalized by the largest magnitude.
std::vector<double> nf4_oracle() {
  const double offset = 0.9677083;
  std::vector<double> v;
  for (int k = 0; k < 8; ++k) v.push_back(norm_ppf(offset + (0.5 - offset) * k / 8.0));
  for (int k = 0; k < 7; ++k) v.push_back(-norm_ppf(offset + (0.5 - offset) * k / 7.0));
  v.push_back(0.0);
  std::sort(v.begin(), v.end());
  const double mx = v.back();
  for (double& x : v) x /= mx;
  return v;
}

}  // namespace

TEST_CASE("uniform fit examples") {
  auto f = fit_uniform_tile(one_row({0, 1}).view(), 2);
  CHECK(f.scale[0] == doctest::Approx(1.0 / 3.0));
  CHECK(f.shift[0] == 0.0f);
  f = fit_uniform_tile(one_row({-1, 1}).view(), 4);
  CHECK(f.scale[0] == doctest::Approx(2.0 / 15.0));
  CHECK(f.shift[0] == doctest::Approx(-7.5));
  CHECK_THROWS_AS(fit_uniform_tile(one_row({1, 2}).view(), 9), InvalidArgumentError);
  CHECK_THROWS_AS(fit_uniform_tile(one_row({1, 2}).view(), 1), InvalidArgumentError);
}

TEST_CASE("constant rows reconstruct exactly") {
  for (float c : {0.0f, 0.3f, -1.75f, 12.5f, 1e-3f}) {
    const auto q = uniform_quantize_tile(one_row({c, c, c}).view(), 4);
    CHECK(q.scale[0] == static_cast<float>(kScaleEpsilon));
    for (float v : dequantize_uniform_tile(q)) CHECK(v == c);
  }
}

TEST_CASE("rtn codes: half-even example, grid identity, clamp") {
  const std::vector<float> s{1.0f / 3.0f};
  const std::vector<float> z{0.0f};
  const auto codes = rtn_quantize_tile(one_row({0, 0.5f, 1}).view(), s, z, 2);
  CHECK(codes == std::vector<std::uint8_t>{0, 2, 3});

  const std::vector<float> s2{0.125f};
  const std::vector<float> z2{-4.0f};
  std::vector<float> grid;
  for (int k = 0; k < 16; ++k) grid.push_back(0.125f * (static_cast<float>(k) - 4.0f));
  const auto g = rtn_quantize_tile(one_row(grid).view(), s2, z2, 4);
  for (int k = 0; k < 16; ++k) CHECK(g[k] == k);

  const auto c = rtn_quantize_tile(one_row({-100.0f, 100.0f}).view(), s2, z2, 4);
  CHECK(c[0] == 0);
  CHECK(c[1] == 15);
  CHECK_THROWS_AS(rtn_quantize_tile(one_row({1}).view(), std::vector<float>{0.0f}, z2, 4), InvalidArgumentError);
}

TEST_CASE("rtn properties: monotone, half-step bound, exhaustive nearest") {
  Rng rng(77);
  for (int bits : {2, 3, 4, 6, 8}) {
    std::vector<float> v(512);
    for (float& x : v) x = static_cast<float>(rng.normal());
    std::sort(v.begin(), v.end());
    const auto w = one_row(v);
    const auto q = uniform_quantize_tile(w.view(), bits);
    const auto rec = dequantize_uniform_tile(q);
    const double s = q.scale[0];
    const double z = (*q.shift)[0];
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k > 0) CHECK(q.codes[k] >= q.codes[k - 1]);
      CHECK(std::abs(rec[k] - v[k]) <= s / 2 * (1 + 1e-5) + 1e-6);
      double best = INFINITY;
      for (int l = 0; l < (1 << bits); ++l) best = std::min(best, std::abs(v[k] - s * (l + z)));
      const double got = std::abs(v[k] - s * (q.codes[k] + z));
      CHECK(got <= best + 1e-6 * s);
    }
  }
}

TEST_CASE("nf4 codebook structure and derivation") {
  const auto& cb = nf4_levels();
  const auto& l = cb.levels();
  CHECK(l.front() == -1.0f);
  CHECK(l.back() == 1.0f);
  CHECK(std::count(l.begin(), l.end(), 0.0f) == 1);
  for (std::size_t k = 1; k < l.size(); ++k) CHECK(l[k] > l[k - 1]);
  CHECK(l[cb.zero_code()] == 0.0f);

  const auto ref = nf4_oracle();
  REQUIRE(ref.size() == 16);
  for (std::size_t k = 0; k < 16; ++k) CHECK(l[k] == doctest::Approx(ref[k]).epsilon(1e-6));
}

TEST_CASE("nf4 nearest level and tie rule") {
  const auto& cb = nf4_levels();
  const auto& l = cb.levels();
  for (std::uint8_t k = 0; k < 16; ++k) CHECK(cb.nearest(l[k]) == k);
  CHECK(cb.nearest(-5.0f) == 0);
  CHECK(cb.nearest(5.0f) == 15);
  // A float exactly midway (in double) between two levels goes to the lower one.
  int ties = 0;
  for (std::size_t k = 0; k + 1 < 16; ++k) {
    const double mid = 0.5 * (static_cast<double>(l[k]) + l[k + 1]);
    const float mf = static_cast<float>(mid);
    if (static_cast<double>(mf) == mid) {
      CHECK(cb.nearest(mf) == k);
      ++ties;
    }
  }
  CHECK(ties > 0);

  CHECK_THROWS_AS(NormalFloatCodebook({-1, 0, 0.5f, 0.4f, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}), InvalidArgumentError);
}

TEST_CASE("nf4 tiles: zero row and permuted fixed points") {
  const auto& cb = nf4_levels();
  const auto z = codebook_quantize_tile(one_row({0, 0, 0, 0}).view(), cb);
  for (auto c : z.codes) CHECK(c == cb.zero_code());

  std::vector<float> row;
  const float s = 0.75f;
  for (std::size_t k = 0; k < 16; ++k) row.push_back(s * cb.level(static_cast<std::uint8_t>((k * 7) % 16)));
  const auto q = codebook_quantize_tile(one_row(row).view(), cb);
  CHECK(q.scale[0] == s);
  for (std::size_t k = 0; k < 16; ++k) CHECK(q.scale[0] * cb.level(q.codes[k]) == row[k]);
}

TEST_CASE("symmetric grid") {
  for (int bits : {2, 3, 4, 8}) {
    const SymmetricGrid g{bits};
    for (int v = g.lo(); v <= g.hi(); ++v) CHECK(g.decode(g.encode(static_cast<float>(v))) == v);
    CHECK(g.decode(g.encode(1e6f)) == g.hi());
    CHECK(g.decode(g.encode(-1e6f)) == g.lo());
    CHECK(g.fit(static_cast<double>(g.hi()) * 0.5) == doctest::Approx(0.5));
  }
  CHECK(SymmetricGrid{4}.encode(2.5f) == 2);  // half-even
}

TEST_CASE("pack codes format") {
  CHECK(pack_codes(std::vector<std::uint8_t>{1, 2}, 4) == std::vector<std::uint8_t>{0x21});
  CHECK(pack_codes(std::vector<std::uint8_t>(8, 7), 3) == std::vector<std::uint8_t>{0xff, 0xff, 0xff});
  CHECK(pack_codes(std::vector<std::uint8_t>{1}, 3) == std::vector<std::uint8_t>{0x01});
  CHECK(pack_codes(std::vector<std::uint8_t>{0, 1}, 6) == std::vector<std::uint8_t>{0x40, 0x00});
  CHECK_THROWS_AS(pack_codes(std::vector<std::uint8_t>{16}, 4), RangeError);
  CHECK_THROWS_AS(unpack_codes(std::vector<std::uint8_t>{0x21}, 3, 4), FormatError);

  Rng rng(3);
  for (int bits = 1; bits <= 8; ++bits) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::uint8_t> c(rng.below(200));
      for (auto& x : c) x = static_cast<std::uint8_t>(rng.below(1u << bits));
      const auto p = pack_codes(c, bits);
      CHECK(p.size() == packed_size(c.size(), bits));
      CHECK(unpack_codes(p, c.size(), bits) == c);
    }
  }
}

TEST_CASE("aux vectors") {
  const std::vector<float> constant(5, 0.37f);
  CHECK(decode_aux(encode_aux(constant, AuxPrecision::Int8)) == constant);

  for (float k : {1.0f, 0.01f, 3.5f}) {
    const std::vector<float> ends{0.0f, 255.0f * k};
    const auto d = decode_aux(encode_aux(ends, AuxPrecision::Int8));
    CHECK(d[0] == ends[0]);
    CHECK(d[1] == doctest::Approx(ends[1]).epsilon(1e-6));
  }

  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> v(1 + rng.below(100));
    for (float& x : v) x = static_cast<float>(rng.normal() * 2.0);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double bound = (static_cast<double>(*hi) - *lo) / 510.0 + 1e-7;
    const auto a = encode_aux(v, AuxPrecision::Int8);
    const auto d = decode_aux(a);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(std::abs(d[k] - v[k]) <= bound * (1 + 1e-6));
    CHECK(a.payload_bits() == 8 * v.size() + 64);

    std::vector<std::uint8_t> bytes;
    a.append_to(bytes);
    CHECK(bytes.size() == AuxVector::serialized_size(AuxPrecision::Int8, v.size()));
    CHECK(AuxVector::parse(bytes, AuxPrecision::Int8, v.size()) == a);

    const auto h = encode_aux(v, AuxPrecision::Float16);
    CHECK(h.payload_bits() == 16 * v.size());
    bytes.clear();
    h.append_to(bytes);
    CHECK(AuxVector::parse(bytes, AuxPrecision::Float16, v.size()) == h);
  }
  CHECK_THROWS_AS(encode_aux(std::vector<float>{NAN}, AuxPrecision::Int8), InvalidArgumentError);
  CHECK_THROWS_AS(AuxVector::parse(std::vector<std::uint8_t>(3), AuxPrecision::Int8, 4), FormatError);
}
