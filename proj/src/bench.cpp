// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "sinq/parallel.hpp"
#include "sinq/pipeline.hpp"

namespace sinq {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string BenchFixture::label() const {
  return std::to_string(rows) + "x" + std::to_string(cols) + "_f" + fmt("%g", outlier_frac) + "_x" +
         fmt("%g", outlier_scale);
}

BenchConfig BenchConfig::default_suite() {
  BenchConfig c;
  c.sizes = {{64, 64}, {256, 256}, {1024, 1024}, {4096, 1024}};
  c.outlier_fracs = {0.0, 0.001, 0.01};
  c.outlier_scales = {10.0, 50.0};
  c.bits = {3, 4};
  c.tilings = {TilingMode::OneD, TilingMode::TwoD};
  c.params = {ParamKind::ScaleShift, ParamKind::DualScale, ParamKind::DualScaleShift};
  c.aux = {AuxPrecision::Float16, AuxPrecision::Int8};
  return c;
}

BenchConfig BenchConfig::quick_suite() {
  BenchConfig c = default_suite();
  c.sizes = {{64, 64}, {256, 256}};
  return c;
}

std::vector<BenchFixture> BenchConfig::fixtures() const {
  std::vector<BenchFixture> out;
  std::uint64_t k = 0;
  for (const auto& [r, c] : sizes) {
    for (double f : outlier_fracs) {
      for (double s : outlier_scales) out.push_back({r, c, f, s, seed * 1000003u + k++});
    }
  }
  return out;
}

std::size_t BenchConfig::cell_count() const {
  return fixtures().size() * bits.size() * tilings.size() * params.size() * aux.size();
}

BenchResult run_bench(const BenchConfig& cfg) {
  const auto fx = cfg.fixtures();
  std::vector<WeightMatrix> mats;
  mats.reserve(fx.size());
  for (const auto& f : fx) mats.push_back(gen_synthetic(f.rows, f.cols, f.outlier_frac, f.outlier_scale, f.seed));

  struct Cell {
    std::size_t fixture;
    int bits;
    TilingMode tiling;
    ParamKind params;
    AuxPrecision aux;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    for (int b : cfg.bits) {
      for (auto t : cfg.tilings) {
        for (auto p : cfg.params) {
          for (auto a : cfg.aux) cells.push_back({i, b, t, p, a});
        }
      }
    }
  }

  BenchResult result;
  result.ablation.rows.resize(cells.size());
  parallel_for(cells.size(), [&](std::size_t k) {
    const auto& c = cells[k];
    QuantizeRequest req;
    req.method = c.params == ParamKind::ScaleShift ? Method::Rtn : Method::Sinq;
    req.opts = {c.bits, TileSpec{c.tiling, cfg.group_size}, c.params, CodebookKind::Uniform, c.aux};
    const std::string name = fx[c.fixture].label() + "/" + std::string(to_string(req.method)) + "/b" +
                             std::to_string(c.bits) + "/" + std::string(to_string(c.tiling)) + "/" +
                             std::string(to_string(c.params)) + "/" + std::string(to_string(c.aux));
    const auto t0 = Clock::now();
    auto t = quantize_tensor(name, mats[c.fixture], req);
    const double dt = seconds_since(t0);
    result.ablation.rows[k] = make_report_row(t, mats[c.fixture], dequantize(t.qm), dt);
  });

  const QuantizeOptions sinq_opts{4, TileSpec{TilingMode::OneD, cfg.group_size}, ParamKind::DualScaleShift,
                                  CodebookKind::Uniform, AuxPrecision::Float16};
  const TileSpec rtn_spec{TilingMode::OneD, cfg.group_size};
  std::vector<double> rtn_times, sinq_times;
  std::size_t sink = 0;
  for (std::size_t rep = 0; rep < std::max<std::size_t>(cfg.repeats, 1); ++rep) {
    auto t0 = Clock::now();
    for (const auto& w : mats) sink += rtn_quantize(w, 4, rtn_spec).tiles.size();
    rtn_times.push_back(seconds_since(t0));
    t0 = Clock::now();
    for (const auto& w : mats) sink += sinq_quantize(w, sinq_opts).tiles.size();
    sinq_times.push_back(seconds_since(t0));
  }
  (void)sink;
  const double rtn_med = median(rtn_times);
  const double sinq_med = median(sinq_times);
  result.timing.push_back({"rtn", rtn_med, 1.0});
  result.timing.push_back({"sinq", sinq_med, rtn_med > 0.0 ? sinq_med / rtn_med : 0.0});
  return result;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
  std::ostringstream out;
  out << "method,median_wall_time_s,ratio_vs_rtn\n";
  for (const auto& r : rows) out << r.method << ',' << fmt("%.6f", r.median_s) << ',' << fmt("%.2f", r.ratio) << '\n';
  return out.str();
}

std::string timing_table(const std::vector<TimingRow>& rows) {
  std::ostringstream out;
  out << "method   median_s    vs_rtn\n";
  for (const auto& r : rows) {
    char line[96];
    std::snprintf(line, sizeof line, "%-8s %10.4f  %6.2fx\n", r.method.c_str(), r.median_s, r.ratio);
    out << line;
  }
  return out.str();
}

}  // namespace sinq
