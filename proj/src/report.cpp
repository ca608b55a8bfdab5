// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/report.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "sinq/container.hpp"
#include "sinq/error.hpp"
#include "sinq/metrics.hpp"

namespace sinq {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::uint64_t RunReport::total_bits() const {
  std::uint64_t total = 0;
  for (const auto& r : rows) total += r.total_bits;
  return total;
}

std::string RunReport::to_csv() const {
  std::ostringstream out;
  out << "name,bits_per_weight,total_bits,imbalance_before,imbalance_after,row_kurtosis_before,"
         "row_kurtosis_after,col_kurtosis_before,col_kurtosis_after,mse,wall_time_s\n";
  auto imb = [](const std::optional<double>& v) { return v ? num(*v) : std::string("inf"); };
  auto kurt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  for (const auto& r : rows) {
    out << csv_field(r.name) << ',' << num(r.bits_per_weight) << ',' << r.total_bits << ','
        << imb(r.stats.imbalance_before) << ',' << imb(r.stats.imbalance_after) << ','
        << kurt(r.stats.row_kurtosis_before) << ',' << kurt(r.stats.row_kurtosis_after) << ','
        << kurt(r.stats.col_kurtosis_before) << ',' << kurt(r.stats.col_kurtosis_after) << ',' << num(r.mse)
        << ',' << num(r.wall_time_s) << '\n';
  }
  return out.str();
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    list.push_back({{"name", r.name},
                    {"bits_per_weight", r.bits_per_weight},
                    {"total_bits", r.total_bits},
                    {"imbalance_before", opt(r.stats.imbalance_before)},
                    {"imbalance_after", opt(r.stats.imbalance_after)},
                    {"row_kurtosis_before", opt(r.stats.row_kurtosis_before)},
                    {"row_kurtosis_after", opt(r.stats.row_kurtosis_after)},
                    {"col_kurtosis_before", opt(r.stats.col_kurtosis_before)},
                    {"col_kurtosis_after", opt(r.stats.col_kurtosis_after)},
                    {"mse", r.mse},
                    {"wall_time_s", r.wall_time_s}});
  }
  nlohmann::ordered_json doc = {
      {"metadata",
       {{"bits_accounting", "packed codes + auxiliary parameters + fixed header per tensor; activations excluded"},
        {"null_imbalance", "infinite (a row or column has zero std)"}}},
      {"total_bits", total_bits()},
      {"tensors", std::move(list)}};
  return doc.dump(2) + "\n";
}

void RunReport::save(const std::filesystem::path& stem) const {
  auto write = [](const std::filesystem::path& p, const std::string& s) {
    write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  auto csv = stem;
  csv += ".csv";
  auto json = stem;
  json += ".json";
  write(csv, to_csv());
  write(json, to_json());
}

ReportRow make_report_row(const ArtifactTensor& t, const WeightMatrix& original, const WeightMatrix& reconstructed,
                          double wall_time_s) {
  ReportRow r;
  r.name = t.name;
  r.total_bits = memory_footprint_bits(t.qm);
  r.bits_per_weight = static_cast<double>(r.total_bits) / static_cast<double>(t.qm.rows * t.qm.cols);
  r.stats = t.stats;
  r.mse = recon_error(original, reconstructed);
  r.wall_time_s = wall_time_s;
  return r;
}

}  // namespace sinq
