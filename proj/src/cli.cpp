// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "sinq/cli.hpp"

#include <chrono>
#include <cstring>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "CLI11.hpp"

#include "sinq/artifact.hpp"
#include "sinq/bench.hpp"
#include "sinq/calibration.hpp"
#include "sinq/container.hpp"
#include "sinq/error.hpp"
#include "sinq/parallel.hpp"
#include "sinq/pipeline.hpp"
#include "sinq/report.hpp"

namespace sinq::cli {

namespace {

// Bad flag combination detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuantizeArgs {
  std::string input, output, calib;
  int bits = 4;
  std::size_t group_size = 64;
  std::string tiling = "1d";
  std::string params;
  std::string codebook = "uniform";
  std::string method = "sinq";
  std::size_t niter = 16;
  std::string aux;
  std::size_t alpha_grid = 21;
  std::uint64_t seed = 0;
  bool transpose = false;
};

struct EvalArgs {
  std::string original, quantized, output;
};

struct BenchArgs {
  std::string output_dir = ".";
  bool quick = false;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
};

struct GenArgs {
  std::string output, name = "weight";
  std::size_t rows = 256, cols = 256, count = 1;
  double outlier_frac = 0.01, outlier_scale = 50.0;
  std::uint64_t seed = 0;
};

struct GenCalibArgs {
  std::string output, name = "weight";
  std::size_t samples = 128, channels = 256;
  std::optional<std::size_t> dominant;
  std::uint64_t seed = 0;
};

QuantizeRequest build_request(const QuantizeArgs& a) {
  QuantizeRequest req;
  req.method = parse_method(a.method);
  const CodebookKind codebook = parse_codebook(a.codebook);
  if (!is_supported_bit_width(a.bits)) throw UsageError("--bits must be one of 2, 3, 4, 6, 8");
  if (codebook == CodebookKind::NF4 && a.bits != 4) throw UsageError("--codebook nf4 requires --bits 4");
  if (a.group_size == 0) throw UsageError("--group-size must be positive");

  ParamKind params;
  if (!a.params.empty()) {
    params = parse_param_kind(a.params);
  } else if (req.method == Method::Rtn) {
    params = ParamKind::ScaleShift;
  } else {
    params = codebook == CodebookKind::NF4 ? ParamKind::DualScale : ParamKind::DualScaleShift;
  }
  if (req.method == Method::Rtn && params != ParamKind::ScaleShift) {
    throw UsageError("--method rtn uses --params scale-shift");
  }
  if (req.method != Method::Rtn && params == ParamKind::ScaleShift) {
    throw UsageError("--method " + a.method + " needs --params dual or dual-shift");
  }
  if (codebook == CodebookKind::NF4 && params == ParamKind::DualScaleShift) {
    throw UsageError("--codebook nf4 is shift-free; use --params dual");
  }
  const AuxPrecision aux = !a.aux.empty()              ? parse_aux_precision(a.aux)
                           : req.method == Method::Asinq ? AuxPrecision::Int8
                                                         : AuxPrecision::Float16;
  if (a.alpha_grid == 0) throw UsageError("--alpha-grid must be at least 1");

  req.opts = {a.bits, TileSpec{parse_tiling(a.tiling), a.group_size}, params, codebook, aux};
  req.sinkhorn.max_iters = a.niter;
  req.search.grid = AlphaSearchConfig::default_grid(a.alpha_grid);
  if (a.transpose && req.method == Method::Asinq) throw UsageError("--transpose is not supported with asinq");
  req.transpose = a.transpose;
  return req;
}

int cmd_quantize(const QuantizeArgs& a, std::ostream& out) {
  const QuantizeRequest req = build_request(a);
  if (req.method == Method::Asinq && a.calib.empty()) return kExitNoCalib;

  const auto input = TensorContainer::load(a.input);
  std::optional<TensorContainer> calib;
  if (req.method == Method::Asinq) calib = TensorContainer::load(a.calib);

  std::vector<std::optional<CalibrationSet>> sets(input.tensors.size());
  for (std::size_t k = 0; k < input.tensors.size(); ++k) {
    const auto& t = input.tensors[k];
    if (!calib) break;
    const NamedTensor* c = calib->find(t.name);
    if (!c && calib->tensors.size() == 1) c = &calib->tensors[0];
    if (!c) throw FormatError("no calibration tensor for '" + t.name + "'");
    if (c->value.cols() != t.value.cols()) {
      throw ShapeMismatchError("calibration for '" + t.name + "' has " + std::to_string(c->value.cols()) +
                               " channels, weight has " + std::to_string(t.value.cols()));
    }
    sets[k].emplace(c->value);
  }

  QuantArtifact art;
  art.tensors.resize(input.tensors.size());
  parallel_for(input.tensors.size(), [&](std::size_t k) {
    const auto& t = input.tensors[k];
    art.tensors[k] = quantize_tensor(t.name, t.value, req, sets[k] ? &*sets[k] : nullptr);
  });
  art.save(a.output);
  for (const auto& t : art.tensors) {
    out << t.name << ": " << t.qm.rows << "x" << t.qm.cols << " " << t.method;
    if (t.alpha) out << " alpha=" << *t.alpha;
    out << " bpw=" << static_cast<double>(memory_footprint_bits(t.qm)) / static_cast<double>(t.qm.rows * t.qm.cols)
        << "\n";
  }
  return kExitOk;
}

int cmd_dequantize(const std::string& input, const std::string& output) {
  const auto art = QuantArtifact::load(input);
  TensorContainer c;
  for (const auto& t : art.tensors) c.add(t.name, reconstruct(t));
  c.save(output);
  return kExitOk;
}

bool is_artifact(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 5 && std::memcmp(bytes.data(), kArtifactMagic, 5) == 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto original = TensorContainer::load(a.original);
  const auto qbytes = read_file(a.quantized);
  RunReport report;

  auto original_for = [&](const std::string& name, std::size_t rows, std::size_t cols) -> const WeightMatrix& {
    const NamedTensor* o = original.find(name);
    if (!o) throw FormatError("tensor '" + name + "' is not in the original container");
    if (o->value.rows() != rows || o->value.cols() != cols) {
      throw ShapeMismatchError("tensor '" + name + "' shape differs from the original");
    }
    return o->value;
  };

  std::size_t count = 0;
  if (is_artifact(qbytes)) {
    const auto art = QuantArtifact::parse(qbytes);
    count = art.tensors.size();
    for (const auto& t : art.tensors) {
      const std::size_t rows = t.transposed ? t.qm.cols : t.qm.rows;
      const std::size_t cols = t.transposed ? t.qm.rows : t.qm.cols;
      const auto& w = original_for(t.name, rows, cols);
      const auto t0 = std::chrono::steady_clock::now();
      const auto rec = reconstruct(t);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.rows.push_back(make_report_row(t, w, rec, dt));
    }
  } else {
    const auto other = TensorContainer::parse(qbytes);
    count = other.tensors.size();
    for (const auto& t : other.tensors) {
      const auto& w = original_for(t.name, t.value.rows(), t.value.cols());
      const auto before = analyze(w);
      const auto after = analyze(t.value);
      ReportRow r;
      r.name = t.name;
      r.bits_per_weight = t.dtype == TensorDtype::Float32 ? 32.0 : 16.0;
      r.total_bits = static_cast<std::uint64_t>(r.bits_per_weight) * t.value.size();
      r.stats = {finite_or_null(before.imbalance), finite_or_null(after.imbalance),
                 before.row_kurtosis_mean,         after.row_kurtosis_mean,
                 before.col_kurtosis_mean,         after.col_kurtosis_mean};
      r.mse = recon_error(w, t.value);
      report.rows.push_back(std::move(r));
    }
  }
  if (count != original.tensors.size()) throw FormatError("tensor sets differ between original and quantized input");

  if (a.output.empty()) {
    out << report.to_csv();
  } else {
    report.save(a.output);
    out << "wrote " << a.output << ".csv and " << a.output << ".json\n";
  }
  return kExitOk;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  BenchConfig cfg = a.quick ? BenchConfig::quick_suite() : BenchConfig::default_suite();
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  const auto res = run_bench(cfg);
  const std::filesystem::path dir(a.output_dir);
  std::filesystem::create_directories(dir);
  res.ablation.save(dir / "bench_report");
  const auto timing = timing_csv(res.timing);
  write_file(dir / "timing.csv", std::span(reinterpret_cast<const std::uint8_t*>(timing.data()), timing.size()));
  out << res.ablation.rows.size() << " ablation rows (" << cfg.fixtures().size() << " fixtures)\n";
  out << timing_table(res.timing);
  return kExitOk;
}

int cmd_gen(const GenArgs& a) {
  TensorContainer c;
  for (std::size_t k = 0; k < a.count; ++k) {
    const std::string name = a.count == 1 ? a.name : a.name + "." + std::to_string(k);
    c.add(name, gen_synthetic(a.rows, a.cols, a.outlier_frac, a.outlier_scale, a.seed + k));
  }
  c.save(a.output);
  return kExitOk;
}

int cmd_gen_calib(const GenCalibArgs& a) {
  TensorContainer c;
  c.add(a.name, gen_calibration(a.samples, a.channels, a.seed, a.dominant));
  c.save(a.output);
  return kExitOk;
}

template <class F>
int guarded(F&& f, std::ostream& err) {
  try {
    return f();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SINQ weight quantization toolkit", "sinq"};
  app.require_subcommand(1);

  QuantizeArgs qa;
  auto* q = app.add_subcommand("quantize", "Quantize every tensor of a container into an artifact");
  q->add_option("--input", qa.input, "Input tensor container")->required();
  q->add_option("--output", qa.output, "Output artifact")->required();
  q->add_option("--bits", qa.bits, "Code width: 2, 3, 4, 6 or 8")->check(CLI::IsMember({2, 3, 4, 6, 8}));
  q->add_option("--group-size", qa.group_size, "Group / tile size")->check(CLI::PositiveNumber);
  q->add_option("--tiling", qa.tiling, "1d or 2d")->check(CLI::IsMember({"1d", "2d"}));
  q->add_option("--params", qa.params, "scale-shift, dual or dual-shift")
      ->check(CLI::IsMember({"scale-shift", "dual", "dual-shift"}));
  q->add_option("--codebook", qa.codebook, "uniform or nf4")->check(CLI::IsMember({"uniform", "nf4"}));
  q->add_option("--method", qa.method, "rtn, sinq or asinq")->check(CLI::IsMember({"rtn", "sinq", "asinq"}));
  q->add_option("--niter", qa.niter, "Normalization iterations");
  q->add_option("--aux", qa.aux, "Scale/shift precision: f16 or i8")->check(CLI::IsMember({"f16", "i8"}));
  q->add_option("--calib", qa.calib, "Calibration activations container (asinq)");
  q->add_option("--alpha-grid", qa.alpha_grid, "Number of alpha grid points in [0, 1]")->check(CLI::PositiveNumber);
  q->add_option("--seed", qa.seed, "Seed (the quantizers themselves are deterministic)");
  q->add_flag("--transpose", qa.transpose, "Group along the rows instead of the columns (quantizes Wᵀ)");

  std::string dq_in, dq_out;
  auto* dq = app.add_subcommand("dequantize", "Expand an artifact into a float32 container");
  dq->add_option("--input", dq_in, "Input artifact")->required();
  dq->add_option("--output", dq_out, "Output tensor container")->required();

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Report reconstruction metrics against the original tensors");
  ev->add_option("--original", ea.original, "Original tensor container")->required();
  ev->add_option("--quantized", ea.quantized, "Artifact or tensor container to compare")->required();
  ev->add_option("--output", ea.output, "Report path stem (writes .csv and .json); stdout CSV if omitted");

  BenchArgs ba;
  auto* be = app.add_subcommand("bench", "Run the synthetic ablation and timing suite");
  be->add_option("--output-dir", ba.output_dir, "Directory for bench_report.{csv,json} and timing.csv");
  be->add_flag("--quick", ba.quick, "Only the two smallest matrix sizes");
  be->add_option("--repeats", ba.repeats, "Timing repetitions (median is reported)")->check(CLI::PositiveNumber);
  be->add_option("--seed", ba.seed, "Fixture seed");

  GenArgs ga;
  auto* ge = app.add_subcommand("gen", "Write a synthetic Gaussian-with-outliers weight container");
  ge->add_option("--output", ga.output, "Output tensor container")->required();
  ge->add_option("--rows", ga.rows)->check(CLI::PositiveNumber);
  ge->add_option("--cols", ga.cols)->check(CLI::PositiveNumber);
  ge->add_option("--outlier-frac", ga.outlier_frac)->check(CLI::Range(0.0, 1.0));
  ge->add_option("--outlier-scale", ga.outlier_scale)->check(CLI::Range(1.0, 1e30));
  ge->add_option("--count", ga.count, "Number of tensors")->check(CLI::PositiveNumber);
  ge->add_option("--name", ga.name, "Tensor name (suffixed .k when count > 1)");
  ge->add_option("--seed", ga.seed);

  GenCalibArgs ca;
  std::size_t dominant = 0;
  auto* gc = app.add_subcommand("gen-calib", "Write synthetic calibration activations");
  gc->add_option("--output", ca.output, "Output tensor container")->required();
  gc->add_option("--samples", ca.samples)->check(CLI::PositiveNumber);
  gc->add_option("--channels", ca.channels)->check(CLI::PositiveNumber);
  auto* dom = gc->add_option("--dominant-channel", dominant, "Channel whose scale is multiplied by 100");
  gc->add_option("--name", ca.name, "Tensor name");
  gc->add_option("--seed", ca.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (dom->count() > 0) ca.dominant = dominant;

  return guarded(
      [&] {
        if (q->parsed()) return cmd_quantize(qa, out);
        if (dq->parsed()) return cmd_dequantize(dq_in, dq_out);
        if (ev->parsed()) return cmd_eval(ea, out);
        if (be->parsed()) return cmd_bench(ba, out);
        if (ge->parsed()) return cmd_gen(ga);
        return cmd_gen_calib(ca);
      },
      err);
}

}  // namespace sinq::cli
