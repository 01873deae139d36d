/* Copyright 2026 The Octav Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// octav: calibration, quantization, MSE sweeps and timing over OCTV tensor
// dumps. Exit status: 0 success, 1 input error, 2 degenerate data under
// --strict.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "octav/octav.h"

namespace {

constexpr int kExitInput = 1;
constexpr int kExitDegenerate = 2;

struct Failure {
  std::string message;
};

void Check(octav_status status) {
  if (status != OCTAV_OK) throw Failure{octav_last_error()};
}

struct TensorDeleter {
  void operator()(octav_tensor* t) const { octav_tensor_free(t); }
};
struct ReportDeleter {
  void operator()(octav_report* r) const { octav_report_free(r); }
};
using TensorPtr = std::unique_ptr<octav_tensor, TensorDeleter>;
using ReportPtr = std::unique_ptr<octav_report, ReportDeleter>;

TensorPtr Load(const std::string& path) {
  octav_tensor* t = nullptr;
  Check(octav_tensor_load(path.c_str(), &t));
  return TensorPtr(t);
}

struct SpecFlags {
  int bits = 4;
  bool is_unsigned = false;
  std::string boundary = "math";

  void Add(CLI::App* cmd) {
    cmd->add_option("--bits", bits, "Bit width")->check(CLI::Range(2, 16));
    cmd->add_flag("--unsigned", is_unsigned, "Unsigned grid; data must be nonnegative");
    cmd->add_option("--boundary", boundary, "Top signed level: math keeps +s, twos drops it")
        ->check(CLI::IsMember({"math", "twos"}));
  }
  octav_spec Get() const { return {bits, is_unsigned ? 1 : 0, boundary == "twos" ? 1 : 0}; }
};

octav_granularity ParseGranularity(const std::string& text) {
  if (text == "tensor") return {0, 0};
  if (text.rfind("row:", 0) == 0) {
    try {
      std::size_t used = 0;
      const unsigned long axis = std::stoul(text.substr(4), &used);
      if (used == text.size() - 4) return {1, axis};
    } catch (const std::exception&) {
    }
  }
  throw Failure{"unknown granularity '" + text + "'"};
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{"cannot write " + path};
}

// "<name>.batch<k>.octv" and "<name>.octv" both map to <name>.
std::string TensorName(const std::string& path) {
  std::string stem = std::filesystem::path(path).stem().string();
  const auto dot = stem.rfind(".batch");
  if (dot != std::string::npos) stem.resize(dot);
  return stem;
}

int Warn(bool warn, const std::string& what, bool strict) {
  if (!warn) return 0;
  std::cerr << "warning: " << what << '\n';
  return strict ? kExitDegenerate : 0;
}

int Degenerate(std::size_t count, bool strict) {
  return Warn(count > 0, std::to_string(count) + " degenerate (all-zero) groups", strict);
}

struct CalibrateCmd {
  std::string dir;
  std::string method = "octav";
  std::string granularity = "tensor";
  std::string batches;
  std::string out;
  int iterations = 10;
  int threads = 1;
  bool strict = false;
  SpecFlags spec;

  int Run() const {
    octav_report* r = nullptr;
    Check(octav_calibrate_dir(dir.c_str(), batches.empty() ? nullptr : batches.c_str(),
                              spec.Get(), ParseGranularity(granularity), method.c_str(),
                              iterations, threads, &r));
    const ReportPtr report(r);
    WriteText(out, std::string(octav_report_json(report.get())) + "\n");
    return Degenerate(octav_report_warnings(report.get()), strict);
  }
};

struct QuantizeCmd {
  std::string input;
  std::string scalars_path;
  std::string name;
  std::string method;
  std::string granularity = "tensor";
  std::string out;
  int iterations = 10;
  bool strict = false;
  SpecFlags spec;

  int Run() {
    const TensorPtr t = Load(input);
    octav_spec s = spec.Get();
    octav_granularity g = ParseGranularity(granularity);
    std::vector<double> scalars;
    std::size_t degenerate = 0;
    if (!scalars_path.empty()) {
      // Spec and granularity come from the report so that its MSE can be
      // reproduced exactly.
      std::ifstream in(scalars_path);
      if (!in) throw Failure{"cannot open " + scalars_path};
      nlohmann::json report;
      try {
        report = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw Failure{"malformed report " + scalars_path + ": " + e.what()};
      }
      const std::string wanted = name.empty() ? TensorName(input) : name;
      const nlohmann::json* entry = nullptr;
      if (!report.contains("tensors")) throw Failure{"no tensors in " + scalars_path};
      for (const auto& e : report.at("tensors")) {
        if (e.value("name", "") == wanted) entry = &e;
      }
      if (!entry) throw Failure{"no tensor '" + wanted + "' in " + scalars_path};
      s.bits = report.at("bits").get<int>();
      s.is_unsigned = report.at("signedness").get<std::string>() == "unsigned";
      s.twos_complement = report.at("boundary").get<std::string>() == "twos";
      g = ParseGranularity(entry->at("granularity").get<std::string>());
      scalars = entry->at("scalars").get<std::vector<double>>();
    } else {
      std::size_t groups = 0;
      Check(octav_group_count(t.get(), g, &groups));
      scalars.resize(groups);
      Check(octav_calibrate(t.get(), s, g, method.c_str(), iterations, 1, scalars.data(),
                            scalars.size(), &degenerate));
    }
    octav_tensor* q = nullptr;
    Check(octav_quantize(t.get(), s, g, scalars.data(), scalars.size(), &q));
    const TensorPtr quantized(q);
    double mse = 0.0;
    Check(octav_mse(t.get(), s, g, scalars.data(), scalars.size(), &mse));
    Check(octav_tensor_save(quantized.get(), out.c_str()));
    std::printf("mse %.17g\n", mse);
    return Degenerate(degenerate, strict);
  }
};

struct SweepCmd {
  std::string input;
  std::string mode = "empirical";
  std::string out;
  std::size_t points = 100;
  SpecFlags spec;

  int Run() const {
    const TensorPtr t = Load(input);
    std::vector<double> scalars(points);
    std::vector<double> mse(points);
    Check(octav_sweep(t.get(), spec.Get(), points, mode == "analytical" ? 1 : 0, scalars.data(),
                      mse.data()));
    std::ostringstream csv;
    csv << "scalar,mse\n";
    csv.precision(17);
    for (std::size_t i = 0; i < points; ++i) csv << scalars[i] << ',' << mse[i] << '\n';
    WriteText(out, csv.str());
    return 0;
  }
};

struct BenchCmd {
  std::string dir;
  std::string granularity = "row:0";
  std::string batches;
  std::string out;
  int repetitions = 1;
  bool strict = false;
  SpecFlags spec;

  int Run() const {
    octav_report* r = nullptr;
    Check(octav_bench_dir(dir.c_str(), batches.empty() ? nullptr : batches.c_str(), spec.Get(),
                          ParseGranularity(granularity), repetitions, &r));
    const ReportPtr report(r);
    WriteText(out, std::string(octav_report_json(report.get())) + "\n");
    return Warn(octav_report_warnings(report.get()) > 0,
                "benchmark corpus is unrepresentative; see the report warnings", strict);
  }
};

struct GenCmd {
  std::string distribution = "gaussian";
  std::vector<std::size_t> shape;
  std::size_t corpus = 0;
  std::size_t min_elements = 100'000;
  std::uint64_t seed = 0;
  std::string out;

  int Run() const {
    if (corpus == 0) {
      if (shape.empty()) throw Failure{"--shape or --corpus is required"};
      Generate(shape, seed, out);
      return 0;
    }
    std::filesystem::create_directories(out);
    for (std::size_t i = 0; i < corpus; ++i) {
      std::vector<std::size_t> dims(4);
      Check(octav_corpus_shape(corpus, min_elements, i, dims.data()));
      char name[32];
      std::snprintf(name, sizeof(name), "w%03zu.octv", i);
      Generate(dims, seed + i, (std::filesystem::path(out) / name).string());
    }
    return 0;
  }

  void Generate(const std::vector<std::size_t>& dims, std::uint64_t s,
                const std::string& path) const {
    octav_tensor* t = nullptr;
    Check(octav_tensor_generate(distribution.c_str(), dims.data(), dims.size(), s, &t));
    const TensorPtr tensor(t);
    Check(octav_tensor_save(tensor.get(), path.c_str()));
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clipping-scalar calibration for uniform quantization"};
  app.require_subcommand(1);

  CalibrateCmd calibrate;
  auto* c = app.add_subcommand("calibrate", "Calibrate every tensor of a dump directory");
  c->add_option("dir", calibrate.dir, "Directory of .octv files")->required();
  c->add_option("--method", calibrate.method, "octav | sweep:N | percentile:P | max");
  c->add_option("--granularity", calibrate.granularity, "tensor | row:AXIS");
  c->add_option("--iterations", calibrate.iterations, "OCTAV iterations")->check(CLI::PositiveNumber);
  c->add_option("--batches", calibrate.batches, "Shell glob selecting files");
  c->add_option("--out", calibrate.out, "JSON report path (stdout by default)");
  c->add_option("--threads", calibrate.threads, "Worker threads")->check(CLI::PositiveNumber);
  c->add_flag("--strict", calibrate.strict, "Exit 2 on degenerate groups");
  calibrate.spec.Add(c);

  QuantizeCmd quantize;
  auto* q = app.add_subcommand("quantize", "Quantize one tensor");
  q->add_option("input", quantize.input, "Input .octv file")->required();
  auto* scalars_opt =
      q->add_option("--scalars", quantize.scalars_path, "Calibration report to take scalars from");
  q->add_option("--name", quantize.name, "Tensor name in the report (default: file stem)");
  auto* method_opt = q->add_option("--method", quantize.method, "Compute scalars with this method");
  scalars_opt->excludes(method_opt);
  q->add_option("--granularity", quantize.granularity, "tensor | row:AXIS");
  q->add_option("--iterations", quantize.iterations, "OCTAV iterations")->check(CLI::PositiveNumber);
  q->add_option("--out", quantize.out, "Output .octv file")->required();
  q->add_flag("--strict", quantize.strict, "Exit 2 on degenerate groups");
  quantize.spec.Add(q);

  SweepCmd sweep;
  auto* s = app.add_subcommand("sweep", "Write the MSE curve of a tensor as CSV");
  s->add_option("input", sweep.input, "Input .octv file")->required();
  s->add_option("--points", sweep.points, "Number of sweep points")->check(CLI::Range(2, 1000000));
  s->add_option("--mode", sweep.mode, "empirical | analytical")
      ->check(CLI::IsMember({"empirical", "analytical"}));
  s->add_option("--out", sweep.out, "CSV path (stdout by default)");
  sweep.spec.Add(s);

  BenchCmd bench;
  auto* b = app.add_subcommand("bench", "Time OCTAV against the 100-point sweep");
  b->add_option("dir", bench.dir, "Directory of .octv files")->required();
  b->add_option("--granularity", bench.granularity, "tensor | row:AXIS");
  b->add_option("--batches", bench.batches, "Shell glob selecting files");
  b->add_option("--repetitions", bench.repetitions, "Timed repetitions")->check(CLI::PositiveNumber);
  b->add_option("--out", bench.out, "JSON report path (stdout by default)");
  b->add_flag("--strict", bench.strict, "Exit 2 when the corpus is unrepresentative");
  bench.spec.Add(b);

  GenCmd gen;
  auto* g = app.add_subcommand("gen", "Write synthetic tensors");
  g->add_option("--distribution", gen.distribution,
                "gaussian | laplace | uniform | half-uniform | sparse-gaussian | outlier");
  g->add_option("--shape", gen.shape, "Dimensions, e.g. 64,128")->delimiter(',');
  g->add_option("--corpus", gen.corpus, "Write this many convolution-weight tensors into --out");
  g->add_option("--min-elements", gen.min_elements, "Smallest corpus tensor");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--out", gen.out, "Output file, or directory with --corpus")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }
  try {
    if (*c) return calibrate.Run();
    if (*q) {
      if (quantize.scalars_path.empty() && quantize.method.empty()) {
        throw Failure{"quantize needs --scalars or --method"};
      }
      return quantize.Run();
    }
    if (*s) return sweep.Run();
    if (*b) return bench.Run();
    if (*g) return gen.Run();
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
