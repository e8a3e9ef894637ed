// Copyright 2026 The OMPQ Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ompq/cli.h"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ompq/allocator.h"
#include "ompq/errors.h"
#include "ompq/model_io.h"
#include "ompq/orm.h"
#include "ompq/toynet.h"

namespace ompq {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OrmArgs {
  std::string activations;
  std::string out;
  std::string strategy = "auto";
  unsigned workers = 1;
};

struct AllocateArgs {
  std::string orm;
  std::string model;
  double target_mb = 0.0;
  double beta = 1.0;
  std::string importance = "exp";
  std::string granularity = "layer";
  std::string bits;
  std::optional<int> abit;
  std::string method = "auto";
  std::string report;
  std::string heatmap;
};

struct ToynetArgs {
  std::uint64_t seed = 0;
  std::vector<std::size_t> dims;
  std::size_t samples = 0;
  std::string out_dump;
  std::string out_model;
  std::size_t block_size = 2;
};

struct BenchArgs {
  std::size_t n = 0;
  std::size_t p = 0;
  int repeats = 1;
};

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

unsigned resolve_workers(unsigned flag) {
  const char* env = std::getenv("OMPQ_WORKERS");
  if (env == nullptr || *env == '\0') return flag;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) {
    throw UsageError(std::string("OMPQ_WORKERS must be a positive integer, got '") +
                     env + "'");
  }
  return static_cast<unsigned>(v);
}

std::pair<int, int> parse_bit_range(const std::string& text) {
  const std::size_t colon = text.find(':');
  int lo = 0;
  int hi = 0;
  if (colon == std::string::npos ||
      std::sscanf(text.c_str(), "%d:%d", &lo, &hi) != 2 ||
      text.find_first_not_of("0123456789:") != std::string::npos) {
    throw UsageError("--bits expects MIN:MAX, got '" + text + "'");
  }
  if (lo < 1 || hi > 32 || lo > hi) {
    throw UsageError("--bits must satisfy 1 <= MIN <= MAX <= 32");
  }
  return {lo, hi};
}

int cmd_orm(const OrmArgs& args, std::ostream& out) {
  const unsigned workers = resolve_workers(args.workers);
  const Strategy strategy = *parse_strategy(args.strategy);
  auto start = std::chrono::steady_clock::now();
  const std::vector<FeatureMatrix> features = read_dump(args.activations);
  const double read_seconds = elapsed(start);

  OrmTiming timing;
  const OrmMatrix k = orm_matrix(features, strategy, workers, &timing);
  write_orm_csv(k, args.out);

  out << "layers: " << features.size()
      << "  samples: " << features.front().n_samples()
      << "  strategy: " << strategy_name(strategy) << "  workers: " << workers
      << "\n";
  out << "read phase: " << fixed(read_seconds, 3) << " s\n";
  out << "gram phase: " << fixed(timing.gram_phase_seconds, 3) << " s\n";
  out << "pair phase: " << fixed(timing.pair_phase_seconds, 3) << " s\n";
  out << "wrote " << args.out << "\n";
  return kExitOk;
}

int cmd_allocate(const AllocateArgs& args, std::ostream& out) {
  AllocateOptions options;
  options.target_mb = args.target_mb;
  options.beta = args.beta;
  options.function = *parse_importance_function(args.importance);
  options.granularity = *parse_granularity(args.granularity);
  if (args.method == "round") options.method = Method::kRound;
  if (args.method == "dfs") options.method = Method::kDfs;
  std::optional<std::pair<int, int>> bit_range;
  if (!args.bits.empty()) bit_range = parse_bit_range(args.bits);

  const OrmMatrix k = read_orm_csv(args.orm);
  ModelDescriptor model = read_descriptor(args.model);
  if (bit_range) std::tie(model.bit_min, model.bit_max) = *bit_range;
  if (args.abit) {
    for (LayerDescriptor& l : model.layers) l.activation_bit = *args.abit;
  }

  const auto start = std::chrono::steady_clock::now();
  const AllocationResult result = allocate(k, model, options);
  const double solve_seconds = elapsed(start);

  out << "method: " << method_name(result.method) << "\n";
  out << "objective: " << fixed(result.objective_value, 6) << "\n";
  out << "model size: " << fixed(result.model_size_mb, 6) << " MB (target "
      << fixed(args.target_mb, 6) << " MB)\n";
  out << "BOPs: " << fixed(result.bops_g, 6) << " G\n";
  out << "solve time: " << fixed(solve_seconds, 3) << " s\n";
  out << "bits:";
  for (std::size_t i = 0; i < result.bits.size(); ++i) {
    out << (i == 0 ? " " : ",") << result.bits[i];
  }
  out << "\n";
  for (std::size_t i = 0; i < model.size(); ++i) {
    out << "  " << model.layers[i].name << "  w" << result.bits[i] << "a"
        << model.layers[i].activation_bit << "\n";
  }
  if (!args.report.empty()) write_report(result, model, args.report);
  if (!args.heatmap.empty()) write_svg(&k, result, model, args.heatmap);
  return kExitOk;
}

int cmd_toynet(const ToynetArgs& args, std::ostream& out) {
  ToyNetSpec spec;
  spec.seed = args.seed;
  spec.layer_dims = args.dims;
  spec.block_size = args.block_size;
  spec.validate();
  const ToyNet net = ToyNet::build(spec);
  const DenseMatrix inputs =
      sample_inputs(input_seed_for(args.seed), args.samples, args.dims[0]);
  const std::vector<FeatureMatrix> features = forward_collect(net, inputs);
  write_dump(features, args.out_dump);
  write_descriptor(describe(net), args.out_model);
  out << "layers: " << features.size() << "  samples: " << args.samples
      << "\nwrote " << args.out_dump << " and " << args.out_model << "\n";
  return kExitOk;
}

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  const StrategyTiming t = bench_strategies(args.n, args.p, args.repeats);
  const char* relation = t.n > t.p ? "N > p" : (t.n < t.p ? "N < p" : "N = p");
  out << "ORM calculation time (seconds, best of " << t.repeats << ")\n";
  out << "case    N       p       inner-product  norm        ratio\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-7s %-7zu %-7zu %-14.4f %-11.4f %.1fx\n",
                relation, t.n, t.p, t.gram_seconds, t.norm_seconds,
                t.ratio());
  out << line;
  out << "faster: " << strategy_name(t.faster()) << "\n";
  out << "orm: norm-form " << t.orm_norm << "  gram-form " << t.orm_gram
      << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Mixed-precision bit allocation from layer orthogonality"};
  app.name("ompq");
  app.require_subcommand(1);

  OrmArgs orm_args;
  CLI::App* orm = app.add_subcommand(
      "orm", "Compute the ORM matrix of an activation dump");
  orm->add_option("--activations", orm_args.activations,
                  "Activation dump file")
      ->required();
  orm->add_option("--out", orm_args.out, "Output ORM CSV")->required();
  orm->add_option("--strategy", orm_args.strategy,
                  "Pair evaluation: auto picks the cheaper form per pair")
      ->check(CLI::IsMember({"auto", "norm", "gram"}))
      ->capture_default_str();
  orm->add_option("--workers", orm_args.workers,
                  "Worker threads (OMPQ_WORKERS overrides)")
      ->check(CLI::Range(1u, 4096u))
      ->capture_default_str();

  AllocateArgs alloc_args;
  CLI::App* alloc = app.add_subcommand(
      "allocate", "Assign per-layer weight bits under a size budget");
  alloc->add_option("--orm", alloc_args.orm, "ORM CSV")->required();
  alloc->add_option("--model", alloc_args.model, "Model descriptor JSON")
      ->required();
  alloc->add_option("--target-size", alloc_args.target_mb,
                    "Weight size budget in MB (10^6 bytes)")
      ->required()
      ->check(CLI::PositiveNumber);
  alloc->add_option("--beta", alloc_args.beta, "Importance sharpness")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  alloc->add_option("--importance", alloc_args.importance,
                    "Decreasing function of gamma")
      ->check(CLI::IsMember({"exp", "neglog", "neg", "negcube", "negexp"}))
      ->capture_default_str();
  alloc->add_option("--granularity", alloc_args.granularity,
                    "Layers sharing one bit variable")
      ->check(CLI::IsMember({"layer", "block", "stage", "net"}))
      ->capture_default_str();
  alloc->add_option("--bits", alloc_args.bits,
                    "Weight bit range MIN:MAX (default: descriptor, else 4:8)");
  alloc->add_option("--abit", alloc_args.abit,
                    "Activation bits for every layer (default: descriptor, "
                    "else 8)")
      ->check(CLI::Range(1, 32));
  alloc->add_option("--method", alloc_args.method,
                    "Integerization; auto uses dfs up to 25 free variables")
      ->check(CLI::IsMember({"auto", "round", "dfs"}))
      ->capture_default_str();
  alloc->add_option("--report", alloc_args.report, "Write a JSON report");
  alloc->add_option("--heatmap", alloc_args.heatmap,
                    "Write an SVG heatmap and bit profile");

  ToynetArgs toy_args;
  CLI::App* toy = app.add_subcommand(
      "toynet", "Generate a synthetic dump and descriptor");
  toy->add_option("--seed", toy_args.seed, "Network seed")->required();
  toy->add_option("--dims", toy_args.dims,
                  "Input dimension then layer widths, comma separated")
      ->required()
      ->delimiter(',')
      ->expected(2, 1 << 20)
      ->check(CLI::PositiveNumber);
  toy->add_option("--samples", toy_args.samples, "Number of input samples")
      ->required()
      ->check(CLI::PositiveNumber);
  toy->add_option("--out-dump", toy_args.out_dump, "Activation dump output")
      ->required();
  toy->add_option("--out-model", toy_args.out_model, "Descriptor output")
      ->required();
  toy->add_option("--block-size", toy_args.block_size,
                  "Consecutive layers per block label")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand(
      "bench", "Time norm-form against gram-form ORM on random matrices");
  bench->add_option("--n", bench_args.n, "Samples N")
      ->required()
      ->check(CLI::PositiveNumber);
  bench->add_option("--p", bench_args.p, "Features p")
      ->required()
      ->check(CLI::PositiveNumber);
  bench->add_option("--repeats", bench_args.repeats, "Timed repetitions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (orm->parsed()) return cmd_orm(orm_args, out);
    if (alloc->parsed()) return cmd_allocate(alloc_args, out);
    if (toy->parsed()) return cmd_toynet(toy_args, out);
    if (bench->parsed()) return cmd_bench(bench_args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InfeasibleError& e) {
    err << "error: infeasible: " << e.what()
        << "\nminimal achievable size: " << fixed(e.min_size_mb(), 6)
        << " MB\n";
    return kExitInfeasible;
  } catch (const OmpqError& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ompq
