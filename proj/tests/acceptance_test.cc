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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <unistd.h>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.h"
#include "ompq/allocator.h"
#include "ompq/cli.h"
#include "ompq/errors.h"
#include "ompq/model_io.h"
#include "ompq/orm.h"
#include "ompq/toynet.h"
#include "oracles.h"

namespace ompq {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects the first few failure messages of one criterion.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  bool ok() const { return failures_ == 0; }
  std::string notes() const {
    if (failures_ <= 3) return notes_;
    return notes_ + "; +" + std::to_string(failures_ - 3) + " more";
  }

 private:
  int failures_ = 0;
  std::string notes_;
};

struct Outcome {
  bool pass;
  std::string detail;
};

bool RelClose(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

Outcome OrmIdentitySuite() {
  const auto start = Clock::now();
  Check check;
  oracle::Stream dims(2022);
  const double scales[] = {-1e3, -1.0, -1e-3, 1e-3, 1.0, 1e3};
  double worst_form = 0.0;
  for (int pair = 0; pair < 1000; ++pair) {
    const std::size_t n = 2 + dims.bits() % 63;
    const std::size_t pi = 2 + dims.bits() % 63;
    const std::size_t pj = 2 + dims.bits() % 63;
    const FeatureMatrix y = oracle::random_features("y", n, pi, 10000 + pair);
    const FeatureMatrix z = oracle::random_features("z", n, pj, 20000 + pair);
    const std::string tag = "pair " + std::to_string(pair);

    const double by_norm = orm_pair_norm(y, z);
    const GramMatrix gy = gram(y);
    const GramMatrix gz = gram(z);
    const double ny = self_norm(y);
    const double nz = self_norm(z);
    const double by_gram = orm_pair_gram(gy, gz, ny, nz);
    worst_form = std::max(worst_form, std::abs(by_norm - by_gram) /
                                          std::max(by_norm, 1e-300));
    check.Expect(RelClose(by_norm, by_gram, 1e-9), tag + " norm vs gram");
    check.Expect(RelClose(by_norm, oracle::naive_orm(y, z), 1e-9),
                 tag + " vs loop oracle");
    check.Expect(by_norm >= 0.0 && by_norm <= 1.0 && by_gram >= 0.0 &&
                     by_gram <= 1.0,
                 tag + " out of [0,1]");
    check.Expect(orm_pair_norm(z, y) == by_norm, tag + " norm asymmetric");
    check.Expect(orm_pair_gram(gz, gy, nz, ny) == by_gram,
                 tag + " gram asymmetric");
    check.Expect(std::abs(orm_pair_norm(y, y) - 1.0) <= 1e-9 &&
                     std::abs(orm_pair_gram(gy, gy, ny, ny) - 1.0) <= 1e-9,
                 tag + " self-similarity");

    const std::vector<FeatureMatrix> both = {y, z};
    const OrmMatrix k = orm_matrix(both, Strategy::kAuto);
    check.Expect(k.at(0, 1) == k.at(1, 0) && k.at(0, 0) == 1.0,
                 tag + " matrix symmetry");

    for (double a : scales) {
      for (double b : scales) {
        const FeatureMatrix ya = y.scaled(a);
        const FeatureMatrix zb = z.scaled(b);
        const double s_norm = orm_pair_norm(ya, zb);
        const double s_gram =
            orm_pair_gram(gram(ya), gram(zb), self_norm(ya), self_norm(zb));
        check.Expect(RelClose(s_norm, by_norm, 1e-9) &&
                         RelClose(s_gram, by_norm, 1e-9),
                     tag + " scale " + Fmt("%g", a) + "," + Fmt("%g", b));
      }
    }
  }
  const double elapsed = Seconds(start);
  check.Expect(elapsed < 30.0, "runtime " + Fmt("%.1f s", elapsed));
  return {check.ok(), "1000 pairs, max norm/gram rel diff " +
                          Fmt("%.2e", worst_form) + ", " +
                          Fmt("%.1f s", elapsed) +
                          (check.ok() ? "" : ": " + check.notes())};
}

Outcome LpOracleSuite() {
  const auto start = Clock::now();
  Check check;
  double worst_lp = 0.0;
  auto ordering = [&](const AllocationProblem& p, const std::string& tag) {
    const ContinuousSolution lp = solve_continuous(p);
    const IntegerSolution dfs = integerize_dfs(p);
    const IntegerSolution rnd = integerize_round(lp.bits, p);
    const double eps = 1e-9 * (1.0 + std::abs(lp.objective));
    check.Expect(lp.objective + eps >= dfs.objective, tag + " relax < dfs");
    check.Expect(dfs.objective + eps >= rnd.objective, tag + " dfs < round");
    check.Expect(dfs.size_mb <= p.target_mb + kBudgetSlackMb &&
                     rnd.size_mb <= p.target_mb + kBudgetSlackMb,
                 tag + " over budget");
    return dfs;
  };

  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t layers = 1 + seed % 6;
    const AllocationProblem p =
        oracle::random_problem(500000 + seed, layers, 2, 8, seed % 4 == 0);
    const std::string tag = "lp " + std::to_string(seed);
    const double got = solve_continuous(p).objective;
    const double want = oracle::lp_vertex_optimum(p);
    worst_lp = std::max(worst_lp, std::abs(got - want));
    check.Expect(std::abs(got - want) <= 1e-6, tag + " relaxation mismatch");
    if (layers == 2 && !p.pins[0] && !p.pins[1]) {
      const double grid = oracle::lp_grid_optimum_2d(p, 1e-3);
      const double step = 1e-3 * (std::abs(p.coeffs[0]) + std::abs(p.coeffs[1]));
      check.Expect(grid <= got + 1e-9 && grid >= got - step - 1e-9,
                   tag + " grid bracket");
    }
    ordering(p, tag);
  }

  int exact = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t layers = 1 + seed % 7;  // at most 7^7 < 10^6 leaves
    const AllocationProblem p =
        oracle::random_problem(700000 + seed, layers, 2, 8, seed % 3 == 0);
    const std::string tag = "dfs " + std::to_string(seed);
    const IntegerSolution dfs = ordering(p, tag);
    const auto want = oracle::exhaustive_integer(p, p.tie_tolerance());
    const bool same = want && dfs.bits == *want;
    exact += same;
    check.Expect(same, tag + " differs from exhaustive");
  }
  const double elapsed = Seconds(start);
  check.Expect(elapsed < 60.0, "runtime " + Fmt("%.1f s", elapsed));
  return {check.ok(),
          "200 relaxations (max |diff| " + Fmt("%.1e", worst_lp) + "), " +
              std::to_string(exact) + "/50 exhaustive matches, " +
              Fmt("%.1f s", elapsed) + (check.ok() ? "" : ": " + check.notes())};
}

Outcome StrategySpeedup() {
  const auto start = Clock::now();
  const StrategyTiming tall = bench_strategies(10000, 100, 1);
  const StrategyTiming wide = bench_strategies(100, 10000, 1);
  const double elapsed = Seconds(start);
  Check check;
  check.Expect(tall.faster() == Strategy::kNormForm && tall.ratio() >= 5.0,
               "N>p case");
  check.Expect(wide.faster() == Strategy::kGramForm && wide.ratio() >= 5.0,
               "N<p case");
  check.Expect(RelClose(tall.orm_norm, tall.orm_gram, 1e-9) &&
                   RelClose(wide.orm_norm, wide.orm_gram, 1e-9),
               "forms disagree");
  check.Expect(elapsed < 300.0, "runtime");
  return {check.ok(),
          "N=10000,p=100 norm faster by " + Fmt("%.1fx", tall.ratio()) +
              " (" + std::string(strategy_name(tall.faster())) +
              "); N=100,p=10000 gram faster by " + Fmt("%.1fx", wide.ratio()) +
              " (" + std::string(strategy_name(wide.faster())) + "), " +
              Fmt("%.1f s", elapsed) + (check.ok() ? "" : ": " + check.notes())};
}

Outcome SolverSpeed() {
  const ModelDescriptor m = fixture::Synthetic(53, 53);
  const OrmMatrix k = fixture::RandomOrm(53, 530, m);
  Check check;
  std::string detail = "53 layers";
  // Default method first, then the exact search on the same instance.
  for (std::optional<Method> method : {std::optional<Method>(),
                                       std::optional<Method>(Method::kDfs)}) {
    AllocateOptions o;
    o.target_mb = model_size_mb(std::vector<int>(53, 6), m);
    o.method = method;
    const auto start = Clock::now();
    const AllocationResult r = allocate(k, m, o);
    const double elapsed = Seconds(start);
    const std::string name(method_name(r.method));
    check.Expect(elapsed < 10.0, name + " too slow");
    check.Expect(r.model_size_mb <= o.target_mb + kBudgetSlackMb,
                 name + " over budget");
    detail += ", " + name + " " + Fmt("%.3f s", elapsed);
  }
  return {check.ok(), detail + (check.ok() ? "" : ": " + check.notes())};
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ompq");
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string BitsLine(const std::string& out) {
  const std::size_t at = out.find("bits:");
  if (at == std::string::npos) return "";
  return out.substr(at, out.find('\n', at) - at);
}

Outcome EndToEndDeterminism(const std::filesystem::path& dir) {
  Check check;
  std::string first_csv;
  std::string first_dump;
  std::string first_bits;
  int runs = 0;
  for (const char* workers : {"1", "4"}) {
    for (int rep = 0; rep < 3; ++rep) {
      const std::filesystem::path d =
          dir / ("det-" + std::string(workers) + "-" + std::to_string(rep));
      std::filesystem::create_directories(d);
      const std::string dump = (d / "a.bin").string();
      const std::string model = (d / "m.json").string();
      const std::string csv = (d / "k.csv").string();
      CliRun r = Cli({"toynet", "--seed", "2024", "--dims",
                      "16,24,20,28,18,22,16,12", "--samples", "96",
                      "--out-dump", dump, "--out-model", model});
      check.Expect(r.code == 0, "toynet: " + r.err);
      r = Cli({"orm", "--activations", dump, "--out", csv, "--workers",
               workers});
      check.Expect(r.code == 0, "orm: " + r.err);
      r = Cli({"allocate", "--orm", csv, "--model", model, "--target-size",
               "0.0022"});
      check.Expect(r.code == 0, "allocate: " + r.err);
      const std::string bits = BitsLine(r.out);
      const std::string csv_bytes = read_text_file(csv);
      const std::string dump_bytes = read_text_file(dump);
      if (runs++ == 0) {
        first_csv = csv_bytes;
        first_dump = dump_bytes;
        first_bits = bits;
        check.Expect(!bits.empty(), "no bits line");
      } else {
        check.Expect(csv_bytes == first_csv,
                     std::string("csv differs at workers=") + workers);
        check.Expect(dump_bytes == first_dump, "dump differs");
        check.Expect(bits == first_bits,
                     std::string("bits differ at workers=") + workers);
      }
    }
  }
  return {check.ok(), "6 runs (workers 1 and 4), " + first_bits +
                          (check.ok() ? "" : ": " + check.notes())};
}

Outcome BudgetMonotonicity() {
  Check check;
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t layers = 4 + seed % 9;
    const fixture::ToyCase t = fixture::ToyPipeline(seed, layers);
    const double lo = model_size_mb(std::vector<int>(layers, 4), t.model);
    const double hi = model_size_mb(std::vector<int>(layers, 8), t.model);
    double previous = -std::numeric_limits<double>::infinity();
    double previous_tol = 0.0;
    for (int step = 0; step < 5; ++step) {
      AllocateOptions o;
      o.target_mb = lo + (hi - lo) * (0.05 + 0.2 * step);
      const AllocationResult r = allocate(t.k, t.model, o);
      const AllocationProblem p = group_problem(
          build_problem(objective_coefficients(
                            importance(gamma(t.k), 1.0,
                                       ImportanceFunction::kExpNeg).theta),
                        t.model, o.target_mb),
          Granularity::kLayer, t.model);
      const std::string tag = "seed " + std::to_string(seed) + " budget " +
                              std::to_string(step);
      check.Expect(r.model_size_mb <= o.target_mb + kBudgetSlackMb,
                   tag + " over budget");
      // The solver returns a configuration within its tie tolerance of the
      // optimum, so monotonicity holds up to that tolerance.
      check.Expect(r.objective_value >= previous - previous_tol,
                   tag + " objective decreased");
      previous = r.objective_value;
      previous_tol = p.tie_tolerance();
      ++checked;
    }
  }
  return {check.ok(), std::to_string(checked) + " allocations on 20 toynets" +
                          (check.ok() ? "" : ": " + check.notes())};
}

Outcome BetaDegeneracy() {
  Check check;
  for (std::uint64_t seed = 101; seed <= 120; ++seed) {
    const std::size_t layers = 5 + seed % 10;
    const fixture::ToyCase t = fixture::ToyPipeline(seed, layers);
    AllocateOptions o;
    o.target_mb = model_size_mb(std::vector<int>(layers, 6), t.model);
    o.beta = 1e-9;
    const AllocationResult tiny = allocate(t.k, t.model, o);
    o.beta = 1.0;
    const AllocationResult uniform = allocate_with_theta(
        std::vector<double>(layers, 1.0), t.model, o);
    check.Expect(tiny.bits == uniform.bits,
                 "seed " + std::to_string(seed) + " differs");
  }
  return {check.ok(), "20 toynets, beta=1e-9 vs uniform importance" +
                          (check.ok() ? "" : ": " + check.notes())};
}

template <typename Fn>
bool RaisesCode(ErrorCode code, Fn&& fn) {
  try {
    fn();
  } catch (const OmpqError& e) {
    return e.code() == code;
  }
  return false;
}

Outcome FormatSuite(const std::filesystem::path& dir) {
  Check check;
  ToyNetSpec spec;
  spec.seed = 31;
  spec.layer_dims = {10, 14, 12, 9};
  const ToyNet net = ToyNet::build(spec);
  const auto features =
      forward_collect(net, sample_inputs(input_seed_for(31), 32, 10));

  // Dump: float32 storage, so the round trip is exact on float values.
  const std::filesystem::path dump = dir / "fmt.bin";
  write_dump(features, dump);
  const auto back = read_dump(dump);
  bool dump_ok = back.size() == features.size();
  for (std::size_t l = 0; dump_ok && l < back.size(); ++l) {
    dump_ok = back[l].layer_name() == features[l].layer_name() &&
              back[l].n_samples() == features[l].n_samples() &&
              back[l].n_features() == features[l].n_features();
    for (std::size_t i = 0; dump_ok && i < back[l].data().size(); ++i) {
      dump_ok = back[l].data()[i] ==
                static_cast<double>(static_cast<float>(features[l].data()[i]));
    }
  }
  check.Expect(dump_ok, "dump round trip");
  std::ostringstream again;
  write_dump(back, again);
  check.Expect(again.str() == read_text_file(dump), "dump rewrite differs");

  // ORM CSV.
  const OrmMatrix k = orm_matrix(features, Strategy::kAuto);
  const std::filesystem::path csv = dir / "fmt.csv";
  write_orm_csv(k, csv);
  const OrmMatrix k2 = read_orm_csv(csv);
  bool csv_ok = k2.order() == k.order() && k2.layer_names() == k.layer_names();
  for (std::size_t i = 0; csv_ok && i < k.values().size(); ++i) {
    csv_ok = std::abs(k2.values()[i] - k.values()[i]) <= 1e-12;
  }
  check.Expect(csv_ok, "csv round trip");

  // Report.
  const ModelDescriptor model = describe(net);
  AllocateOptions o;
  o.target_mb = model_size_mb(std::vector<int>(3, 6), model);
  const AllocationResult r = allocate(k, model, o);
  const std::filesystem::path report = dir / "fmt.json";
  write_report(r, model, report);
  const AllocationReport rep = read_report(report);
  bool rep_ok = rep.objective == r.objective_value &&
                rep.model_size_mb == r.model_size_mb &&
                rep.bops_g == r.bops_g && rep.layers.size() == r.bits.size();
  for (std::size_t i = 0; rep_ok && i < r.bits.size(); ++i) {
    rep_ok = rep.layers[i].weight_bit == r.bits[i] &&
             rep.layers[i].relaxed_bit == r.relaxed_bits[i];
  }
  check.Expect(rep_ok, "report round trip");

  // Descriptor.
  const ModelDescriptor model2 = parse_descriptor(descriptor_to_json(model));
  check.Expect(descriptor_to_json(model2) == descriptor_to_json(model),
               "descriptor round trip");

  // Corrupt fixtures.
  const std::string good = read_text_file(dump);
  auto read_bytes = [](const std::string& bytes) {
    std::istringstream in(bytes);
    return read_dump(in, bytes.size());
  };
  std::string bad_magic = good;
  bad_magic.replace(0, 8, "XXXXXXXX");
  check.Expect(RaisesCode(ErrorCode::kBadMagic, [&] { read_bytes(bad_magic); }),
               "bad magic");
  bool all_truncated = true;
  for (std::size_t cut : {std::size_t{12}, std::size_t{20}, good.size() / 2,
                          good.size() - 1}) {
    all_truncated &= RaisesCode(ErrorCode::kTruncated,
                                [&] { read_bytes(good.substr(0, cut)); });
  }
  check.Expect(all_truncated, "truncation");
  // First payload value of the first layer: magic, version, count, name
  // length, name "fc1", two u64 dims, dtype.
  std::string with_nan = good;
  const std::size_t payload = 8 + 4 + 4 + 4 + 3 + 8 + 8 + 1;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  with_nan.replace(payload, 4, reinterpret_cast<const char*>(&nan), 4);
  std::string nan_message;
  try {
    read_bytes(with_nan);
  } catch (const OmpqError& e) {
    if (e.code() == ErrorCode::kNonFiniteValue) nan_message = e.what();
  }
  check.Expect(nan_message.find("fc1") != std::string::npos, "NaN");
  check.Expect(RaisesCode(ErrorCode::kTrailingBytes,
                          [&] { read_bytes(good + '\0'); }),
               "trailing bytes");
  return {check.ok(), "dump, CSV, report and descriptor round trips; bad "
                      "magic, truncation, NaN and trailing-byte fixtures" +
                          (check.ok() ? "" : std::string(": ") + check.notes())};
}

// Not a criterion: how much the ORM moves when the sample count doubles.
std::string SampleStability() {
  ToyNetSpec spec;
  spec.seed = 64;
  spec.layer_dims = {16, 32, 32, 32, 32, 16};
  const ToyNet net = ToyNet::build(spec);
  const DenseMatrix big = sample_inputs(input_seed_for(64), 128, 16);
  DenseMatrix small{64, 16, std::vector<double>(big.values.begin(),
                                                big.values.begin() + 64 * 16)};
  const OrmMatrix a = orm_matrix(forward_collect(net, small), Strategy::kAuto);
  const OrmMatrix b = orm_matrix(forward_collect(net, big), Strategy::kAuto);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return Fmt("%.4f", worst);
}

int Main() {
  unsetenv("OMPQ_WORKERS");
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() /
      ("ompq-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"orm identity suite", OrmIdentitySuite},
      {"lp oracle suite", LpOracleSuite},
      {"strategy speedup", StrategySpeedup},
      {"solver speed", SolverSpeed},
      {"end-to-end determinism", [&] { return EndToEndDeterminism(dir); }},
      {"budget monotonicity", BudgetMonotonicity},
      {"beta degeneracy", BetaDegeneracy},
      {"format suite", [&] { return FormatSuite(dir); }},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %-24s %s\n", o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("INFO  orm sample stability   max |K(N=64) - K(N=128)| = %s\n",
              SampleStability().c_str());
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failed, criteria.size());
  std::filesystem::remove_all(dir);
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace ompq

int main() { return ompq::Main(); }
