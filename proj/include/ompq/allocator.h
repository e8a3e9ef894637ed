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

// Bit allocation by linear programming.
//
// The objective rewards bits on layers whose prefix importance is high:
//
//   maximize  sum_i c_i b_i,   c_i = (sum_{j>=i} theta_j) / (L - i + 1)
//   subject   sum_i size_i(b_i) <= target,  bit_min <= b_i <= bit_max
//
// With a single knapsack row and box bounds the relaxation is solved exactly
// by ratio greedy. Integer solutions come from rounding with a repair pass or
// from a depth-first branch and bound.

#ifndef OMPQ_ALLOCATOR_H_
#define OMPQ_ALLOCATOR_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ompq/types.h"

namespace ompq {

// Absolute slack on the size constraint, in megabytes.
inline constexpr double kBudgetSlackMb = 1e-9;
// Integer configurations whose objectives differ by at most this fraction of
// the optimum are treated as tied; ties go to the lexicographically largest
// bit vector in layer order.
inline constexpr double kObjectiveTieRelTol = 1e-6;
// auto method: DFS up to this many free variables, rounding above.
inline constexpr std::size_t kDfsMaxFreeVariables = 25;

enum class Granularity { kLayer, kBlock, kStage, kNet };

std::string_view granularity_name(Granularity g);
std::optional<Granularity> parse_granularity(std::string_view text);

// One variable per group of layers. Per-variable vectors all have
// groups.size() entries.
struct AllocationProblem {
  std::vector<double> coeffs;
  std::vector<double> mb_per_bit;
  std::vector<std::optional<int>> pins;
  // Member layer indices of each variable, a partition of [0, L).
  std::vector<std::vector<std::size_t>> groups;
  double target_mb = 0.0;
  int bit_min = 4;
  int bit_max = 8;

  std::size_t num_variables() const { return coeffs.size(); }
  std::size_t num_layers() const;
  std::size_t num_free() const;
  // Size with every pinned variable at its pin and every free one at bit_min.
  double min_size_mb() const;
  double size_mb(std::span<const double> bits) const;
  double objective(std::span<const double> bits) const;
  // Throws kInvalidArgument on inconsistent shapes or bounds.
  void validate() const;
  // Throws InfeasibleError when min_size_mb() exceeds the target.
  void check_feasible() const;
  // Absolute objective gap under which two configurations count as tied:
  // kObjectiveTieRelTol times the largest attainable |objective|.
  double tie_tolerance() const;
};

std::vector<double> objective_coefficients(std::span<const double> theta);

double layer_size_mb(std::uint64_t param_count, double bit);

// Weights-only size of the model under per-layer bits, summed in layer order.
double model_size_mb(std::span<const int> weight_bits,
                     const ModelDescriptor& model);

double bops_g(std::span<const int> weight_bits,
              std::span<const int> activation_bits,
              const ModelDescriptor& model);

// Layer-granularity problem: variable i is layer i.
AllocationProblem build_problem(std::span<const double> coeffs,
                                const ModelDescriptor& model, double target_mb);

// Collapses layers sharing a group label into one variable. Throws
// kMixedPinInGroup when a group mixes pinned and free layers or two pins.
AllocationProblem group_problem(const AllocationProblem& problem,
                                Granularity granularity,
                                const ModelDescriptor& model);

struct ContinuousSolution {
  std::vector<double> bits;  // per variable
  double objective = 0.0;
};

ContinuousSolution solve_continuous(const AllocationProblem& problem);

struct IntegerSolution {
  std::vector<int> bits;  // per variable
  double objective = 0.0;
  double size_mb = 0.0;
};

IntegerSolution integerize_round(std::span<const double> fractional,
                                 const AllocationProblem& problem);

IntegerSolution integerize_dfs(const AllocationProblem& problem);

// Per-layer bits from per-variable bits.
std::vector<int> expand_bits(std::span<const int> variable_bits,
                             const AllocationProblem& problem);
std::vector<double> expand_bits(std::span<const double> variable_bits,
                                const AllocationProblem& problem);

struct AllocateOptions {
  double target_mb = 0.0;
  double beta = 1.0;
  ImportanceFunction function = ImportanceFunction::kExpNeg;
  Granularity granularity = Granularity::kLayer;
  // nullopt selects DFS for at most kDfsMaxFreeVariables free variables and
  // rounding otherwise.
  std::optional<Method> method;
};

// gamma -> importance -> coefficients -> grouping -> relaxation ->
// integerization. `model` is validated; K must have one row per layer.
AllocationResult allocate(const OrmMatrix& k, const ModelDescriptor& model,
                          const AllocateOptions& options);

// Same pipeline starting from explicit importance factors (beta and
// function in `options` are ignored).
AllocationResult allocate_with_theta(std::span<const double> theta,
                                     const ModelDescriptor& model,
                                     const AllocateOptions& options);

}  // namespace ompq

#endif  // OMPQ_ALLOCATOR_H_
