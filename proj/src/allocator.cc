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

#include "ompq/allocator.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "ompq/errors.h"
#include "ompq/orm.h"

namespace ompq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio(double coeff, double cost) {
  if (cost > 0.0) return coeff / cost;
  if (coeff > 0.0) return kInf;
  if (coeff < 0.0) return -kInf;
  return 0.0;
}

// Free variables by decreasing coefficient per megabyte, lower index first.
std::vector<std::size_t> ratio_order(const AllocationProblem& problem) {
  std::vector<std::size_t> order;
  for (std::size_t v = 0; v < problem.num_variables(); ++v) {
    if (!problem.pins[v]) order.push_back(v);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return ratio(problem.coeffs[a], problem.mb_per_bit[a]) >
                            ratio(problem.coeffs[b], problem.mb_per_bit[b]);
                   });
  return order;
}

std::string mb_string(double mb) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", mb);
  return buf;
}

// Depth-first branch and bound over the free variables.
//
// Phase one finds the optimal objective M, branching in ratio order so the
// relaxation bound is tight. Phase two walks the variables in index order,
// largest bit first, and stops at the first feasible leaf whose objective is
// within the tie tolerance of M; that leaf is the lexicographically largest
// near-optimal configuration.
class BranchAndBound {
 public:
  explicit BranchAndBound(const AllocationProblem& problem)
      : problem_(problem),
        ratio_order_(ratio_order(problem)),
        bits_(problem.num_variables(), 0) {
    double pinned_size = 0.0;
    pinned_objective_ = 0.0;
    for (std::size_t v = 0; v < problem.num_variables(); ++v) {
      if (problem.pins[v]) {
        bits_[v] = *problem.pins[v];
        pinned_size += problem.mb_per_bit[v] * *problem.pins[v];
        pinned_objective_ += problem.coeffs[v] * *problem.pins[v];
      } else {
        index_order_.push_back(v);
      }
    }
    budget_ = problem.target_mb + kBudgetSlackMb - pinned_size;
  }

  std::vector<int> solve(double incumbent) {
    best_ = incumbent;
    prepare(ratio_order_);
    search_best(0, budget_, pinned_objective_);

    threshold_ = best_ - problem_.tie_tolerance();
    prepare(index_order_);
    if (!search_first(0, budget_, pinned_objective_)) {
      // Unreachable for a feasible problem: the phase-one optimum itself
      // clears the threshold.
      throw OmpqError(ErrorCode::kInfeasible,
                      "branch and bound found no feasible configuration");
    }
    return bits_;
  }

 private:
  // Sets the branching order and its suffix tables.
  void prepare(const std::vector<std::size_t>& order) {
    order_ = order;
    const std::size_t n = order_.size();
    position_.assign(problem_.num_variables(), n);
    for (std::size_t k = 0; k < n; ++k) position_[order_[k]] = k;
    suffix_min_size_.assign(n + 1, 0.0);
    suffix_min_objective_.assign(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;) {
      const std::size_t v = order_[k];
      suffix_min_size_[k] =
          suffix_min_size_[k + 1] + problem_.mb_per_bit[v] * problem_.bit_min;
      suffix_min_objective_[k] =
          suffix_min_objective_[k + 1] + problem_.coeffs[v] * problem_.bit_min;
    }
  }

  // Relaxation value of the variables at branching positions >= k with
  // `room` megabytes left.
  double relaxation_bound(std::size_t k, double room) const {
    double bound = suffix_min_objective_[k];
    double spare = room - suffix_min_size_[k];
    const double span = problem_.bit_max - problem_.bit_min;
    for (std::size_t v : ratio_order_) {
      if (position_[v] < k || position_[v] >= order_.size()) continue;
      const double c = problem_.coeffs[v];
      if (c <= 0.0) break;
      const double cost = problem_.mb_per_bit[v];
      if (cost <= 0.0) {
        bound += c * span;
        continue;
      }
      if (spare <= 0.0) break;
      const double take = std::min(span, spare / cost);
      bound += c * take;
      spare -= take * cost;
    }
    return bound;
  }

  void search_best(std::size_t k, double room, double objective) {
    if (k == order_.size()) {
      best_ = std::max(best_, objective);
      return;
    }
    const std::size_t v = order_[k];
    const double c = problem_.coeffs[v];
    const double cost = problem_.mb_per_bit[v];
    for (int b = problem_.bit_max; b >= problem_.bit_min; --b) {
      const double used = cost * b;
      if (used + suffix_min_size_[k + 1] > room) continue;
      const double gained = objective + c * b;
      if (gained + relaxation_bound(k + 1, room - used) <= best_) continue;
      search_best(k + 1, room - used, gained);
    }
  }

  bool search_first(std::size_t k, double room, double objective) {
    if (k == order_.size()) return objective >= threshold_;
    const std::size_t v = order_[k];
    const double c = problem_.coeffs[v];
    const double cost = problem_.mb_per_bit[v];
    for (int b = problem_.bit_max; b >= problem_.bit_min; --b) {
      const double used = cost * b;
      if (used + suffix_min_size_[k + 1] > room) continue;
      const double gained = objective + c * b;
      if (gained + relaxation_bound(k + 1, room - used) < threshold_) continue;
      bits_[v] = b;
      if (search_first(k + 1, room - used, gained)) return true;
    }
    return false;
  }

  const AllocationProblem& problem_;
  std::vector<std::size_t> ratio_order_;
  std::vector<std::size_t> index_order_;
  std::vector<int> bits_;
  double pinned_objective_ = 0.0;
  double budget_ = 0.0;

  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_;
  std::vector<double> suffix_min_size_;
  std::vector<double> suffix_min_objective_;
  double best_ = -kInf;
  double threshold_ = 0.0;
};

IntegerSolution make_solution(std::vector<int> bits,
                              const AllocationProblem& problem) {
  IntegerSolution s;
  const std::vector<double> as_double(bits.begin(), bits.end());
  s.objective = problem.objective(as_double);
  s.size_mb = problem.size_mb(as_double);
  s.bits = std::move(bits);
  return s;
}

}  // namespace

std::string_view granularity_name(Granularity g) {
  switch (g) {
    case Granularity::kLayer: return "layer";
    case Granularity::kBlock: return "block";
    case Granularity::kStage: return "stage";
    case Granularity::kNet: return "net";
  }
  return "unknown";
}

std::optional<Granularity> parse_granularity(std::string_view text) {
  if (text == "layer") return Granularity::kLayer;
  if (text == "block") return Granularity::kBlock;
  if (text == "stage") return Granularity::kStage;
  if (text == "net") return Granularity::kNet;
  return std::nullopt;
}

std::size_t AllocationProblem::num_layers() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

std::size_t AllocationProblem::num_free() const {
  return static_cast<std::size_t>(
      std::count_if(pins.begin(), pins.end(),
                    [](const std::optional<int>& p) { return !p; }));
}

double AllocationProblem::min_size_mb() const {
  double size = 0.0;
  for (std::size_t v = 0; v < num_variables(); ++v) {
    size += mb_per_bit[v] * pins[v].value_or(bit_min);
  }
  return size;
}

double AllocationProblem::size_mb(std::span<const double> bits) const {
  double size = 0.0;
  for (std::size_t v = 0; v < num_variables(); ++v) {
    size += mb_per_bit[v] * bits[v];
  }
  return size;
}

double AllocationProblem::objective(std::span<const double> bits) const {
  double sum = 0.0;
  for (std::size_t v = 0; v < num_variables(); ++v) sum += coeffs[v] * bits[v];
  return sum;
}

double AllocationProblem::tie_tolerance() const {
  double scale = 0.0;
  for (std::size_t v = 0; v < num_variables(); ++v) {
    scale += std::abs(coeffs[v]) * std::max(bit_max, pins[v].value_or(0));
  }
  return kObjectiveTieRelTol * scale;
}

void AllocationProblem::validate() const {
  auto fail = [](const std::string& what) -> OmpqError {
    return OmpqError(ErrorCode::kInvalidArgument,
                     "allocation problem: " + what);
  };
  const std::size_t n = num_variables();
  if (n == 0) throw fail("no variables");
  if (mb_per_bit.size() != n || pins.size() != n || groups.size() != n) {
    throw fail("per-variable vectors differ in length");
  }
  if (bit_min < 1 || bit_max > 32 || bit_min > bit_max) {
    throw fail("bit range must satisfy 1 <= min <= max <= 32");
  }
  if (!std::isfinite(target_mb) || target_mb <= 0.0) {
    throw fail("target size must be positive");
  }
  std::vector<char> covered(num_layers(), 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (!std::isfinite(coeffs[v])) throw fail("non-finite coefficient");
    if (!std::isfinite(mb_per_bit[v]) || mb_per_bit[v] < 0.0) {
      throw fail("size per bit must be finite and nonnegative");
    }
    if (pins[v] && (*pins[v] < 1 || *pins[v] > 32)) {
      throw fail("pinned bit must lie in [1, 32]");
    }
    if (groups[v].empty()) throw fail("empty group");
    for (std::size_t layer : groups[v]) {
      if (layer >= covered.size() || covered[layer]) {
        throw fail("groups do not partition the layers");
      }
      covered[layer] = 1;
    }
  }
}

void AllocationProblem::check_feasible() const {
  const double floor = min_size_mb();
  if (floor > target_mb + kBudgetSlackMb) {
    throw InfeasibleError("target " + mb_string(target_mb) +
                              " MB is below the minimal achievable size " +
                              mb_string(floor) + " MB",
                          floor);
  }
}

std::vector<double> objective_coefficients(std::span<const double> theta) {
  if (theta.empty()) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "objective coefficients need at least one layer");
  }
  const std::size_t n = theta.size();
  std::vector<double> c(n);
  double suffix = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    suffix += theta[i];
    c[i] = suffix / static_cast<double>(n - i);
  }
  return c;
}

double layer_size_mb(std::uint64_t param_count, double bit) {
  return static_cast<double>(param_count) * bit / 8.0 / 1e6;
}

double model_size_mb(std::span<const int> weight_bits,
                     const ModelDescriptor& model) {
  if (weight_bits.size() != model.size()) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "bit vector length does not match the model");
  }
  double size = 0.0;
  for (std::size_t i = 0; i < weight_bits.size(); ++i) {
    size += layer_size_mb(model.layers[i].param_count, weight_bits[i]);
  }
  return size;
}

double bops_g(std::span<const int> weight_bits,
              std::span<const int> activation_bits,
              const ModelDescriptor& model) {
  if (weight_bits.size() != model.size() ||
      activation_bits.size() != model.size()) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "bit vector length does not match the model");
  }
  double bops = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    bops += static_cast<double>(model.layers[i].mac_count) * weight_bits[i] *
            activation_bits[i];
  }
  return bops / 1e9;
}

AllocationProblem build_problem(std::span<const double> coeffs,
                                const ModelDescriptor& model,
                                double target_mb) {
  if (coeffs.size() != model.size()) {
    throw OmpqError(ErrorCode::kOrderMismatch,
                    "got " + std::to_string(coeffs.size()) +
                        " coefficients for " + std::to_string(model.size()) +
                        " layers");
  }
  AllocationProblem p;
  p.coeffs.assign(coeffs.begin(), coeffs.end());
  p.target_mb = target_mb;
  p.bit_min = model.bit_min;
  p.bit_max = model.bit_max;
  for (std::size_t i = 0; i < model.size(); ++i) {
    p.mb_per_bit.push_back(layer_size_mb(model.layers[i].param_count, 1.0));
    p.pins.push_back(model.layers[i].fixed_weight_bit);
    p.groups.push_back({i});
  }
  p.validate();
  return p;
}

AllocationProblem group_problem(const AllocationProblem& problem,
                                Granularity granularity,
                                const ModelDescriptor& model) {
  problem.validate();
  if (problem.num_variables() != model.size() ||
      problem.num_layers() != model.size()) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "grouping expects a layer-granularity problem");
  }
  if (granularity == Granularity::kLayer) return problem;

  auto label = [&](std::size_t i) {
    switch (granularity) {
      case Granularity::kBlock: return model.layers[i].block_id;
      case Granularity::kStage: return model.layers[i].stage_id;
      default: return 0;
    }
  };
  std::map<int, std::size_t> slot;
  AllocationProblem out;
  out.target_mb = problem.target_mb;
  out.bit_min = problem.bit_min;
  out.bit_max = problem.bit_max;
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto [it, inserted] = slot.emplace(label(i), out.groups.size());
    if (inserted) {
      out.groups.emplace_back();
      out.coeffs.push_back(0.0);
      out.mb_per_bit.push_back(0.0);
      out.pins.push_back(problem.pins[i]);
    }
    const std::size_t v = it->second;
    out.groups[v].push_back(i);
    out.coeffs[v] += problem.coeffs[i];
    out.mb_per_bit[v] += problem.mb_per_bit[i];
    if (out.pins[v] != problem.pins[i]) {
      throw OmpqError(ErrorCode::kMixedPinInGroup,
                      std::string(granularity_name(granularity)) + " " +
                          std::to_string(label(i)) +
                          " mixes pinned and free layers (at '" +
                          model.layers[i].name + "')");
    }
  }
  return out;
}

ContinuousSolution solve_continuous(const AllocationProblem& problem) {
  problem.validate();
  problem.check_feasible();
  ContinuousSolution s;
  s.bits.resize(problem.num_variables());
  for (std::size_t v = 0; v < problem.num_variables(); ++v) {
    s.bits[v] = problem.pins[v].value_or(problem.bit_min);
  }
  double spare = problem.target_mb - problem.min_size_mb();
  const double span = problem.bit_max - problem.bit_min;
  for (std::size_t v : ratio_order(problem)) {
    const double c = problem.coeffs[v];
    if (c <= 0.0) break;
    const double cost = problem.mb_per_bit[v];
    if (cost <= 0.0) {
      s.bits[v] = problem.bit_max;
      continue;
    }
    if (spare <= 0.0) break;
    const double take = std::min(span, spare / cost);
    s.bits[v] = take == span ? problem.bit_max : problem.bit_min + take;
    spare -= take * cost;
  }
  s.objective = problem.objective(s.bits);
  return s;
}

IntegerSolution integerize_round(std::span<const double> fractional,
                                 const AllocationProblem& problem) {
  problem.validate();
  if (fractional.size() != problem.num_variables()) {
    throw OmpqError(ErrorCode::kInvalidArgument,
                    "fractional solution has the wrong length");
  }
  std::vector<int> bits(problem.num_variables());
  for (std::size_t v = 0; v < bits.size(); ++v) {
    if (problem.pins[v]) {
      bits[v] = *problem.pins[v];
    } else {
      const double rounded = std::floor(fractional[v] + 0.5);
      bits[v] = static_cast<int>(std::clamp(
          rounded, static_cast<double>(problem.bit_min),
          static_cast<double>(problem.bit_max)));
    }
  }
  auto size = [&] {
    return problem.size_mb(std::vector<double>(bits.begin(), bits.end()));
  };
  // Repair: take one bit from the layer that loses the least objective per
  // megabyte freed until the budget holds.
  while (size() > problem.target_mb + kBudgetSlackMb) {
    std::optional<std::size_t> pick;
    double pick_ratio = kInf;
    for (std::size_t v = 0; v < bits.size(); ++v) {
      if (problem.pins[v] || bits[v] <= problem.bit_min ||
          problem.mb_per_bit[v] <= 0.0) {
        continue;
      }
      const double r = ratio(problem.coeffs[v], problem.mb_per_bit[v]);
      if (!pick || r <= pick_ratio) {
        pick = v;
        pick_ratio = r;
      }
    }
    if (!pick) {
      problem.check_feasible();
      throw InfeasibleError("rounding repair cannot meet the target",
                            problem.min_size_mb());
    }
    --bits[*pick];
  }
  return make_solution(std::move(bits), problem);
}

IntegerSolution integerize_dfs(const AllocationProblem& problem) {
  problem.validate();
  problem.check_feasible();
  // The repaired rounding of the relaxation is a feasible incumbent.
  const ContinuousSolution relaxed = solve_continuous(problem);
  const IntegerSolution incumbent = integerize_round(relaxed.bits, problem);
  BranchAndBound search(problem);
  return make_solution(search.solve(incumbent.objective), problem);
}

std::vector<int> expand_bits(std::span<const int> variable_bits,
                             const AllocationProblem& problem) {
  std::vector<int> out(problem.num_layers(), 0);
  for (std::size_t v = 0; v < problem.num_variables(); ++v) {
    for (std::size_t layer : problem.groups[v]) out[layer] = variable_bits[v];
  }
  return out;
}

std::vector<double> expand_bits(std::span<const double> variable_bits,
                                const AllocationProblem& problem) {
  std::vector<double> out(problem.num_layers(), 0.0);
  for (std::size_t v = 0; v < problem.num_variables(); ++v) {
    for (std::size_t layer : problem.groups[v]) out[layer] = variable_bits[v];
  }
  return out;
}

AllocationResult allocate_with_theta(std::span<const double> theta,
                                     const ModelDescriptor& model,
                                     const AllocateOptions& options) {
  model.validate();
  if (theta.size() != model.size()) {
    throw OmpqError(ErrorCode::kOrderMismatch,
                    "importance vector has " + std::to_string(theta.size()) +
                        " entries for " + std::to_string(model.size()) +
                        " layers");
  }
  AllocationProblem problem;
  try {
    problem = group_problem(
        build_problem(objective_coefficients(theta), model, options.target_mb),
        options.granularity, model);
  } catch (const OmpqError&) {
    rethrow_with_context("building the linear program");
  }

  ContinuousSolution relaxed;
  try {
    relaxed = solve_continuous(problem);
  } catch (const OmpqError&) {
    rethrow_with_context("solving the relaxation");
  }

  const Method method = options.method.value_or(
      problem.num_free() <= kDfsMaxFreeVariables ? Method::kDfs
                                                 : Method::kRound);
  AllocationResult result;
  result.method = method;
  result.relaxed_bits = expand_bits(relaxed.bits, problem);
  std::vector<int> activation_bits;
  for (const LayerDescriptor& l : model.layers) {
    activation_bits.push_back(l.activation_bit);
  }

  if (method == Method::kContinuous) {
    for (double b : result.relaxed_bits) {
      result.bits.push_back(static_cast<int>(std::floor(b)));
    }
    result.objective_value = relaxed.objective;
    result.model_size_mb = problem.size_mb(relaxed.bits);
    double bops = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
      bops += static_cast<double>(model.layers[i].mac_count) *
              result.relaxed_bits[i] * activation_bits[i];
    }
    result.bops_g = bops / 1e9;
    return result;
  }

  IntegerSolution solution;
  try {
    solution = method == Method::kRound
                   ? integerize_round(relaxed.bits, problem)
                   : integerize_dfs(problem);
  } catch (const OmpqError&) {
    rethrow_with_context(std::string("integerizing by ") +
                         std::string(method_name(method)));
  }
  result.bits = expand_bits(solution.bits, problem);
  result.objective_value = solution.objective;
  result.model_size_mb = model_size_mb(result.bits, model);
  result.bops_g = bops_g(result.bits, activation_bits, model);
  return result;
}

AllocationResult allocate(const OrmMatrix& k, const ModelDescriptor& model,
                          const AllocateOptions& options) {
  if (k.order() != model.size()) {
    throw OmpqError(ErrorCode::kOrderMismatch,
                    "ORM matrix has order " + std::to_string(k.order()) +
                        " but the model has " + std::to_string(model.size()) +
                        " layers");
  }
  if (!k.layer_names().empty()) {
    for (std::size_t i = 0; i < model.size(); ++i) {
      if (k.layer_names()[i] != model.layers[i].name) {
        throw OmpqError(ErrorCode::kOrderMismatch,
                        "ORM row " + std::to_string(i) + " is '" +
                            k.layer_names()[i] + "' but the model lists '" +
                            model.layers[i].name + "'");
      }
    }
  }
  ImportanceVector theta;
  try {
    theta = importance(gamma(k), options.beta, options.function);
  } catch (const OmpqError&) {
    rethrow_with_context("computing importance");
  }
  return allocate_with_theta(theta.theta, model, options);
}

}  // namespace ompq
