#include "coupon/oracle.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coupon/errors.h"
#include "coupon/polytope_lp.h"

namespace coupon {

namespace {

constexpr double kCheckTolerance = 1e-9;

double allocation_space(const Instance& inst) {
  return std::pow(static_cast<double>(inst.m + 1), inst.n);
}

// Nonempty allocations used as the support of alpha in f+.
std::vector<Allocation> extension_support(const Instance& inst, const OracleLimits& limits) {
  std::vector<Allocation> all =
      enumerate_feasible_allocations(inst, /*apply_distribution_budget=*/false,
                                     limits.max_allocations);
  std::erase_if(all, [](const Allocation& a) { return a.empty(); });
  return all;
}

// Adds alpha variables [0, A) and constraints sum alpha <= 1 and
// sum_{S containing vd} alpha_S - y_vd <= 0, with y either fixed (moved to
// the right-hand side) or variables starting at column y_offset.
void add_extension_rows(const Instance& inst, const std::vector<Allocation>& support,
                        LinearProgram& lp, int total_vars, const FractionalSolution* fixed_y,
                        int y_offset) {
  const int count = static_cast<int>(support.size());
  LinearConstraint mass{std::vector<double>(total_vars, 0.0), ConstraintSense::kLessEqual, 1.0};
  for (int s = 0; s < count; ++s) mass.coefficients[s] = 1.0;
  lp.constraints.push_back(std::move(mass));
  for (int v = 0; v < inst.n; ++v) {
    for (int d = 0; d < inst.m; ++d) {
      LinearConstraint row{std::vector<double>(total_vars, 0.0), ConstraintSense::kLessEqual,
                           0.0};
      for (int s = 0; s < count; ++s) {
        if (support[s].raw(v) == d) row.coefficients[s] = 1.0;
      }
      if (fixed_y) {
        row.rhs = (*fixed_y)(v, d);
      } else {
        row.coefficients[y_offset + v * inst.m + d] = -1.0;
      }
      lp.constraints.push_back(std::move(row));
    }
  }
}

std::optional<double> dist_bound_for(const Instance& inst, RelaxationMode mode, double b) {
  switch (mode) {
    case RelaxationMode::kPlain:
      return std::nullopt;
    case RelaxationMode::kFullBudget:
      if (!inst.budget_K) throw ConfigError("relaxation with distribution budget needs budget_K");
      return *inst.budget_K;
    case RelaxationMode::kScaledBudget:
      if (!inst.budget_K) throw ConfigError("relaxation with distribution budget needs budget_K");
      if (!(b > 0.0 && b <= 0.5)) throw ConfigError("b must lie in (0, 1/2]");
      return b * *inst.budget_K;
  }
  return std::nullopt;
}

GenericLpResult solve_or_throw(const LinearProgram& lp, const char* what) {
  GenericLpResult result = solve_generic_lp(lp);
  if (result.status != LpStatus::kOptimal) {
    throw NumericError(std::string(what) + " LP returned status " +
                       std::string(status_name(result.status)));
  }
  return result;
}

std::string grid_label(const std::vector<int>& grid) {
  std::ostringstream out;
  out << "coupons (";
  for (std::size_t v = 0; v < grid.size(); ++v) out << (v ? "," : "") << grid[v] + 1;
  out << ")";
  return out.str();
}

}  // namespace

void check_oracle_limits(const Instance& inst, const OracleLimits& limits) {
  if (inst.n > limits.max_users || inst.m > limits.max_coupons ||
      allocation_space(inst) > static_cast<double>(limits.max_allocations)) {
    throw LimitError("enumeration limit: oracle supports n <= " +
                     std::to_string(limits.max_users) + ", m <= " +
                     std::to_string(limits.max_coupons) + " (instance has n=" +
                     std::to_string(inst.n) + ", m=" + std::to_string(inst.m) + ")");
  }
}

std::vector<Allocation> enumerate_feasible_allocations(const Instance& inst,
                                                       bool apply_distribution_budget,
                                                       std::uint64_t max_allocations) {
  if (allocation_space(inst) > static_cast<double>(max_allocations)) {
    throw LimitError("enumeration limit: (m+1)^n exceeds " + std::to_string(max_allocations));
  }
  const auto space = static_cast<std::uint64_t>(allocation_space(inst));
  std::vector<Allocation> out;
  out.reserve(space);
  for (std::uint64_t code = 0; code < space; ++code) {
    Allocation a = Allocation::from_code(code, inst.n, inst.m);
    if (apply_distribution_budget && inst.budget_K &&
        distribution_cost(inst, a) > *inst.budget_K) {
      continue;
    }
    out.push_back(std::move(a));
  }
  return out;
}

PolicyResult solve_optimal_policy(const Instance& inst, const CascadeUtility& util,
                                  const OracleLimits& limits) {
  check_oracle_limits(inst, limits);
  const ExactObjective objective(inst, util, limits.objective);
  const std::vector<Allocation> allocations =
      enumerate_feasible_allocations(inst, true, limits.max_allocations);
  const int count = static_cast<int>(allocations.size());

  LinearProgram lp;
  lp.objective.resize(count);
  LinearConstraint normalization{std::vector<double>(count, 1.0), ConstraintSense::kEqual, 1.0};
  LinearConstraint budget{std::vector<double>(count, 0.0), ConstraintSense::kLessEqual,
                          inst.budget_B};
  for (int s = 0; s < count; ++s) {
    lp.objective[s] = objective.f(allocations[s]);
    budget.coefficients[s] = cost_exact(inst, allocations[s]);
  }
  lp.constraints = {std::move(normalization), std::move(budget)};
  const GenericLpResult result = solve_or_throw(lp, "policy");

  PolicyResult out;
  out.value = result.objective_value;
  for (int s = 0; s < count; ++s) {
    if (result.x[s] > 1e-12) {
      out.policy.support.push_back({allocations[s], result.x[s]});
      out.expected_cost += result.x[s] * cost_exact(inst, allocations[s]);
    }
  }
  return out;
}

RelaxationResult solve_concave_relaxation(const Instance& inst, const CascadeUtility& util,
                                          RelaxationMode mode, double b,
                                          const OracleLimits& limits) {
  check_oracle_limits(inst, limits);
  const std::optional<double> dist_bound = dist_bound_for(inst, mode, b);
  const ExactObjective objective(inst, util, limits.objective);
  const std::vector<Allocation> support = extension_support(inst, limits);
  const int count = static_cast<int>(support.size());
  const int pairs = inst.n * inst.m;
  const int total = count + pairs;

  LinearProgram lp;
  lp.objective.assign(total, 0.0);
  for (int s = 0; s < count; ++s) lp.objective[s] = objective.f(support[s]);
  add_extension_rows(inst, support, lp, total, nullptr, count);
  for (int v = 0; v < inst.n; ++v) {
    LinearConstraint row{std::vector<double>(total, 0.0), ConstraintSense::kLessEqual, 1.0};
    for (int d = 0; d < inst.m; ++d) row.coefficients[count + v * inst.m + d] = 1.0;
    lp.constraints.push_back(std::move(row));
  }
  LinearConstraint budget{std::vector<double>(total, 0.0), ConstraintSense::kLessEqual,
                          inst.budget_B};
  for (int v = 0; v < inst.n; ++v) {
    for (int d = 0; d < inst.m; ++d) {
      budget.coefficients[count + v * inst.m + d] = inst.expected_cost(v, d);
    }
  }
  lp.constraints.push_back(std::move(budget));
  if (dist_bound) {
    LinearConstraint dist{std::vector<double>(total, 0.0), ConstraintSense::kLessEqual,
                          *dist_bound};
    for (int v = 0; v < inst.n; ++v) {
      for (int d = 0; d < inst.m; ++d) dist.coefficients[count + v * inst.m + d] = inst.dist_cost[v];
    }
    lp.constraints.push_back(std::move(dist));
  }
  const GenericLpResult result = solve_or_throw(lp, "concave relaxation");

  RelaxationResult out;
  out.value = result.objective_value;
  out.y = FractionalSolution(inst.n, inst.m);
  for (int v = 0; v < inst.n; ++v) {
    for (int d = 0; d < inst.m; ++d) {
      out.y(v, d) = std::clamp(result.x[count + v * inst.m + d], 0.0, 1.0);
    }
  }
  return out;
}

double concave_extension(const Instance& inst, const CascadeUtility& util,
                         const FractionalSolution& y, bool use_reference,
                         const OracleLimits& limits) {
  check_oracle_limits(inst, limits);
  if (y.num_users() != inst.n || y.num_coupons() != inst.m) {
    throw ValidationError("fractional solution must be n x m");
  }
  const ExactObjective objective(inst, util, limits.objective);
  const std::vector<Allocation> support = extension_support(inst, limits);
  const int count = static_cast<int>(support.size());
  LinearProgram lp;
  lp.objective.resize(count);
  for (int s = 0; s < count; ++s) {
    lp.objective[s] = use_reference ? objective.g(support[s]) : objective.f(support[s]);
  }
  add_extension_rows(inst, support, lp, count, &y, 0);
  return solve_or_throw(lp, "concave extension").objective_value;
}

bool SandwichReport::ok() const {
  return max_violation <= kCheckTolerance && reference_submodular && induced_submodular;
}

SandwichReport verify_eps_sandwich(const Instance& inst, const CascadeUtility& util,
                                   const OracleLimits& limits) {
  check_oracle_limits(inst, limits);
  if (!util.has_reference()) throw ConfigError("sandwich check needs a submodular reference");
  const ExactObjective objective(inst, util, limits.objective);
  const double eps = util.epsilon();

  SandwichReport report;
  for (const Allocation& s : enumerate_feasible_allocations(inst, true, limits.max_allocations)) {
    const double f = objective.f(s);
    const double g = objective.g(s);
    const double scale = 1.0 + std::abs(g);
    const double violation = std::max((1.0 - eps) * g - f, f - (1.0 + eps) * g) / scale;
    ++report.checked;
    if (violation > report.max_violation) {
      report.max_violation = violation;
      if (violation > kCheckTolerance) report.witness = s;
    }
  }

  if (inst.n <= 12) {
    const SubmodularityReport q_check =
        check_submodular_monotone(objective.q_table(), inst.n, 1e-12);
    report.reference_submodular = q_check.ok;
    if (q_check.violation) report.reference_witness = "q: " + describe(*q_check.violation);

    // For each coupon-per-user grid, g as a function of the users offered
    // their grid coupon.
    std::vector<int> grid(inst.n, 0);
    const std::size_t subsets = std::size_t{1} << inst.n;
    while (report.induced_submodular) {
      std::vector<double> table(subsets);
      for (std::size_t users = 0; users < subsets; ++users) {
        Allocation a(inst.n);
        for (int v = 0; v < inst.n; ++v) {
          if (users >> v & 1) a.assign(v, grid[v]);
        }
        table[users] = objective.g(a);
      }
      const SubmodularityReport check = check_submodular_monotone(table, inst.n, 1e-10);
      if (!check.ok) {
        report.induced_submodular = false;
        report.induced_witness = "g on " + grid_label(grid) + ": " + describe(*check.violation);
      }
      int v = 0;
      while (v < inst.n && ++grid[v] == inst.m) grid[v++] = 0;
      if (v == inst.n) break;
    }
  }
  return report;
}

bool DominanceReport::ok() const { return max_violation <= 1e-8; }

FractionalSolution random_feasible_point(const Instance& inst, Rng& rng,
                                         std::optional<double> dist_bound) {
  FractionalSolution y(inst.n, inst.m);
  for (int v = 0; v < inst.n; ++v) {
    // Row mass uniform in [0, 1], split by normalized exponentials.
    const double mass = uniform01(rng);
    std::vector<double> parts(inst.m);
    double total = 0.0;
    for (double& p : parts) {
      p = -std::log(1.0 - uniform01(rng));
      total += p;
    }
    for (int d = 0; d < inst.m; ++d) y(v, d) = total > 0.0 ? mass * parts[d] / total : 0.0;
  }
  double cost = 0.0;
  double dist = 0.0;
  for (int v = 0; v < inst.n; ++v) {
    for (int d = 0; d < inst.m; ++d) {
      cost += inst.expected_cost(v, d) * y(v, d);
      dist += inst.dist_cost[v] * y(v, d);
    }
  }
  double scale = 1.0;
  if (cost > inst.budget_B) scale = std::min(scale, inst.budget_B / cost);
  if (dist_bound && dist > *dist_bound) scale = std::min(scale, *dist_bound / dist);
  if (scale < 1.0) {
    for (double& x : y.y.data()) x *= scale;
  }
  return y;
}

DominanceReport verify_concave_dominance(const Instance& inst, const CascadeUtility& util,
                                         int points, std::uint64_t seed,
                                         const OracleLimits& limits) {
  check_oracle_limits(inst, limits);
  if (!util.has_reference()) throw ConfigError("dominance check needs a submodular reference");
  const double eps = util.epsilon();
  Rng rng(splitmix64(seed));
  DominanceReport report;
  for (int k = 0; k <= points; ++k) {
    const FractionalSolution y =
        k == 0 ? FractionalSolution(inst.n, inst.m) : random_feasible_point(inst, rng);
    const double f_plus = concave_extension(inst, util, y, false, limits);
    const double g_plus = concave_extension(inst, util, y, true, limits);
    const double violation = f_plus - (1.0 + eps) * g_plus;
    ++report.points;
    if (violation > report.max_violation) {
      report.max_violation = violation;
      if (violation > 1e-8) report.witness = y;
    }
  }
  return report;
}

InequalityCheck verify_relaxation_bound(const Instance& inst, const CascadeUtility& util,
                                        const OracleLimits& limits) {
  const PolicyResult policy = solve_optimal_policy(inst, util, limits);
  const RelaxationMode mode = inst.budget_K ? RelaxationMode::kFullBudget : RelaxationMode::kPlain;
  const RelaxationResult relaxed = solve_concave_relaxation(inst, util, mode, 0.25, limits);
  InequalityCheck check{policy.value, relaxed.value, true};
  check.holds = check.lhs <= check.rhs + kCheckTolerance * (1.0 + std::abs(check.rhs));
  return check;
}

InequalityCheck verify_scaled_relaxation(const Instance& inst, const CascadeUtility& util,
                                         double b, const OracleLimits& limits) {
  const double scaled =
      solve_concave_relaxation(inst, util, RelaxationMode::kScaledBudget, b, limits).value;
  const double full =
      solve_concave_relaxation(inst, util, RelaxationMode::kFullBudget, b, limits).value;
  InequalityCheck check{scaled, b * full, true};
  check.holds = check.lhs + kCheckTolerance * (1.0 + std::abs(check.rhs)) >= check.rhs;
  return check;
}

}  // namespace coupon
