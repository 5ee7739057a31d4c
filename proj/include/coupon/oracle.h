#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coupon/cascade.h"
#include "coupon/instance.h"
#include "coupon/objective.h"

namespace coupon {

// Exhaustive oracles are only run on tiny instances.
struct OracleLimits {
  int max_users = 4;
  int max_coupons = 2;
  std::uint64_t max_allocations = 100000;
  ObjectiveLimits objective;
};

// Throws LimitError ("enumeration limit ...") if the instance is too large
// for the LP-based oracles.
void check_oracle_limits(const Instance& inst, const OracleLimits& limits);

// Every allocation with at most one coupon per user; with
// `apply_distribution_budget` and K present, only those with sum a_v <= K.
std::vector<Allocation> enumerate_feasible_allocations(const Instance& inst,
                                                       bool apply_distribution_budget = true,
                                                       std::uint64_t max_allocations = 100000);

struct PolicyEntry {
  Allocation allocation;
  double theta = 0.0;
};

// Probability distribution over allocations.
struct Policy {
  std::vector<PolicyEntry> support;
};

struct PolicyResult {
  Policy policy;
  double value = 0.0;
  double expected_cost = 0.0;
};

// Optimal randomized policy: max sum theta_S f(S) subject to
// sum theta_S = 1, sum theta_S c(S) <= B, theta >= 0, over all feasible
// allocations (distribution budget applied when K is present).
PolicyResult solve_optimal_policy(const Instance& inst, const CascadeUtility& util,
                                  const OracleLimits& limits = {});

// kPlain: partition + expected-cost constraints only. kFullBudget adds the
// distribution knapsack with bound K; kScaledBudget uses b * K.
enum class RelaxationMode { kPlain, kFullBudget, kScaledBudget };

struct RelaxationResult {
  FractionalSolution y;
  double value = 0.0;
};

// max over y in the polytope of the concave extension f+(y), solved as one LP
// in (alpha, y).
RelaxationResult solve_concave_relaxation(const Instance& inst, const CascadeUtility& util,
                                          RelaxationMode mode, double b = 0.25,
                                          const OracleLimits& limits = {});

// f+(y) (or g+(y) with use_reference) at a fixed point y.
double concave_extension(const Instance& inst, const CascadeUtility& util,
                         const FractionalSolution& y, bool use_reference = false,
                         const OracleLimits& limits = {});

struct SandwichReport {
  int checked = 0;
  double max_violation = 0.0;  // > tolerance means the sandwich failed
  std::optional<Allocation> witness;
  bool reference_submodular = true;
  std::optional<std::string> reference_witness;
  bool induced_submodular = true;  // g on each fixed coupon-per-user grid
  std::optional<std::string> induced_witness;

  bool ok() const;
};

// (1 - eps) g(S) <= f(S) <= (1 + eps) g(S) for every feasible S, with
// g(S) = sum_U Pr(U; S) q(U); plus submodularity of q and of g restricted to
// each coupon-per-user grid.
SandwichReport verify_eps_sandwich(const Instance& inst, const CascadeUtility& util,
                                   const OracleLimits& limits = {});

struct DominanceReport {
  int points = 0;
  double max_violation = 0.0;
  std::optional<FractionalSolution> witness;

  bool ok() const;
};

// f+(y) <= (1 + eps) g+(y) + 1e-8 on `points` random feasible y (plus y = 0).
DominanceReport verify_concave_dominance(const Instance& inst, const CascadeUtility& util,
                                         int points = 10, std::uint64_t seed = 0,
                                         const OracleLimits& limits = {});

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

// Optimal policy value <= relaxation value (relaxation matching the model).
InequalityCheck verify_relaxation_bound(const Instance& inst, const CascadeUtility& util,
                                        const OracleLimits& limits = {});

// Scaled relaxation value >= b * full-budget relaxation value.
InequalityCheck verify_scaled_relaxation(const Instance& inst, const CascadeUtility& util,
                                         double b, const OracleLimits& limits = {});

// Random point of the base polytope (row sums <= 1, expected cost <= B,
// distribution cost <= `dist_bound` when given).
FractionalSolution random_feasible_point(const Instance& inst, Rng& rng,
                                         std::optional<double> dist_bound = std::nullopt);

}  // namespace coupon
