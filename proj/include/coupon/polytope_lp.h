#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coupon/instance.h"
#include "coupon/matrix.h"
#include "coupon/objective.h"

namespace coupon {

enum class ConstraintSense { kLessEqual, kGreaterEqual, kEqual };

struct LinearConstraint {
  std::vector<double> coefficients;
  ConstraintSense sense = ConstraintSense::kLessEqual;
  double rhs = 0.0;
};

// maximize objective . x  subject to constraints, 0 <= x <= upper_bounds.
// An empty upper_bounds vector means no upper bounds.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<LinearConstraint> constraints;
  std::vector<double> upper_bounds;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

std::string_view status_name(LpStatus status);

// Strong-duality certificate of an optimal solve, computed from the original
// data rather than from the final tableau.
struct LpCertificate {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double max_primal_violation = 0.0;
  double max_dual_violation = 0.0;
  bool verified = false;
};

struct GenericLpResult {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective_value = 0.0;
  std::vector<double> row_duals;    // one per constraint
  std::vector<double> bound_duals;  // one per finite upper bound, else 0
  LpCertificate certificate;
  int pivots = 0;
};

// Relative duality-gap tolerance every optimal solve must meet.
inline constexpr double kDualityGapTolerance = 1e-8;

// Dense two-phase simplex with Bland's rule. Optimal results always carry a
// verified certificate; a solve that cannot certify throws NumericError.
GenericLpResult solve_generic_lp(const LinearProgram& lp);

// Partition-matroid + knapsack polytope in y (n x m):
//   sum_d y_vd <= 1 per user, sum budget_coefficients . y <= budget_bound,
//   optionally sum_vd dist_coefficients[v] y_vd <= dist_bound, 0 <= y <= 1.
struct PolytopeSpec {
  int n = 0;
  int m = 0;
  Matrix budget_coefficients;  // p_v(d) * value(d)
  double budget_bound = 0.0;
  std::optional<std::vector<double>> dist_coefficients;  // a_v
  double dist_bound = 0.0;

  // Polytope of an instance, with the distribution knapsack bounded by
  // `dist_bound` when given (K, or b*K for the scaled problem).
  static PolytopeSpec from_instance(const Instance& inst,
                                    std::optional<double> dist_bound = std::nullopt);

  // Largest constraint violation of y (<= 0 means feasible).
  double max_violation(const FractionalSolution& y) const;
};

struct LpSolution {
  FractionalSolution y;
  double objective_value = 0.0;
  LpStatus status = LpStatus::kOptimal;
  LpCertificate certificate;
};

// maximize sum weights_vd y_vd over the polytope. Weights must be finite and
// nonnegative; all-zero weights return y = 0.
LpSolution solve_inner_lp(const Matrix& weights, const PolytopeSpec& spec);

}  // namespace coupon
