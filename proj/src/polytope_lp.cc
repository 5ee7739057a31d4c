#include "coupon/polytope_lp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coupon/errors.h"

namespace coupon {

namespace {

constexpr double kPivotTolerance = 1e-11;
constexpr double kCostTolerance = 1e-11;
constexpr double kFeasibilityTolerance = 1e-9;
constexpr int kMaxPivots = 200000;

enum class ColumnType { kStructural, kSlack, kSurplus, kArtificial };

// Row-major simplex tableau over normalized rows (rhs >= 0).
class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), cells_(rows, cols + 1) {}

  double& at(int r, int c) { return cells_(r, c); }
  double at(int r, int c) const { return cells_(r, c); }
  double& rhs(int r) { return cells_(r, cols_); }
  double rhs(int r) const { return cells_(r, cols_); }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void pivot(int pr, int pc, std::vector<double>& reduced) {
    const double inv = 1.0 / cells_(pr, pc);
    for (int c = 0; c <= cols_; ++c) cells_(pr, c) *= inv;
    cells_(pr, pc) = 1.0;
    for (int r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      const double factor = cells_(r, pc);
      if (factor == 0.0) continue;
      for (int c = 0; c <= cols_; ++c) cells_(r, c) -= factor * cells_(pr, c);
      cells_(r, pc) = 0.0;
    }
    const double factor = reduced[pc];
    if (factor != 0.0) {
      for (int c = 0; c < cols_; ++c) reduced[c] -= factor * cells_(pr, c);
      reduced[pc] = 0.0;
    }
  }

 private:
  int rows_;
  int cols_;
  Matrix cells_;
};

struct SimplexState {
  Tableau tableau;
  std::vector<int> basis;
  std::vector<ColumnType> types;
  int pivots = 0;
};

// Minimizes cost . x over the current tableau. Columns with allowed[c] false
// never enter. Returns false if unbounded.
bool run_simplex(SimplexState& st, const std::vector<double>& cost,
                 const std::vector<char>& allowed) {
  Tableau& t = st.tableau;
  std::vector<double> reduced(cost);
  for (int r = 0; r < t.rows(); ++r) {
    const double cb = cost[st.basis[r]];
    if (cb == 0.0) continue;
    for (int c = 0; c < t.cols(); ++c) reduced[c] -= cb * t.at(r, c);
  }
  while (true) {
    // Bland: lowest-index improving column, lowest-index basic variable on ties.
    int entering = -1;
    for (int c = 0; c < t.cols(); ++c) {
      if (allowed[c] && reduced[c] < -kCostTolerance) {
        entering = c;
        break;
      }
    }
    if (entering < 0) return true;
    int leaving = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < t.rows(); ++r) {
      const double a = t.at(r, entering);
      if (a <= kPivotTolerance) continue;
      const double ratio = std::max(0.0, t.rhs(r)) / a;
      if (ratio < best_ratio - 1e-15 ||
          (std::abs(ratio - best_ratio) <= 1e-15 && st.basis[r] < st.basis[leaving])) {
        best_ratio = ratio;
        leaving = r;
      }
    }
    if (leaving < 0) return false;
    t.pivot(leaving, entering, reduced);
    st.basis[leaving] = entering;
    if (++st.pivots > kMaxPivots) throw NumericError("simplex pivot limit exceeded");
  }
}

// Solves the square system M x = rhs by Gaussian elimination with partial
// pivoting. M is given column by column.
std::vector<double> solve_square(std::vector<std::vector<double>> a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int best = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[best][col])) best = r;
    }
    if (std::abs(a[best][col]) < 1e-14) throw NumericError("singular basis matrix");
    std::swap(a[best], a[col]);
    std::swap(b[best], b[col]);
    for (int r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

struct NormalizedRow {
  std::vector<double> a;
  ConstraintSense sense;
  double rhs;
  double sign;  // normalized = sign * original
};

LpCertificate certify(const LinearProgram& lp, const std::vector<NormalizedRow>& rows,
                      const std::vector<double>& x, const std::vector<double>& duals) {
  const int nvars = static_cast<int>(lp.objective.size());
  const int ncons = static_cast<int>(lp.constraints.size());
  LpCertificate cert;
  double scale = 1.0;
  for (int j = 0; j < nvars; ++j) cert.primal_objective += lp.objective[j] * x[j];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const NormalizedRow& row = rows[i];
    double lhs = 0.0;
    for (int j = 0; j < nvars; ++j) lhs += row.a[j] * x[j];
    const double slack = lhs - row.rhs;
    double violation = 0.0;
    switch (row.sense) {
      case ConstraintSense::kLessEqual:
        violation = slack;
        break;
      case ConstraintSense::kGreaterEqual:
        violation = -slack;
        break;
      case ConstraintSense::kEqual:
        violation = std::abs(slack);
        break;
    }
    cert.max_primal_violation = std::max(cert.max_primal_violation, violation);
    // Dual sign: >= 0 on <= rows, <= 0 on >= rows (maximization form).
    const double y = duals[i];
    if (row.sense == ConstraintSense::kLessEqual) {
      cert.max_dual_violation = std::max(cert.max_dual_violation, -y);
    } else if (row.sense == ConstraintSense::kGreaterEqual) {
      cert.max_dual_violation = std::max(cert.max_dual_violation, y);
    }
    cert.dual_objective += y * row.rhs;
    scale = std::max(scale, std::abs(row.rhs));
  }
  for (int j = 0; j < nvars; ++j) {
    cert.max_primal_violation = std::max(cert.max_primal_violation, -x[j]);
    double reduced = -lp.objective[j];
    for (std::size_t i = 0; i < rows.size(); ++i) reduced += rows[i].a[j] * duals[i];
    cert.max_dual_violation = std::max(cert.max_dual_violation, -reduced);
  }
  (void)ncons;
  cert.gap = std::abs(cert.primal_objective - cert.dual_objective);
  const double tol = kDualityGapTolerance * (1.0 + std::abs(cert.primal_objective));
  cert.verified = cert.gap <= tol && cert.max_primal_violation <= kFeasibilityTolerance * scale &&
                  cert.max_dual_violation <= 1e-8 * (1.0 + std::abs(cert.primal_objective));
  return cert;
}

std::string diagnostics(const LpCertificate& cert, int pivots) {
  std::ostringstream out;
  out << "primal " << cert.primal_objective << ", dual " << cert.dual_objective << ", gap "
      << cert.gap << ", max primal violation " << cert.max_primal_violation
      << ", max dual violation " << cert.max_dual_violation << ", pivots " << pivots;
  return out.str();
}

}  // namespace

std::string_view status_name(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
  }
  return "?";
}

GenericLpResult solve_generic_lp(const LinearProgram& lp) {
  const int nvars = static_cast<int>(lp.objective.size());
  if (!lp.upper_bounds.empty() && static_cast<int>(lp.upper_bounds.size()) != nvars) {
    throw ValidationError("upper_bounds must be empty or have one entry per variable");
  }
  for (double c : lp.objective) {
    if (!std::isfinite(c)) throw ValidationError("LP objective must be finite");
  }

  // Original constraints followed by finite upper bounds, each normalized to
  // a nonnegative right-hand side.
  std::vector<NormalizedRow> rows;
  std::vector<int> bound_var;
  for (const LinearConstraint& con : lp.constraints) {
    if (static_cast<int>(con.coefficients.size()) != nvars) {
      throw ValidationError("LP constraint has the wrong number of coefficients");
    }
    for (double a : con.coefficients) {
      if (!std::isfinite(a)) throw ValidationError("LP coefficients must be finite");
    }
    if (!std::isfinite(con.rhs)) throw ValidationError("LP right-hand sides must be finite");
    rows.push_back({con.coefficients, con.sense, con.rhs, 1.0});
  }
  for (int j = 0; j < static_cast<int>(lp.upper_bounds.size()); ++j) {
    const double ub = lp.upper_bounds[j];
    if (std::isinf(ub) && ub > 0) continue;
    if (!std::isfinite(ub)) throw ValidationError("upper bounds must be finite or +inf");
    std::vector<double> a(nvars, 0.0);
    a[j] = 1.0;
    rows.push_back({std::move(a), ConstraintSense::kLessEqual, ub, 1.0});
    bound_var.push_back(j);
  }
  std::vector<NormalizedRow> normalized = rows;
  for (NormalizedRow& row : normalized) {
    if (row.rhs < 0.0) {
      for (double& a : row.a) a = -a;
      row.rhs = -row.rhs;
      row.sign = -1.0;
      if (row.sense == ConstraintSense::kLessEqual) {
        row.sense = ConstraintSense::kGreaterEqual;
      } else if (row.sense == ConstraintSense::kGreaterEqual) {
        row.sense = ConstraintSense::kLessEqual;
      }
    }
  }

  const int nrows = static_cast<int>(normalized.size());
  std::vector<ColumnType> types(nvars, ColumnType::kStructural);
  std::vector<int> slack_col(nrows, -1);
  std::vector<int> surplus_col(nrows, -1);
  std::vector<int> artificial_col(nrows, -1);
  for (int r = 0; r < nrows; ++r) {
    if (normalized[r].sense == ConstraintSense::kLessEqual) {
      slack_col[r] = static_cast<int>(types.size());
      types.push_back(ColumnType::kSlack);
    } else if (normalized[r].sense == ConstraintSense::kGreaterEqual) {
      surplus_col[r] = static_cast<int>(types.size());
      types.push_back(ColumnType::kSurplus);
    }
  }
  for (int r = 0; r < nrows; ++r) {
    if (normalized[r].sense != ConstraintSense::kLessEqual) {
      artificial_col[r] = static_cast<int>(types.size());
      types.push_back(ColumnType::kArtificial);
    }
  }
  const int ncols = static_cast<int>(types.size());

  SimplexState st{Tableau(nrows, ncols), std::vector<int>(nrows), types, 0};
  for (int r = 0; r < nrows; ++r) {
    for (int j = 0; j < nvars; ++j) st.tableau.at(r, j) = normalized[r].a[j];
    st.tableau.rhs(r) = normalized[r].rhs;
    if (slack_col[r] >= 0) {
      st.tableau.at(r, slack_col[r]) = 1.0;
      st.basis[r] = slack_col[r];
    }
    if (surplus_col[r] >= 0) st.tableau.at(r, surplus_col[r]) = -1.0;
    if (artificial_col[r] >= 0) {
      st.tableau.at(r, artificial_col[r]) = 1.0;
      st.basis[r] = artificial_col[r];
    }
  }

  GenericLpResult result;
  const bool has_artificials = std::any_of(types.begin(), types.end(), [](ColumnType t) {
    return t == ColumnType::kArtificial;
  });
  if (has_artificials) {
    std::vector<double> cost(ncols, 0.0);
    std::vector<char> allowed(ncols, 1);
    for (int c = 0; c < ncols; ++c) {
      if (types[c] == ColumnType::kArtificial) cost[c] = 1.0;
    }
    run_simplex(st, cost, allowed);
    double infeasibility = 0.0;
    double rhs_scale = 1.0;
    for (int r = 0; r < nrows; ++r) {
      rhs_scale = std::max(rhs_scale, normalized[r].rhs);
      if (types[st.basis[r]] == ColumnType::kArtificial) infeasibility += st.tableau.rhs(r);
    }
    if (infeasibility > kFeasibilityTolerance * rhs_scale) {
      result.status = LpStatus::kInfeasible;
      result.pivots = st.pivots;
      return result;
    }
    // Drive remaining (zero-level) artificials out of the basis where possible.
    std::vector<double> scratch(ncols, 0.0);
    for (int r = 0; r < nrows; ++r) {
      if (types[st.basis[r]] != ColumnType::kArtificial) continue;
      for (int c = 0; c < ncols; ++c) {
        if (types[c] != ColumnType::kArtificial && std::abs(st.tableau.at(r, c)) > 1e-9) {
          st.tableau.pivot(r, c, scratch);
          st.basis[r] = c;
          ++st.pivots;
          break;
        }
      }
    }
  }

  std::vector<double> cost(ncols, 0.0);
  std::vector<char> allowed(ncols, 1);
  for (int j = 0; j < nvars; ++j) cost[j] = -lp.objective[j];
  for (int c = 0; c < ncols; ++c) {
    if (types[c] == ColumnType::kArtificial) allowed[c] = 0;
  }
  if (!run_simplex(st, cost, allowed)) {
    result.status = LpStatus::kUnbounded;
    result.pivots = st.pivots;
    return result;
  }

  result.status = LpStatus::kOptimal;
  result.pivots = st.pivots;
  result.x.assign(nvars, 0.0);
  for (int r = 0; r < nrows; ++r) {
    if (st.basis[r] < nvars) result.x[st.basis[r]] = std::max(0.0, st.tableau.rhs(r));
  }
  for (int j = 0; j < static_cast<int>(lp.upper_bounds.size()); ++j) {
    result.x[j] = std::min(result.x[j], lp.upper_bounds[j]);
  }
  for (int j = 0; j < nvars; ++j) result.objective_value += lp.objective[j] * result.x[j];

  // Duals w solve B^T w = c_B on the normalized rows (minimization of -c).
  std::vector<std::vector<double>> bt(nrows, std::vector<double>(nrows, 0.0));
  std::vector<double> cb(nrows, 0.0);
  for (int r = 0; r < nrows; ++r) {
    const int col = st.basis[r];
    for (int i = 0; i < nrows; ++i) {
      double entry = 0.0;
      if (col < nvars) {
        entry = normalized[i].a[col];
      } else if (col == slack_col[i] || col == artificial_col[i]) {
        entry = 1.0;
      } else if (col == surplus_col[i]) {
        entry = -1.0;
      }
      bt[r][i] = entry;
    }
    cb[r] = col < nvars ? -lp.objective[col] : 0.0;
  }
  std::vector<double> w = solve_square(bt, cb);
  // Maximization duals on the normalized rows, then on the original rows.
  std::vector<double> norm_duals(nrows);
  for (int r = 0; r < nrows; ++r) norm_duals[r] = -w[r];

  result.certificate = certify(lp, normalized, result.x, norm_duals);
  if (!result.certificate.verified) {
    throw NumericError("LP optimality certificate failed: " +
                       diagnostics(result.certificate, st.pivots));
  }
  const int ncons = static_cast<int>(lp.constraints.size());
  result.row_duals.resize(ncons);
  for (int i = 0; i < ncons; ++i) result.row_duals[i] = normalized[i].sign * norm_duals[i];
  result.bound_duals.assign(lp.upper_bounds.size(), 0.0);
  for (std::size_t k = 0; k < bound_var.size(); ++k) {
    result.bound_duals[bound_var[k]] = normalized[ncons + k].sign * norm_duals[ncons + k];
  }
  return result;
}

PolytopeSpec PolytopeSpec::from_instance(const Instance& inst, std::optional<double> dist_bound) {
  PolytopeSpec spec;
  spec.n = inst.n;
  spec.m = inst.m;
  spec.budget_coefficients = Matrix(inst.n, inst.m);
  for (int v = 0; v < inst.n; ++v) {
    for (int d = 0; d < inst.m; ++d) spec.budget_coefficients(v, d) = inst.expected_cost(v, d);
  }
  spec.budget_bound = inst.budget_B;
  if (dist_bound) {
    spec.dist_coefficients = inst.dist_cost;
    spec.dist_bound = *dist_bound;
  }
  return spec;
}

double PolytopeSpec::max_violation(const FractionalSolution& y) const {
  double worst = -std::numeric_limits<double>::infinity();
  double budget = 0.0;
  double dist = 0.0;
  for (int v = 0; v < n; ++v) {
    double row = 0.0;
    for (int d = 0; d < m; ++d) {
      const double x = y(v, d);
      worst = std::max({worst, -x, x - 1.0});
      row += x;
      budget += budget_coefficients(v, d) * x;
      if (dist_coefficients) dist += (*dist_coefficients)[v] * x;
    }
    worst = std::max(worst, row - 1.0);
  }
  worst = std::max(worst, budget - budget_bound);
  if (dist_coefficients) worst = std::max(worst, dist - dist_bound);
  return worst;
}

LpSolution solve_inner_lp(const Matrix& weights, const PolytopeSpec& spec) {
  if (weights.rows() != spec.n || weights.cols() != spec.m) {
    throw ValidationError("weights must be n x m");
  }
  for (double w : weights.data()) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("inner LP weights must be finite and nonnegative");
    }
  }
  if (!(spec.budget_bound > 0.0) || (spec.dist_coefficients && !(spec.dist_bound > 0.0))) {
    throw ValidationError("polytope bounds must be > 0");
  }
  LpSolution out;
  out.y = FractionalSolution(spec.n, spec.m);
  if (std::all_of(weights.data().begin(), weights.data().end(), [](double w) { return w == 0.0; })) {
    out.certificate.verified = true;
    return out;
  }

  // Variables y_vd in row-major order. The box y <= 1 is implied by the row
  // caps and nonnegativity, so it is not added.
  const int nvars = spec.n * spec.m;
  LinearProgram lp;
  lp.objective.assign(weights.data().begin(), weights.data().end());
  for (int v = 0; v < spec.n; ++v) {
    LinearConstraint row{std::vector<double>(nvars, 0.0), ConstraintSense::kLessEqual, 1.0};
    for (int d = 0; d < spec.m; ++d) row.coefficients[v * spec.m + d] = 1.0;
    lp.constraints.push_back(std::move(row));
  }
  LinearConstraint budget{std::vector<double>(spec.budget_coefficients.data().begin(),
                                              spec.budget_coefficients.data().end()),
                          ConstraintSense::kLessEqual, spec.budget_bound};
  lp.constraints.push_back(std::move(budget));
  if (spec.dist_coefficients) {
    LinearConstraint dist{std::vector<double>(nvars, 0.0), ConstraintSense::kLessEqual,
                          spec.dist_bound};
    for (int v = 0; v < spec.n; ++v) {
      for (int d = 0; d < spec.m; ++d) dist.coefficients[v * spec.m + d] = (*spec.dist_coefficients)[v];
    }
    lp.constraints.push_back(std::move(dist));
  }

  const GenericLpResult result = solve_generic_lp(lp);
  if (result.status != LpStatus::kOptimal) {
    throw NumericError("inner LP returned status " + std::string(status_name(result.status)));
  }
  for (int v = 0; v < spec.n; ++v) {
    for (int d = 0; d < spec.m; ++d) out.y(v, d) = result.x[v * spec.m + d];
  }
  out.objective_value = result.objective_value;
  out.certificate = result.certificate;
  return out;
}

}  // namespace coupon
