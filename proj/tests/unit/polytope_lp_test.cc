#include <cmath>

#include "builders.h"
#include "coupon/errors.h"
#include "coupon/polytope_lp.h"
#include "doctest.h"
#include "oracles.h"

using namespace coupon;

namespace {

PolytopeSpec spec_of(const Instance& inst) { return PolytopeSpec::from_instance(inst); }

Matrix weights_of(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix w(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()), 0.0);
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double x : row) w(r, c++) = x;
    ++r;
  }
  return w;
}

}  // namespace

TEST_CASE("generic lp small cases") {
  LinearProgram one;
  one.objective = {1.0};
  one.constraints = {{{1.0}, ConstraintSense::kLessEqual, 1.0}};
  GenericLpResult r = solve_generic_lp(one);
  REQUIRE(r.status == LpStatus::kOptimal);
  CHECK(r.objective_value == doctest::Approx(1.0));
  CHECK(r.certificate.verified);

  LinearProgram degenerate;
  degenerate.objective = {1.0, 1.0};
  degenerate.constraints = {{{1.0, 1.0}, ConstraintSense::kLessEqual, 1.0}};
  r = solve_generic_lp(degenerate);
  CHECK(r.objective_value == doctest::Approx(1.0));

  LinearProgram equality;
  equality.objective = {1.0, 2.0};
  equality.constraints = {{{1.0, 1.0}, ConstraintSense::kEqual, 1.0},
                          {{1.0, 0.0}, ConstraintSense::kGreaterEqual, 0.25}};
  r = solve_generic_lp(equality);
  CHECK(r.objective_value == doctest::Approx(1.75));
  CHECK(r.x[0] == doctest::Approx(0.25));

  LinearProgram bounded;
  bounded.objective = {3.0, 1.0};
  bounded.constraints = {{{1.0, 1.0}, ConstraintSense::kLessEqual, 4.0}};
  bounded.upper_bounds = {1.5, 10.0};
  r = solve_generic_lp(bounded);
  CHECK(r.objective_value == doctest::Approx(7.0));

  LinearProgram infeasible;
  infeasible.objective = {1.0};
  infeasible.constraints = {{{1.0}, ConstraintSense::kLessEqual, 1.0},
                            {{1.0}, ConstraintSense::kGreaterEqual, 2.0}};
  CHECK(solve_generic_lp(infeasible).status == LpStatus::kInfeasible);

  LinearProgram unbounded;
  unbounded.objective = {1.0, 0.0};
  unbounded.constraints = {{{0.0, 1.0}, ConstraintSense::kLessEqual, 1.0}};
  CHECK(solve_generic_lp(unbounded).status == LpStatus::kUnbounded);
}

TEST_CASE("generic lp matches vertex enumeration") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int vars = 5;
    const int rows = 3 + trial % 3;
    std::vector<double> c(vars);
    std::vector<std::vector<double>> a(rows, std::vector<double>(vars));
    std::vector<double> b(rows);
    for (double& x : c) x = 2.0 * uniform01(rng) - 0.5;
    for (int i = 0; i < rows; ++i) {
      for (double& x : a[i]) x = 2.0 * uniform01(rng) - 0.3;
      b[i] = 0.5 + 2.0 * uniform01(rng);
    }
    // A bounding row keeps every instance bounded.
    a.push_back(std::vector<double>(vars, 1.0));
    b.push_back(5.0);

    LinearProgram lp;
    lp.objective = c;
    for (std::size_t i = 0; i < a.size(); ++i) {
      lp.constraints.push_back({a[i], ConstraintSense::kLessEqual, b[i]});
    }
    const GenericLpResult r = solve_generic_lp(lp);
    const auto brute = testing::vertex_enumeration_max(c, a, b);
    REQUIRE(brute.has_value());
    REQUIRE(r.status == LpStatus::kOptimal);
    CHECK(r.objective_value == doctest::Approx(*brute).epsilon(1e-9));
    CHECK(r.certificate.verified);
    CHECK(r.certificate.gap <= kDualityGapTolerance * (1.0 + std::abs(r.objective_value)));
  }
}

TEST_CASE("inner lp worked examples") {
  const Instance binding = testing::make_instance(1, 1, {2.0}, {{0.5}}, 0.5);
  LpSolution s = solve_inner_lp(weights_of({{1.0}}), spec_of(binding));
  CHECK(s.y(0, 0) == doctest::Approx(0.5));
  CHECK(s.objective_value == doctest::Approx(0.5));

  const Instance loose = testing::make_instance(1, 1, {2.0}, {{0.5}}, 10.0);
  s = solve_inner_lp(weights_of({{1.0}}), spec_of(loose));
  CHECK(s.y(0, 0) == doctest::Approx(1.0));
  CHECK(s.objective_value == doctest::Approx(1.0));

  const Instance pair = testing::make_instance(2, 1, {1.0}, {{1.0}, {1.0}}, 1.0);
  s = solve_inner_lp(weights_of({{3.0}, {1.0}}), spec_of(pair));
  CHECK(s.y(0, 0) == doctest::Approx(1.0));
  CHECK(s.y(1, 0) == doctest::Approx(0.0));
  CHECK(s.objective_value == doctest::Approx(3.0));
  CHECK(s.certificate.verified);

  s = solve_inner_lp(Matrix(2, 1, 0.0), spec_of(pair));
  CHECK(s.objective_value == 0.0);
  CHECK(s.y(0, 0) == 0.0);
  CHECK(s.y(1, 0) == 0.0);
}

TEST_CASE("inner lp respects the distribution knapsack") {
  Instance inst = testing::make_instance(2, 1, {1.0}, {{0.1}, {0.1}}, 10.0);
  inst.dist_cost = {0.6, 0.6};
  inst.budget_K = 1.0;
  const PolytopeSpec spec = PolytopeSpec::from_instance(inst, 0.25);
  const LpSolution s = solve_inner_lp(weights_of({{2.0}, {1.0}}), spec);
  CHECK(s.y(0, 0) == doctest::Approx(0.25 / 0.6));
  CHECK(s.objective_value == doctest::Approx(2.0 * 0.25 / 0.6));
  CHECK(spec.max_violation(s.y) <= 1e-9);
}

TEST_CASE("inner lp matches the multiple-choice knapsack greedy") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = testing::random_small(4, 3, 5000 + trial);
    Matrix w(4, 3, 0.0);
    for (int v = 0; v < 4; ++v) {
      for (int d = 0; d < 3; ++d) w(v, d) = uniform01(rng);
    }
    const PolytopeSpec spec = spec_of(inst);
    const LpSolution s = solve_inner_lp(w, spec);
    Matrix costs(4, 3, 0.0);
    for (int v = 0; v < 4; ++v) {
      for (int d = 0; d < 3; ++d) costs(v, d) = inst.expected_cost(v, d);
    }
    const double greedy = testing::mckp_greedy(w, costs, inst.budget_B);
    CHECK(std::abs(s.objective_value - greedy) <= 1e-8 * std::max(1.0, std::abs(greedy)));
    CHECK(s.certificate.verified);
    CHECK(spec.max_violation(s.y) <= 1e-9);
    CHECK(s.y.in_box());
  }
}

TEST_CASE("inner lp rejects bad weights") {
  const Instance inst = testing::make_instance(1, 1, {1.0}, {{1.0}}, 1.0);
  CHECK_THROWS_AS(solve_inner_lp(weights_of({{-1.0}}), spec_of(inst)), ValidationError);
  CHECK_THROWS_AS(solve_inner_lp(weights_of({{std::nan("")}}), spec_of(inst)), ValidationError);
  CHECK_THROWS_AS(solve_inner_lp(Matrix(2, 1, 1.0), spec_of(inst)), ValidationError);
}
