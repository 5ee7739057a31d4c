#include <cmath>

#include "builders.h"
#include "coupon/errors.h"
#include "coupon/objective.h"
#include "doctest.h"
#include "oracles.h"

using namespace coupon;
using testing::make_instance;
using testing::random_small;

namespace {

FractionalSolution random_y(int n, int m, Rng& rng) {
  FractionalSolution y(n, m);
  for (int v = 0; v < n; ++v) {
    for (int d = 0; d < m; ++d) y(v, d) = uniform01(rng);
  }
  return y;
}

std::vector<Allocation> all_allocations(int n, int m) {
  std::vector<Allocation> out;
  std::uint64_t total = 1;
  for (int v = 0; v < n; ++v) total *= static_cast<std::uint64_t>(m + 1);
  for (std::uint64_t code = 0; code < total; ++code) out.push_back(Allocation::from_code(code, n, m));
  return out;
}

}  // namespace

TEST_CASE("allocation basics") {
  const std::vector<UserCouponPair> pairs = {{0, 1}, {2, 0}};
  const Allocation s = Allocation::from_pairs(3, 2, pairs);
  CHECK(s.size() == 2);
  CHECK(s.coupon_of(0) == 1);
  CHECK_FALSE(s.coupon_of(1).has_value());
  CHECK(s.users() == 0b101);
  CHECK(s.pairs() == pairs);
  CHECK(Allocation::from_code(s.code(2), 3, 2) == s);
  const std::vector<UserCouponPair> twice = {{0, 0}, {0, 1}};
  CHECK_THROWS_AS(Allocation::from_pairs(3, 2, twice), ValidationError);
  const std::vector<UserCouponPair> out_of_range = {{0, 2}};
  CHECK_THROWS_AS(Allocation::from_pairs(3, 2, out_of_range), ValidationError);
}

TEST_CASE("highest coupon rule") {
  const Instance inst = make_instance(2, 2, {5.0, 10.0}, {{0.2, 0.4}, {0.3, 0.5}}, 1.0);
  const std::vector<UserCouponPair> pairs = {{0, 0}, {0, 1}};
  CHECK(highest_coupon(inst, pairs, 0) == 1);
  CHECK_FALSE(highest_coupon(inst, pairs, 1).has_value());
  const Allocation reduced = reduce_to_highest(inst, pairs);
  CHECK(reduced.coupon_of(0) == 1);
  CHECK(reduced.size() == 1);
  CHECK(highest_coupon(Allocation(2), 0) == std::nullopt);
  const std::vector<UserCouponPair> one = {{0, 1}};
  CHECK(highest_coupon(Allocation::from_pairs(2, 2, one), 0) == 1);
}

TEST_CASE("seed probabilities") {
  const Instance inst = make_instance(2, 1, {1.0}, {{0.5}, {0.25}}, 1.0);
  const Allocation none(2);
  CHECK(seed_prob(inst, none, 0) == 1.0);
  CHECK(seed_prob(inst, none, 1) == 0.0);
  const std::vector<UserCouponPair> first = {{0, 0}};
  CHECK(seed_prob(inst, Allocation::from_pairs(2, 1, first), 0b01) == doctest::Approx(0.5));
  const std::vector<UserCouponPair> both = {{0, 0}, {1, 0}};
  CHECK(seed_prob(inst, Allocation::from_pairs(2, 1, both), 0b01) == doctest::Approx(0.375));
}

TEST_CASE("seed probabilities sum to one") {
  for (int n = 1; n <= 10; ++n) {
    const Instance inst = random_small(n, 2, 100 + n);
    Rng rng(n);
    for (int trial = 0; trial < 5; ++trial) {
      Allocation s(n);
      for (int v = 0; v < n; ++v) {
        const int d = static_cast<int>(uniform01(rng) * 3) - 1;
        if (d >= 0) s.assign(v, d);
      }
      double total = 0.0;
      for (UserSet u = 0; u < (UserSet{1} << n); ++u) {
        const double p = seed_prob(inst, s, u);
        CHECK(p == doctest::Approx(testing::seed_prob_literal(inst, s, u)).epsilon(1e-14));
        total += p;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("expected cost") {
  const Instance single = make_instance(1, 1, {2.0}, {{0.5}}, 1.0);
  CHECK(cost_exact(single, Allocation(1)) == 0.0);
  const std::vector<UserCouponPair> one = {{0, 0}};
  CHECK(cost_exact(single, Allocation::from_pairs(1, 1, one)) == doctest::Approx(1.0));

  const Instance two = make_instance(2, 2, {2.0, 4.0}, {{0.5, 0.6}, {0.1, 0.25}}, 1.0);
  const std::vector<UserCouponPair> pairs = {{0, 0}, {1, 1}};
  const Allocation s = Allocation::from_pairs(2, 2, pairs);
  CHECK(cost_exact(two, s) == doctest::Approx(2.0));
  CHECK(testing::cost_double_sum(two, s) == doctest::Approx(2.0));

  for (int n = 1; n <= 8; ++n) {
    const Instance inst = random_small(n, 2, 300 + n);
    for (const Allocation& a : all_allocations(std::min(n, 5), 2)) {
      Allocation full(n);
      for (const auto& p : a.pairs()) full.assign(p.user, p.coupon);
      CHECK(std::abs(cost_exact(inst, full) - testing::cost_double_sum(inst, full)) <= 1e-12);
    }
  }
}

TEST_CASE("f on hand computed instances") {
  const Instance plain = make_instance(2, 1, {1.0}, {{0.5}, {0.5}}, 1.0);
  const CascadeUtility util = CascadeUtility::from_instance(plain);
  const std::vector<UserCouponPair> both = {{0, 0}, {1, 0}};
  const Allocation s = Allocation::from_pairs(2, 1, both);
  CHECK(f_exact(plain, util, Allocation(2)) == 0.0);
  CHECK(f_exact(plain, util, s) == doctest::Approx(1.0));

  const Instance table =
      testing::with_table(plain, {{0, 0.0}, {0b01, 1.0}, {0b10, 1.0}, {0b11, 1.5}});
  const CascadeUtility tu = CascadeUtility::from_instance(table);
  CHECK(f_exact(table, tu, s) == doctest::Approx(0.875));
  const ExactObjective exact(table, tu);
  CHECK(exact.f(s) == doctest::Approx(0.875));
}

TEST_CASE("exact objective agrees with the literal sums") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Instance inst = random_small(3, 2, seed, 0.1);
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    const ExactObjective exact(inst, util);
    for (const Allocation& s : all_allocations(3, 2)) {
      CHECK(exact.f(s) == doctest::Approx(f_exact(inst, util, s)).epsilon(1e-12));
      CHECK(exact.g(s) == doctest::Approx(g_exact(inst, util, s)).epsilon(1e-12));
    }
  }
}

TEST_CASE("f is monotone under monotone utilities") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance inst = random_small(3, 3, seed);
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    const ExactObjective exact(inst, util);
    for (const Allocation& s : all_allocations(3, 3)) {
      for (int v = 0; v < 3; ++v) {
        for (int d = 0; d < 3; ++d) {
          if (s.raw(v) >= d) continue;
          Allocation t = s;
          t.assign(v, d);
          CHECK(exact.f(t) >= exact.f(s) - 1e-12);
        }
      }
    }
  }
}

TEST_CASE("f_mc") {
  const Instance inst = random_small(3, 2, 8);
  const CascadeUtility util = CascadeUtility::from_instance(inst);
  Rng rng(5);
  CHECK(f_mc(inst, util, Allocation(3), 100, rng).mean == 0.0);
  const std::vector<UserCouponPair> pairs = {{0, 1}, {1, 0}, {2, 1}};
  const Allocation s = Allocation::from_pairs(3, 2, pairs);
  const Estimate est = f_mc(inst, util, s, 100000, rng);
  CHECK(std::abs(est.mean - f_exact(inst, util, s)) <= 3.0 * est.std_error);

  Instance certain = make_instance(2, 1, {1.0}, {{1.0}, {1.0}}, 5.0);
  certain.edges = {{0, 1, 0.5}};
  const CascadeUtility cu = CascadeUtility::from_instance(certain);
  const std::vector<UserCouponPair> first = {{0, 0}};
  CHECK(f_mc(certain, cu, Allocation::from_pairs(2, 1, first), 50, rng).mean ==
        doctest::Approx(cu.gamma(0b01)));
}

TEST_CASE("multilinear extension routes agree") {
  Rng rng(77);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Instance inst = random_small(3, 2, seed, 0.05);
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    const ExactObjective exact(inst, util);
    const auto f = [&](const Allocation& s) { return exact.f(s); };
    for (int trial = 0; trial < 3; ++trial) {
      const FractionalSolution y = random_y(3, 2, rng);
      const double literal = multilinear_F_exact(inst, util, y);
      CHECK(literal == doctest::Approx(testing::multilinear_by_subsets(inst, y, f)).epsilon(1e-12));
      CHECK(exact.multilinear(y) == doctest::Approx(literal).epsilon(1e-12));
    }
    for (const Allocation& s : all_allocations(3, 2)) {
      const FractionalSolution ind = FractionalSolution::indicator(s, 2);
      CHECK(std::abs(multilinear_F_exact(inst, util, ind) - f_exact(inst, util, s)) <= 1e-12);
    }
  }
}

TEST_CASE("multilinear extension edge cases") {
  const Instance inst = random_small(2, 2, 3);
  const CascadeUtility util = CascadeUtility::from_instance(inst);
  FractionalSolution y(2, 2);
  CHECK(multilinear_F_exact(inst, util, y) == 0.0);
  Rng rng(1);
  CHECK(multilinear_F_mc(inst, util, y, 100, rng).mean == 0.0);
  y(1, 0) = 0.5;
  const std::vector<UserCouponPair> one = {{1, 0}};
  CHECK(multilinear_F_exact(inst, util, y) ==
        doctest::Approx(0.5 * f_exact(inst, util, Allocation::from_pairs(2, 2, one))));
  for (int trial = 0; trial < 4; ++trial) {
    const FractionalSolution r = random_y(2, 2, rng);
    const Estimate est = multilinear_F_mc(inst, util, r, 100000, rng);
    CHECK(std::abs(est.mean - multilinear_F_exact(inst, util, r)) <= 3.0 * est.std_error + 1e-12);
  }
  const Instance big = random_small(5, 4, 3);
  CHECK_THROWS_AS(multilinear_F_exact(big, CascadeUtility::from_instance(big), FractionalSolution(5, 4)),
                  LimitError);
}

TEST_CASE("marginals") {
  const Instance inst = random_small(2, 2, 12, 0.1);
  const CascadeUtility util = CascadeUtility::from_instance(inst);
  const ExactObjective exact(inst, util);
  Rng rng(9);

  const FractionalSolution zero(2, 2);
  const Matrix at_zero = exact.marginals(zero);
  for (int v = 0; v < 2; ++v) {
    for (int d = 0; d < 2; ++d) {
      const std::vector<UserCouponPair> one = {{v, d}};
      CHECK(at_zero(v, d) == doctest::Approx(exact.f(Allocation::from_pairs(2, 2, one))));
    }
  }

  for (int trial = 0; trial < 4; ++trial) {
    FractionalSolution y = random_y(2, 2, rng);
    y(0, 1) = 1.0;
    const Matrix omega = exact.marginals(y);
    const MarginalEstimate sampled = marginal_omega(inst, util, y, 100000, rng);
    const double base = multilinear_F_exact(inst, util, y);
    for (int v = 0; v < 2; ++v) {
      for (int d = 0; d < 2; ++d) {
        FractionalSolution unit(2, 2);
        unit(v, d) = 1.0;
        const double expected = multilinear_F_exact(inst, util, oplus(y, unit)) - base;
        CHECK(omega(v, d) == doctest::Approx(std::max(0.0, expected)).epsilon(1e-10));
        CHECK(std::abs(sampled.omega(v, d) - std::max(0.0, expected)) <=
              3.0 * sampled.std_error(v, d) + 1e-12);
      }
    }
    CHECK(omega(0, 1) == doctest::Approx(0.0));
    CHECK(sampled.omega(0, 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("expected value of categorical rounding") {
  const Instance inst = random_small(3, 2, 21);
  const CascadeUtility util = CascadeUtility::from_instance(inst);
  const ExactObjective exact(inst, util);
  FractionalSolution y(3, 2);
  y(0, 0) = 0.2;
  y(0, 1) = 0.5;
  y(1, 1) = 0.9;
  y(2, 0) = 0.4;
  double brute = 0.0;
  for (const Allocation& s : all_allocations(3, 2)) {
    double prob = 1.0;
    for (int v = 0; v < 3; ++v) {
      const auto d = s.coupon_of(v);
      prob *= d ? y(v, *d) : 1.0 - y.row_sum(v);
    }
    brute += prob * exact.f(s);
  }
  CHECK(exact.expected_rounded(y) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("oplus") {
  FractionalSolution a(1, 2);
  a(0, 0) = 0.3;
  a(0, 1) = 0.8;
  FractionalSolution b(1, 2);
  b(0, 0) = 0.7;
  b(0, 1) = 0.1;
  const FractionalSolution c = oplus(a, b);
  CHECK(c(0, 0) == 0.7);
  CHECK(c(0, 1) == 0.8);
  CHECK(oplus(a, a).y == a.y);
  CHECK(oplus(a, FractionalSolution(1, 2)).y == a.y);
  CHECK_THROWS_AS(oplus(a, FractionalSolution(2, 2)), ValidationError);
}

TEST_CASE("epsilon sandwich holds pointwise") {
  for (double eps : {0.0, 0.05, 0.2}) {
    const Instance inst = random_small(3, 3, 40, eps);
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    const ExactObjective exact(inst, util);
    for (const Allocation& s : all_allocations(3, 3)) {
      const double f = exact.f(s);
      const double g = exact.g(s);
      CHECK(f <= (1.0 + eps) * g + 1e-12);
      CHECK(f >= (1.0 - eps) * g - 1e-12);
      if (eps == 0.0) CHECK(f == doctest::Approx(g));
    }
  }
}
