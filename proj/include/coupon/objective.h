#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "coupon/cascade.h"
#include "coupon/instance.h"
#include "coupon/matrix.h"
#include "coupon/rng.h"

namespace coupon {

// Offer coupon `coupon` to user `user` (both 0-based).
struct UserCouponPair {
  int user = 0;
  int coupon = 0;

  auto operator<=>(const UserCouponPair&) const = default;
};

// A set of user-coupon pairs with at most one coupon per user. The
// attention constraint is structural: each user owns a single slot.
class Allocation {
 public:
  static constexpr int kNone = -1;

  Allocation() = default;
  explicit Allocation(int n) : coupon_(n, kNone) {}

  // Throws ValidationError if a user appears twice or an index is out of range.
  static Allocation from_pairs(int n, int m, std::span<const UserCouponPair> pairs);
  // Mixed-radix code: digit v is coupon_of(v) + 1 in base m + 1.
  static Allocation from_code(std::uint64_t code, int n, int m);

  int num_users() const { return static_cast<int>(coupon_.size()); }
  std::optional<int> coupon_of(int v) const {
    return coupon_[v] == kNone ? std::nullopt : std::optional<int>(coupon_[v]);
  }
  int raw(int v) const { return coupon_[v]; }
  void assign(int v, int d) { coupon_[v] = d; }
  void clear(int v) { coupon_[v] = kNone; }

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::vector<UserCouponPair> pairs() const;
  UserSet users() const;
  std::uint64_t code(int m) const;

  bool operator==(const Allocation&) const = default;

 private:
  std::vector<int> coupon_;
};

// n x m matrix y with entries in [0, 1].
struct FractionalSolution {
  Matrix y;

  FractionalSolution() = default;
  FractionalSolution(int n, int m) : y(n, m, 0.0) {}
  explicit FractionalSolution(Matrix values) : y(std::move(values)) {}

  static FractionalSolution indicator(const Allocation& s, int m);

  int num_users() const { return y.rows(); }
  int num_coupons() const { return y.cols(); }
  double operator()(int v, int d) const { return y(v, d); }
  double& operator()(int v, int d) { return y(v, d); }
  double row_sum(int v) const;

  // Entries in [0, 1] (resp. row sums <= 1) up to `tolerance`.
  bool in_box(double tolerance = 1e-9) const;
  bool rows_within_cap(double tolerance = 1e-9) const;
};

// Coordinate-wise maximum. Throws ValidationError on a shape mismatch.
FractionalSolution oplus(const FractionalSolution& a, const FractionalSolution& b);

std::optional<int> highest_coupon(const Allocation& s, int v);
// For unvalidated pair lists: the highest-valued coupon offered to v.
std::optional<int> highest_coupon(const Instance& inst, std::span<const UserCouponPair> pairs,
                                  int v);
// Reduce an arbitrary pair list to the allocation each user effectively
// responds to (highest-value coupon wins).
Allocation reduce_to_highest(const Instance& inst, std::span<const UserCouponPair> pairs);

// Pr(U; S); a user without a coupon never becomes a seed.
double seed_prob(const Instance& inst, const Allocation& s, UserSet seeds);

// Per-user seeding probabilities p_v(d_S(v)), 0 for uncouponed users.
std::vector<double> seed_marginals(const Instance& inst, const Allocation& s);

// Expected redemption cost, sum over pairs of p_v(d) * value(d).
double cost_exact(const Instance& inst, const Allocation& s);
// Distribution cost sum of a_v over allocated users.
double distribution_cost(const Instance& inst, const Allocation& s);

struct ObjectiveLimits {
  int exact_n_limit = 15;
  int multilinear_pair_limit = 16;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// f(S) = sum over U of Pr(U; S) gamma(U), evaluated term by term.
double f_exact(const Instance& inst, const CascadeUtility& util, const Allocation& s,
               const ObjectiveLimits& limits = {});
// Same sum with the submodular reference q in place of gamma.
double g_exact(const Instance& inst, const CascadeUtility& util, const Allocation& s,
               const ObjectiveLimits& limits = {});

Estimate f_mc(const Instance& inst, const CascadeUtility& util, const Allocation& s, int samples,
              Rng& rng);

// Literal 2^(nm) expansion of the multilinear extension.
double multilinear_F_exact(const Instance& inst, const CascadeUtility& util,
                           const FractionalSolution& y, const ObjectiveLimits& limits = {});

Estimate multilinear_F_mc(const Instance& inst, const CascadeUtility& util,
                          const FractionalSolution& y, int samples, Rng& rng,
                          const ObjectiveLimits& limits = {});

struct MarginalEstimate {
  Matrix omega;      // clamped at 0
  Matrix std_error;
  Estimate base;     // F(y) from the same samples
};

// Common-random-numbers estimate of F(y + 1_vd) - F(y) for every pair.
MarginalEstimate marginal_omega(const Instance& inst, const CascadeUtility& util,
                                const FractionalSolution& y, int samples, Rng& rng,
                                const ObjectiveLimits& limits = {});

// Tabulated gamma (and q when available) for an exact utility; evaluates f,
// g, the multilinear extension and its exact marginals in O(2^n) each.
//
// f(S) is the multilinear extension Gamma of gamma at the seeding marginals
// of S. Under independent sampling with probabilities y the highest coupon
// of user v is d with probability y_vd * prod_{d' > d} (1 - y_vd'), and Gamma
// is affine in each coordinate, so F(y) = Gamma(rho) with
// rho_v = sum_d Pr[highest = d] * p_v(d).
class ExactObjective {
 public:
  ExactObjective(const Instance& inst, const CascadeUtility& util,
                 const ObjectiveLimits& limits = {});

  const Instance& instance() const { return inst_; }
  bool has_reference() const { return !q_table_.empty(); }

  double f(const Allocation& s) const;
  double g(const Allocation& s) const;
  double f_code(std::uint64_t code) const;

  double multilinear(const FractionalSolution& y) const;
  // Exact F(y + 1_vd) - F(y).
  Matrix marginals(const FractionalSolution& y) const;
  // Expected f of the per-user categorical rounding of y.
  double expected_rounded(const FractionalSolution& y) const;

  std::span<const double> gamma_table() const { return gamma_table_; }
  std::span<const double> q_table() const { return q_table_; }

 private:
  double extension(std::span<const double> table, std::span<const double> probs) const;
  std::vector<double> highest_seed_probs(const FractionalSolution& y) const;

  Instance inst_;
  std::vector<double> gamma_table_;
  std::vector<double> q_table_;
  std::vector<double> f_cache_;  // by allocation code, when small enough
};

// Value of the multilinear extension of a set-function table at `probs`.
double multilinear_of_table(std::span<const double> table, std::span<const double> probs);

}  // namespace coupon
