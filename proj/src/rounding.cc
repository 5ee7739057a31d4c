#include "coupon/rounding.h"

#include <algorithm>
#include <numeric>

#include "coupon/errors.h"

namespace coupon {

namespace {

void check_rows(const FractionalSolution& y) {
  if (!y.in_box()) throw ValidationError("fractional solution has entries outside [0,1]");
  for (int v = 0; v < y.num_users(); ++v) {
    if (y.row_sum(v) > 1.0 + 1e-9) {
      throw ValidationError("row " + std::to_string(v + 1) + " of y sums above 1");
    }
  }
}

}  // namespace

Allocation round_partition(const FractionalSolution& y, Rng& rng) {
  check_rows(y);
  Allocation out(y.num_users());
  for (int v = 0; v < y.num_users(); ++v) {
    const double r = uniform01(rng);
    double cumulative = 0.0;
    for (int d = 0; d < y.num_coupons(); ++d) {
      cumulative += y(v, d);
      if (r < cumulative) {
        out.assign(v, d);
        break;
      }
    }
  }
  return out;
}

Allocation swap_round_merge(const FractionalSolution& y, Rng& rng) {
  check_rows(y);
  Allocation out(y.num_users());
  for (int v = 0; v < y.num_users(); ++v) {
    int survivor = -1;
    double mass = 0.0;
    for (int d = 0; d < y.num_coupons(); ++d) {
      const double x = y(v, d);
      if (x <= 0.0) continue;
      if (survivor < 0) {
        survivor = d;
        mass = x;
        continue;
      }
      // Merge (survivor, mass) with (d, x).
      if (uniform01(rng) * (mass + x) >= mass) survivor = d;
      mass += x;
    }
    if (survivor >= 0 && uniform01(rng) < mass) out.assign(v, survivor);
  }
  return out;
}

RoundingOutcome resolve_conflicts(const Allocation& rounded, const Instance& inst,
                                  double capacity) {
  RoundingOutcome outcome;
  outcome.pre_resolution = rounded;
  outcome.allocation = Allocation(inst.n);
  std::vector<UserCouponPair> pairs = rounded.pairs();
  std::stable_sort(pairs.begin(), pairs.end(), [&inst](const UserCouponPair& a, const UserCouponPair& b) {
    if (inst.dist_cost[a.user] != inst.dist_cost[b.user]) {
      return inst.dist_cost[a.user] < inst.dist_cost[b.user];
    }
    return a.user < b.user;
  });
  double used = 0.0;
  for (const UserCouponPair& p : pairs) {
    const double cost = inst.dist_cost[p.user];
    if (used + cost <= capacity) {
      used += cost;
      outcome.allocation.assign(p.user, p.coupon);
    } else {
      outcome.discarded.push_back(p);
    }
  }
  return outcome;
}

RoundingOutcome round_extended(const FractionalSolution& y, const Instance& inst, Rng& rng) {
  if (!inst.budget_K) throw ConfigError("extended rounding needs budget_K");
  return resolve_conflicts(round_partition(y, rng), inst, *inst.budget_K);
}

}  // namespace coupon
