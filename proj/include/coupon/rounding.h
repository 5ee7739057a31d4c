#pragma once

#include <vector>

#include "coupon/instance.h"
#include "coupon/objective.h"
#include "coupon/rng.h"

namespace coupon {

struct RoundingOutcome {
  Allocation allocation;      // T
  Allocation pre_resolution;  // I (before conflict resolution)
  std::vector<UserCouponPair> discarded;
};

// Per user independently: coupon d with probability y_vd, nothing with
// probability 1 - sum_d y_vd (the zero-value dummy coupon). Throws
// ValidationError if a row sums above 1 + 1e-9.
Allocation round_partition(const FractionalSolution& y, Rng& rng);

// Swap rounding inside each user's class: repeatedly merge two fractional
// entries into one carrying both masses, keeping either with probability
// proportional to its mass; the survivor is then kept with probability equal
// to the row mass. Same distribution as round_partition.
Allocation swap_round_merge(const FractionalSolution& y, Rng& rng);

// Keeps pairs of `rounded` in nondecreasing distribution cost (ties by user
// index) while the running total stays within `capacity`.
RoundingOutcome resolve_conflicts(const Allocation& rounded, const Instance& inst,
                                  double capacity);

// round_partition followed by resolve_conflicts against the real budget K.
RoundingOutcome round_extended(const FractionalSolution& y, const Instance& inst, Rng& rng);

}  // namespace coupon
