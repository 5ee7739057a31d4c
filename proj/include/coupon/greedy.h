#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "coupon/cascade.h"
#include "coupon/instance.h"
#include "coupon/objective.h"
#include "coupon/polytope_lp.h"
#include "json.hpp"

namespace coupon {

enum class GreedyMode { kBase, kExtended };

// How the marginals omega_vd are obtained each iteration.
enum class MarginalMode { kExact, kSampled };

struct GreedyConfig {
  GreedyMode mode = GreedyMode::kBase;
  // Step size; defaults to 1 / (nm)^2.
  std::optional<double> delta;
  MarginalMode marginals = MarginalMode::kExact;
  int samples_per_marginal = 1000;
  std::uint64_t seed = 0;
  // Scaling of the distribution budget in extended mode, in (0, 1/2].
  double b = 0.25;
  ObjectiveLimits limits;
};

struct GreedyIteration {
  int index = 0;
  double t = 0.0;           // time after this step
  double step = 0.0;
  double lp_value = 0.0;    // optimum of the direction LP
  double f_estimate = 0.0;  // F(y) before the step
  double f_std_error = 0.0;
  double max_omega_std_error = 0.0;
};

struct GreedyTrace {
  std::vector<GreedyIteration> iterations;
  FractionalSolution y;
  double delta = 0.0;
  // Bound used for the distribution knapsack (b * K), extended mode only.
  std::optional<double> dist_bound;
  // Rows that exceeded 1 by more than 1e-9 and were renormalized. Nonzero
  // indicates a bug.
  int renormalized_rows = 0;
};

double default_delta(int n, int m);

// Continuous greedy: y <- y + step * argmax_{polytope} omega . y until t = 1.
// The last step is shortened so that the steps sum to exactly 1.
GreedyTrace continuous_greedy(const Instance& inst, const CascadeUtility& util,
                              const GreedyConfig& cfg);

// Approximation factor of the rounded solution,
//   ((1 - eps) / (1 + eps)) * (1 - e^{-(1 + 2 eps n / (1 + eps))}) (1 - eps)
//   / (1 + (2n + 1) eps).
double beta(double epsilon, int n);
// Fractional guarantee F(y) >= fractional_ratio * f+(y+) (beta without the
// leading (1 - eps)/(1 + eps)).
double fractional_ratio(double epsilon, int n);
// (1 - 2b) b, the prefactor of the distribution-cost guarantee.
double extension_prefactor(double b);

nlohmann::ordered_json trace_to_json(const GreedyTrace& trace);

}  // namespace coupon
