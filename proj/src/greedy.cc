#include "coupon/greedy.h"

#include <algorithm>
#include <cmath>

#include "coupon/errors.h"

namespace coupon {

namespace {

void check_config(const Instance& inst, const CascadeUtility& util, const GreedyConfig& cfg) {
  if (util.num_users() != inst.n) throw ConfigError("utility and instance disagree on n");
  if (cfg.delta && !(*cfg.delta > 0.0 && *cfg.delta <= 1.0)) {
    throw ConfigError("delta must lie in (0, 1]");
  }
  if (cfg.marginals == MarginalMode::kSampled && cfg.samples_per_marginal < 1) {
    throw ConfigError("samples_per_marginal must be at least 1");
  }
  if (cfg.mode == GreedyMode::kExtended) {
    if (!inst.budget_K) throw ConfigError("extended mode needs budget_K");
    if (!(cfg.b > 0.0 && cfg.b <= 0.5)) throw ConfigError("b must lie in (0, 1/2]");
  }
  if (cfg.marginals == MarginalMode::kExact && !util.is_exact()) {
    throw ConfigError("exact marginals need an exactly evaluable utility");
  }
  // Monotone reference required on the solver path; IC spreads are monotone
  // by construction, tables are checked.
  if (util.kind() == UtilityKind::kTable && inst.n <= 12) {
    const std::vector<double> q =
        util.has_reference() ? util.tabulate_reference() : util.tabulate();
    for (UserSet users = 0; users < q.size(); ++users) {
      for (int v = 0; v < inst.n; ++v) {
        const UserSet bigger = users | (UserSet{1} << v);
        if (q[users] > q[bigger] + 1e-12) {
          throw ConfigError("solver needs a monotone utility; q({" + format_user_set(users) +
                            "}) > q({" + format_user_set(bigger) + "})");
        }
      }
    }
  }
}

int iteration_count(double delta) {
  // Guard against 1/delta landing a hair above an integer.
  return static_cast<int>(std::ceil(1.0 / delta - 1e-9));
}

}  // namespace

double default_delta(int n, int m) {
  const double nm = static_cast<double>(n) * m;
  return 1.0 / (nm * nm);
}

GreedyTrace continuous_greedy(const Instance& inst, const CascadeUtility& util,
                              const GreedyConfig& cfg) {
  check_config(inst, util, cfg);
  GreedyTrace trace;
  trace.delta = cfg.delta.value_or(default_delta(inst.n, inst.m));
  if (cfg.mode == GreedyMode::kExtended) trace.dist_bound = cfg.b * *inst.budget_K;
  const PolytopeSpec spec = PolytopeSpec::from_instance(inst, trace.dist_bound);

  std::optional<ExactObjective> exact;
  if (cfg.marginals == MarginalMode::kExact) exact.emplace(inst, util, cfg.limits);
  Rng rng(splitmix64(cfg.seed));

  FractionalSolution y(inst.n, inst.m);
  const int steps = iteration_count(trace.delta);
  double t = 0.0;
  for (int k = 0; k < steps; ++k) {
    GreedyIteration it;
    it.index = k;
    Matrix omega;
    if (exact) {
      omega = exact->marginals(y);
      for (double& w : omega.data()) w = std::max(0.0, w);
      it.f_estimate = exact->multilinear(y);
    } else {
      MarginalEstimate est = marginal_omega(inst, util, y, cfg.samples_per_marginal, rng, cfg.limits);
      omega = std::move(est.omega);
      it.f_estimate = est.base.mean;
      it.f_std_error = est.base.std_error;
      for (double se : est.std_error.data()) it.max_omega_std_error = std::max(it.max_omega_std_error, se);
    }
    const LpSolution direction = solve_inner_lp(omega, spec);
    it.lp_value = direction.objective_value;
    it.step = (k + 1 == steps) ? 1.0 - t : trace.delta;
    for (int v = 0; v < inst.n; ++v) {
      for (int d = 0; d < inst.m; ++d) y(v, d) += it.step * direction.y(v, d);
    }
    t += it.step;
    it.t = t;
    trace.iterations.push_back(it);
  }

  for (double& x : y.y.data()) x = std::clamp(x, 0.0, 1.0);
  for (int v = 0; v < inst.n; ++v) {
    const double row = y.row_sum(v);
    if (row > 1.0 + 1e-9) {
      ++trace.renormalized_rows;
      for (int d = 0; d < inst.m; ++d) y(v, d) /= row;
    }
  }
  trace.y = std::move(y);
  return trace;
}

double fractional_ratio(double epsilon, int n) {
  const double exponent = 1.0 + 2.0 * epsilon * n / (1.0 + epsilon);
  return (1.0 - std::exp(-exponent)) * (1.0 - epsilon) / (1.0 + (2.0 * n + 1.0) * epsilon);
}

double beta(double epsilon, int n) {
  return (1.0 - epsilon) / (1.0 + epsilon) * fractional_ratio(epsilon, n);
}

double extension_prefactor(double b) { return (1.0 - 2.0 * b) * b; }

nlohmann::ordered_json trace_to_json(const GreedyTrace& trace) {
  nlohmann::ordered_json out;
  out["delta"] = trace.delta;
  out["renormalized_rows"] = trace.renormalized_rows;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const GreedyIteration& it : trace.iterations) {
    rows.push_back({{"iteration", it.index},
                    {"t", it.t},
                    {"lp_value", it.lp_value},
                    {"f_estimate", it.f_estimate},
                    {"f_std_error", it.f_std_error}});
  }
  out["iterations"] = rows;
  return out;
}

}  // namespace coupon
