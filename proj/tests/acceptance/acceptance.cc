// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "builders.h"
#include "coupon/cascade.h"
#include "coupon/greedy.h"
#include "coupon/objective.h"
#include "coupon/oracle.h"
#include "coupon/polytope_lp.h"
#include "coupon/rounding.h"
#include "oracles.h"

using namespace coupon;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

const double kOneMinusInvE = 1.0 - std::exp(-1.0);

// Instances with exactly evaluable utilities: IC with few edges or TABLE.
Instance small_instance(int index, double epsilon, bool with_k) {
  const int n = 2 + index % 2;
  const int m = 1 + (index / 2) % 2;
  const UtilityModel model = index % 5 == 4 ? UtilityModel::kTable : UtilityModel::kIndependentCascade;
  return testing::random_small(n, m, 10000 + static_cast<std::uint64_t>(index) * 7919, epsilon,
                               with_k, model);
}

struct Stats {
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return sum / count; }
  double std_error() const {
    const double m = mean();
    return std::sqrt(std::max(0.0, sum_sq / count - m * m) / count);
  }
};

Outcome approximation_ratio() {
  const int instances = 24;
  const int rounds = 1000;
  double worst = 1e300;
  double total = 0.0;
  Outcome out;
  for (int i = 0; i < instances; ++i) {
    const Instance inst = small_instance(i, 0.0, false);
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    const ExactObjective exact(inst, util);
    const GreedyTrace trace = continuous_greedy(inst, util, {});
    Rng rng(substream(1, i));
    Stats value;
    for (int r = 0; r < rounds; ++r) value.add(exact.f(round_partition(trace.y, rng)));
    const double relaxed = solve_concave_relaxation(inst, util, RelaxationMode::kPlain).value;
    const double ratio = relaxed > 0.0 ? value.mean() / relaxed : 1.0;
    worst = std::min(worst, ratio);
    total += ratio;
    if (ratio < kOneMinusInvE - 0.07) out.pass = false;
  }
  const double mean = total / instances;
  if (mean < kOneMinusInvE - 0.02) out.pass = false;
  out.detail = std::to_string(instances) + " instances, " + std::to_string(rounds) +
               " roundings each: min ratio " + fmt("%.4f", worst) + " (need >= " +
               fmt("%.4f", kOneMinusInvE - 0.07) + "), mean " + fmt("%.4f", mean) +
               " (need >= " + fmt("%.4f", kOneMinusInvE - 0.02) + ")";
  return out;
}

Outcome extension_ratio() {
  const int instances = 20;
  const int rounds = 1000;
  const int survival_draws = 100000;
  const double b = 0.25;
  Outcome out;
  int infeasible = 0;
  double worst_survival = 1.0;
  double worst_margin = 1e300;
  int bound_failures = 0;
  int contested = 0;
  for (int i = 0; i < instances; ++i) {
    // Three users with costs in [0.3K, 0.5K] so that conflicts do occur.
    Instance inst = testing::random_small(3, 1 + i % 2, 12000 + static_cast<std::uint64_t>(i) * 104729,
                                          i % 2 == 0 ? 0.0 : 0.1, true,
                                          i % 5 == 4 ? UtilityModel::kTable
                                                     : UtilityModel::kIndependentCascade);
    Rng cost_rng(substream(22, i));
    for (double& a : inst.dist_cost) a = (0.3 + 0.2 * uniform01(cost_rng)) * *inst.budget_K;
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    const ExactObjective exact(inst, util);
    GreedyConfig cfg;
    cfg.mode = GreedyMode::kExtended;
    cfg.b = b;
    const GreedyTrace trace = continuous_greedy(inst, util, cfg);
    Rng rng(substream(2, i));
    const double k = *inst.budget_K;
    Stats value;
    for (int r = 0; r < rounds; ++r) {
      const RoundingOutcome t = round_extended(trace.y, inst, rng);
      if (distribution_cost(inst, t.allocation) > k) ++infeasible;
      value.add(exact.f(t.allocation));
    }
    // Survival of [vd] given [vd] in I: rows are rounded independently, so
    // forcing row v to d and drawing the others samples the conditional law.
    for (int v = 0; v < inst.n; ++v) {
      for (int d = 0; d < inst.m; ++d) {
        if (trace.y(v, d) <= 0.0) continue;
        FractionalSolution forced = trace.y;
        for (int e = 0; e < inst.m; ++e) forced(v, e) = e == d ? 1.0 : 0.0;
        int kept = 0;
        for (int s = 0; s < survival_draws; ++s) {
          const RoundingOutcome t = round_extended(forced, inst, rng);
          if (distribution_cost(inst, t.allocation) > k) ++infeasible;
          if (t.allocation.coupon_of(v) == d) ++kept;
        }
        worst_survival = std::min(worst_survival, static_cast<double>(kept) / survival_draws);
        if (kept < survival_draws) ++contested;
      }
    }
    const double relaxed = solve_concave_relaxation(inst, util, RelaxationMode::kFullBudget, b).value;
    const double bound = extension_prefactor(b) * beta(inst.epsilon, inst.n) * relaxed;
    worst_margin = std::min(worst_margin, value.mean() - bound);
    if (value.mean() < bound) ++bound_failures;
  }
  const double survival_floor = 1.0 - 2.0 * b - 0.03;
  out.pass = infeasible == 0 && worst_survival >= survival_floor && bound_failures == 0;
  out.detail = std::to_string(instances) + " instances: " + std::to_string(infeasible) +
               " budget violations, min survival " + fmt("%.4f", worst_survival) + " (need >= " +
               fmt("%.2f", survival_floor) + ", " + std::to_string(contested) +
               " pairs ever discarded), " + std::to_string(bound_failures) +
               " instances below (1-2b)b*beta*f+, min margin " + fmt("%.4f", worst_margin);
  return out;
}

Outcome bound_check_suite() {
  const std::vector<double> epsilons = {0.0, 0.05, 0.1, 0.2};
  Outcome out;
  int violations = 0;
  int checks = 0;
  for (int i = 0; i < 50; ++i) {
    const double eps = epsilons[i % 4];
    const bool with_k = (i / 4) % 2 == 1;
    const int n = 2 + i % 3;
    const int m = 1 + (i / 3) % 2;
    const UtilityModel model =
        i % 7 == 3 ? UtilityModel::kTable : UtilityModel::kIndependentCascade;
    const Instance inst =
        testing::random_small(n, m, 20000 + static_cast<std::uint64_t>(i), eps, with_k, model);
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    checks += 3;
    if (!verify_eps_sandwich(inst, util).ok()) ++violations;
    if (!verify_relaxation_bound(inst, util).holds) ++violations;
    if (!verify_concave_dominance(inst, util, 6, static_cast<std::uint64_t>(i)).ok()) ++violations;
    if (with_k) {
      for (double b : {0.1, 0.25, 0.5}) {
        ++checks;
        if (!verify_scaled_relaxation(inst, util, b).holds) ++violations;
      }
    }
  }

  // Negative controls.
  const Instance table = testing::with_table(
      testing::make_instance(2, 1, {1.0}, {{0.9}, {0.9}}, 5.0),
      {{0, 0.0}, {1, 1.0}, {2, 1.0}, {3, 1.5}});
  const CascadeUtility q = CascadeUtility::table(2, {{0, 0.0}, {1, 1.0}, {2, 1.0}, {3, 1.5}});
  const CascadeUtility inflated = CascadeUtility::table(2, {{0, 0.0}, {1, 3.0}, {2, 3.0}, {3, 4.5}});
  const CascadeUtility bad_pair = CascadeUtility::with_reference(inflated, q, 0.1);
  const SandwichReport sandwich = verify_eps_sandwich(table, bad_pair);
  const DominanceReport dominance = verify_concave_dominance(table, bad_pair, 4, 1);
  const CascadeUtility super = CascadeUtility::table(2, {{0, 0.0}, {1, 1.0}, {2, 1.0}, {3, 3.0}});
  const SandwichReport nonsub =
      verify_eps_sandwich(table, CascadeUtility::with_reference(super, super, 0.0));
  const bool controls = !sandwich.ok() && sandwich.witness.has_value() && !dominance.ok() &&
                        dominance.witness.has_value() && !nonsub.reference_submodular &&
                        nonsub.reference_witness.has_value();

  out.pass = violations == 0 && controls;
  out.detail = "50 instances, " + std::to_string(checks) + " checks, " +
               std::to_string(violations) + " violations; negative controls " +
               (controls ? "produced witnesses" : "MISSED");
  return out;
}

Outcome extension_consistency() {
  Outcome out;
  double worst = 0.0;
  int points = 0;
  const std::vector<std::pair<int, int>> shapes = {{3, 3}, {4, 2}, {2, 4}, {3, 2}, {9, 1}};
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const auto [n, m] = shapes[k];
    const UtilityModel model = n > 4 ? UtilityModel::kTable : UtilityModel::kIndependentCascade;
    const Instance inst = testing::random_small(n, m, 30000 + k, k % 2 == 0 ? 0.0 : 0.1, false, model);
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    for (const Allocation& s : enumerate_feasible_allocations(inst, false)) {
      const double gap = std::abs(multilinear_F_exact(inst, util, FractionalSolution::indicator(s, m)) -
                                  f_exact(inst, util, s));
      worst = std::max(worst, gap);
      ++points;
    }
  }
  int outside = 0;
  double worst_z = 0.0;
  Rng rng(31);
  for (int i = 0; i < 10; ++i) {
    const Instance inst = testing::random_small(2 + i % 2, 2, 31000 + i, i % 3 == 0 ? 0.0 : 0.05);
    const CascadeUtility util = CascadeUtility::from_instance(inst);
    FractionalSolution y(inst.n, inst.m);
    for (int v = 0; v < inst.n; ++v) {
      for (int d = 0; d < inst.m; ++d) y(v, d) = uniform01(rng);
    }
    const Estimate est = multilinear_F_mc(inst, util, y, 100000, rng);
    const double z = std::abs(est.mean - multilinear_F_exact(inst, util, y)) / est.std_error;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++outside;
  }
  out.pass = worst <= 1e-12 && outside == 0;
  out.detail = std::to_string(points) + " integral points, max |F - f| " + fmt("%.2e", worst) +
               "; 10 random y at 1e5 samples, max |z| " + fmt("%.2f", worst_z) + " (need <= 3)";
  return out;
}

Outcome rounding_marginals() {
  Outcome out;
  const int draws = 100000;
  double worst_gap = 0.0;
  double worst_tv = 0.0;
  Rng rng(41);
  std::vector<FractionalSolution> points;
  for (int i = 0; i < 3; ++i) {
    const Instance inst = testing::random_small(4, 3, 40000 + i);
    points.push_back(continuous_greedy(inst, CascadeUtility::from_instance(inst), {}).y);
  }
  FractionalSolution manual(3, 3);
  const double rows[3][3] = {{0.3, 0.7, 0.0}, {0.1, 0.2, 0.3}, {0.05, 0.0, 0.9}};
  for (int v = 0; v < 3; ++v) {
    for (int d = 0; d < 3; ++d) manual(v, d) = rows[v][d];
  }
  points.push_back(manual);
  for (const FractionalSolution& y : points) {
    const int n = y.num_users();
    const int m = y.num_coupons();
    std::vector<std::vector<double>> part(n, std::vector<double>(m + 1, 0.0));
    std::vector<std::vector<double>> swap = part;
    for (int i = 0; i < draws; ++i) {
      const Allocation a = round_partition(y, rng);
      const Allocation b = swap_round_merge(y, rng);
      for (int v = 0; v < n; ++v) {
        part[v][a.coupon_of(v).value_or(m)] += 1.0 / draws;
        swap[v][b.coupon_of(v).value_or(m)] += 1.0 / draws;
      }
    }
    for (int v = 0; v < n; ++v) {
      double tv = 0.0;
      for (int d = 0; d <= m; ++d) tv += 0.5 * std::abs(part[v][d] - swap[v][d]);
      worst_tv = std::max(worst_tv, tv);
      for (int d = 0; d < m; ++d) {
        worst_gap = std::max({worst_gap, std::abs(part[v][d] - y(v, d)), std::abs(swap[v][d] - y(v, d))});
      }
    }
  }
  out.pass = worst_gap <= 0.01 && worst_tv <= 0.02;
  out.detail = std::to_string(points.size()) + " points, 1e5 draws: max marginal gap " +
               fmt("%.4f", worst_gap) + " (need <= 0.01), max row TV " + fmt("%.4f", worst_tv) +
               " (need <= 0.02)";
  return out;
}

Outcome lp_correctness() {
  Outcome out;
  Rng rng(51);
  double worst = 0.0;
  int certified = 0;
  for (int i = 0; i < 100; ++i) {
    const int n = 2 + i % 4;
    const int m = 1 + i % 3;
    const Instance inst = testing::random_small(n, m, 50000 + i);
    Matrix w(n, m, 0.0);
    Matrix costs(n, m, 0.0);
    for (int v = 0; v < n; ++v) {
      for (int d = 0; d < m; ++d) {
        w(v, d) = uniform01(rng);
        costs(v, d) = inst.expected_cost(v, d);
      }
    }
    const LpSolution s = solve_inner_lp(w, PolytopeSpec::from_instance(inst));
    const double greedy = testing::mckp_greedy(w, costs, inst.budget_B);
    worst = std::max(worst, std::abs(s.objective_value - greedy) / std::max(1.0, std::abs(greedy)));
    const LpCertificate& c = s.certificate;
    if (c.verified && c.gap <= kDualityGapTolerance * (1.0 + std::abs(s.objective_value))) ++certified;
  }
  out.pass = worst <= 1e-8 && certified == 100;
  out.detail = "100 instances: max relative gap to greedy " + fmt("%.2e", worst) + ", " +
               std::to_string(certified) + "/100 certificates verified";
  return out;
}

Outcome normalization() {
  Outcome out;
  double worst_sum = 0.0;
  double worst_cost = 0.0;
  long allocations = 0;
  for (int n = 1; n <= 10; ++n) {
    for (int m : {1, 2}) {
      if (m == 2 && n > 6) continue;
      const Instance inst = testing::random_small(n, m, 60000 + n * 10 + m);
      for (const Allocation& s : enumerate_feasible_allocations(inst, false, 1u << 20)) {
        ++allocations;
        double total = 0.0;
        for (UserSet u = 0; u < (UserSet{1} << n); ++u) total += seed_prob(inst, s, u);
        worst_sum = std::max(worst_sum, std::abs(total - 1.0));
        if (n <= 8) {
          worst_cost = std::max(worst_cost, std::abs(cost_exact(inst, s) - testing::cost_double_sum(inst, s)));
        }
      }
    }
  }
  out.pass = worst_sum <= 1e-12 && worst_cost <= 1e-12;
  out.detail = std::to_string(allocations) + " allocations: max |sum Pr - 1| " + fmt("%.2e", worst_sum) +
               ", max cost gap " + fmt("%.2e", worst_cost);
  return out;
}

Outcome beta_formula() {
  Outcome out;
  double worst_zero = 0.0;
  int increases = 0;
  for (int n = 1; n <= 60; ++n) {
    worst_zero = std::max(worst_zero, std::abs(beta(0.0, n) - kOneMinusInvE));
    double previous = beta(0.0, n);
    for (int k = 1; k < 1000; ++k) {
      const double value = beta(k / 1000.0, n);
      if (value > previous) ++increases;
      previous = value;
    }
  }
  out.pass = worst_zero <= 1e-12 && increases == 0;
  out.detail = "n = 1..60: max |beta(0) - (1 - 1/e)| " + fmt("%.2e", worst_zero) + ", " +
               std::to_string(increases) + " increases on a 1000-point grid";
  return out;
}

int run(const std::string& command) { return std::system(command.c_str()); }

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  Outcome out;
  const fs::path dir = fs::temp_directory_path() / "coupon_acceptance_replay";
  fs::remove_all(dir);
  fs::create_directories(dir / "suite");
  const std::string cli = COUPON_CLI_PATH;
  save_instance(testing::random_small(3, 2, 70001, 0.1), dir / "base.json");
  save_instance(testing::random_small(3, 2, 70002, 0.05, true), dir / "ext.json");
  save_instance(testing::random_small(3, 2, 70003, 0.0), dir / "suite" / "a.json");
  save_instance(testing::random_small(2, 2, 70004, 0.1, true), dir / "suite" / "b.json");
  save_instance(testing::random_small(12, 2, 70005, 0.2), dir / "large.json");

  const std::vector<std::string> commands = {
      "solve -i " + (dir / "base.json").string() + " --rounds 1000 --seed 1",
      "solve -i " + (dir / "ext.json").string() + " --rounds 1000 --seed 7 --trace",
      "solve -i " + (dir / "base.json").string() + " --rounds 300 --marginals sampled --mc-samples 200 --seed 3",
      "solve -i " + (dir / "large.json").string() + " --rounds 100 --delta 0.1 --mc-samples 200 --exact-n-limit 8 --exact-edge-limit 10 --seed 5",
      "oracle -i " + (dir / "ext.json").string() + " --seed 2",
      "bench -d " + (dir / "suite").string() + " --rounds 200 --seed 4",
      "generate --n 4 --m 2 --seed 11 --with-k -o " + (dir / "gen.json").string(),
  };
  int mismatches = 0;
  int errors = 0;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    std::string outputs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path stdout_file = dir / ("out_" + std::to_string(i) + "_" + std::to_string(rep));
      const int code = run(cli + " " + commands[i] + " > " + stdout_file.string() + " 2>&1");
      if (code != 0) ++errors;
      outputs[rep] = slurp(stdout_file);
      if (commands[i].rfind("generate", 0) == 0) outputs[rep] += slurp(dir / "gen.json");
    }
    if (outputs[0] != outputs[1] || outputs[0].empty()) ++mismatches;
  }
  // --out files as well.
  std::string files[2];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path report = dir / ("report_" + std::to_string(rep) + ".json");
    if (run(cli + " solve -i " + (dir / "base.json").string() + " --rounds 500 --seed 9 --out " +
            report.string() + " > /dev/null") != 0) {
      ++errors;
    }
    files[rep] = slurp(report);
  }
  if (files[0] != files[1] || files[0].empty()) ++mismatches;
  out.pass = mismatches == 0 && errors == 0;
  out.detail = std::to_string(commands.size() + 1) + " invocations run twice: " +
               std::to_string(mismatches) + " differ, " + std::to_string(errors) + " failed";
  fs::remove_all(dir);
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"AC1 approximation ratio at eps = 0", approximation_ratio},
      {"AC2 distribution-budget extension", extension_ratio},
      {"AC3 sandwich, relaxation and dominance checks", bound_check_suite},
      {"AC4 multilinear extension consistency", extension_consistency},
      {"AC5 rounding marginals", rounding_marginals},
      {"AC6 inner LP correctness", lp_correctness},
      {"AC7 probability normalization and cost", normalization},
      {"AC8 beta formula", beta_formula},
      {"AC9 CLI determinism", determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
