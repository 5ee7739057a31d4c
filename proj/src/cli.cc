#include "coupon/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>

#include "CLI11.hpp"
#include "coupon/cascade.h"
#include "coupon/errors.h"
#include "coupon/greedy.h"
#include "coupon/objective.h"
#include "coupon/oracle.h"
#include "coupon/report.h"
#include "coupon/rounding.h"

namespace coupon {

namespace {

using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ordered_json nullable(const std::optional<double>& x) {
  return x ? ordered_json(*x) : ordered_json(nullptr);
}

ordered_json instance_summary(const Instance& inst, const std::string& source) {
  return {{"source", source},
          {"digest", instance_digest(inst)},
          {"n", inst.n},
          {"m", inst.m},
          {"model", std::string(model_name(inst.model))},
          {"epsilon", inst.epsilon},
          {"budget_B", inst.budget_B},
          {"budget_K", nullable(inst.budget_K)},
          {"extended", inst.has_distribution_budget()}};
}

bool within_oracle_limits(const Instance& inst, const OracleLimits& limits) {
  try {
    check_oracle_limits(inst, limits);
    return true;
  } catch (const LimitError&) {
    return false;
  }
}

std::string_view marginal_name(MarginalMode mode) {
  return mode == MarginalMode::kExact ? "exact" : "sampled";
}

}  // namespace

ordered_json run_solve(const Instance& inst, const SolveOptions& options,
                       const std::string& source) {
  const auto start = Clock::now();
  validate(inst);
  if (options.rounds < 1) throw ConfigError("--rounds must be at least 1");
  if (options.mc_samples < 1) throw ConfigError("--mc-samples must be at least 1");
  const bool extended = inst.has_distribution_budget();
  if (options.b && !extended) throw ConfigError("--b requires an instance with budget_K");
  const double b = options.b.value_or(0.25);

  const CascadeUtility util =
      CascadeUtility::from_instance(inst, {options.mc_samples, options.exact_edge_limit});
  const ObjectiveLimits limits{options.exact_n_limit, 16};
  const bool exact_available = util.is_exact() && inst.n <= options.exact_n_limit;

  MarginalMode marginals = exact_available ? MarginalMode::kExact : MarginalMode::kSampled;
  if (options.marginals == MarginalChoice::kExact) {
    if (!exact_available) throw ConfigError("--marginals exact needs an exact utility");
    marginals = MarginalMode::kExact;
  } else if (options.marginals == MarginalChoice::kSampled) {
    marginals = MarginalMode::kSampled;
  }

  const std::uint64_t greedy_seed = splitmix64(options.seed ^ 0x1ULL);
  const std::uint64_t rounding_seed = splitmix64(options.seed ^ 0x2ULL);
  const std::uint64_t evaluation_seed = splitmix64(options.seed ^ 0x3ULL);

  GreedyConfig cfg;
  cfg.mode = extended ? GreedyMode::kExtended : GreedyMode::kBase;
  cfg.delta = options.delta;
  cfg.marginals = marginals;
  cfg.samples_per_marginal = options.mc_samples;
  cfg.seed = greedy_seed;
  cfg.b = b;
  cfg.limits = limits;
  const GreedyTrace trace = continuous_greedy(inst, util, cfg);
  const double greedy_seconds = seconds_since(start);

  std::optional<ExactObjective> exact;
  if (exact_available) exact.emplace(inst, util, limits);
  Rng eval_rng(evaluation_seed);
  Estimate fractional;
  if (exact) {
    fractional.mean = exact->multilinear(trace.y);
  } else {
    fractional = multilinear_F_mc(inst, util, trace.y, options.mc_samples, eval_rng, limits);
  }

  const auto rounding_start = Clock::now();
  Rng round_rng(rounding_seed);
  SampleStats value;
  SampleStats cost;
  SampleStats dist;
  int cd_violations = 0;
  std::int64_t discarded = 0;
  for (int r = 0; r < options.rounds; ++r) {
    Allocation t;
    if (extended) {
      RoundingOutcome outcome = round_extended(trace.y, inst, round_rng);
      discarded += static_cast<std::int64_t>(outcome.discarded.size());
      t = std::move(outcome.allocation);
    } else if (options.rounding == RoundingChoice::kSwap) {
      t = swap_round_merge(trace.y, round_rng);
    } else {
      t = round_partition(trace.y, round_rng);
    }
    value.add(exact ? exact->f(t) : f_mc(inst, util, t, options.mc_samples, eval_rng).mean);
    cost.add(cost_exact(inst, t));
    const double a = distribution_cost(inst, t);
    dist.add(a);
    if (inst.budget_K && a > *inst.budget_K) ++cd_violations;
  }
  value.finish();
  cost.finish();
  dist.finish();
  const double rounding_seconds = seconds_since(rounding_start);

  const auto oracle_start = Clock::now();
  ordered_json oracle = nullptr;
  std::optional<double> reference;
  if (options.run_oracle && util.is_exact() && within_oracle_limits(inst, options.oracle_limits)) {
    OracleLimits olimits = options.oracle_limits;
    olimits.objective = limits;
    const PolicyResult policy = solve_optimal_policy(inst, util, olimits);
    const RelaxationMode mode = extended ? RelaxationMode::kFullBudget : RelaxationMode::kPlain;
    const RelaxationResult relaxed = solve_concave_relaxation(inst, util, mode, b, olimits);
    std::optional<double> scaled;
    if (extended) {
      scaled = solve_concave_relaxation(inst, util, RelaxationMode::kScaledBudget, b, olimits).value;
    }
    reference = relaxed.value;
    oracle = {{"policy_value", policy.value},
              {"policy_support_size", policy.policy.support.size()},
              {"relaxation_value", relaxed.value},
              {"relaxation_mode", extended ? "full_budget" : "plain"},
              {"scaled_relaxation_value", nullable(scaled)}};
  }
  const double oracle_seconds = seconds_since(oracle_start);

  ordered_json ratios = {{"fractional", nullptr},
                         {"fractional_std_error", nullptr},
                         {"rounded", nullptr},
                         {"rounded_std_error", nullptr}};
  if (reference && *reference > 0.0) {
    ratios["fractional"] = fractional.mean / *reference;
    ratios["fractional_std_error"] = fractional.std_error / *reference;
    ratios["rounded"] = value.mean / *reference;
    ratios["rounded_std_error"] = value.std_error / *reference;
  }

  const double beta_value = beta(inst.epsilon, inst.n);
  ordered_json theory = {
      {"beta", beta_value},
      {"fractional_ratio", fractional_ratio(inst.epsilon, inst.n)},
      {"step_factor", std::max(0.0, 1.0 - inst.n * inst.m * trace.delta)},
      {"extension_prefactor", extended ? ordered_json(extension_prefactor(b)) : ordered_json(nullptr)},
      {"extension_bound",
       extended ? ordered_json(extension_prefactor(b) * beta_value) : ordered_json(nullptr)}};

  ordered_json report;
  report["schema_version"] = kReportSchemaVersion;
  report["command"] = "solve";
  report["instance"] = instance_summary(inst, source);
  report["config"] = {{"mode", extended ? "extended" : "base"},
                      {"delta", trace.delta},
                      {"delta_is_default", !options.delta.has_value()},
                      {"marginals", std::string(marginal_name(marginals))},
                      {"mc_samples", options.mc_samples},
                      {"rounds", options.rounds},
                      {"rounding", extended ? "extended"
                                   : options.rounding == RoundingChoice::kSwap ? "swap"
                                                                              : "partition"},
                      {"b", extended ? ordered_json(b) : ordered_json(nullptr)},
                      {"exact_edge_limit", options.exact_edge_limit},
                      {"exact_n_limit", options.exact_n_limit}};
  report["seeds"] = {{"seed", options.seed},
                     {"greedy", greedy_seed},
                     {"rounding", rounding_seed},
                     {"evaluation", evaluation_seed},
                     {"perturb_seed", inst.perturb_seed}};
  report["fractional"] = {{"value", fractional.mean},
                          {"std_error", fractional.std_error},
                          {"exact", exact.has_value()},
                          {"iterations", trace.iterations.size()},
                          {"renormalized_rows", trace.renormalized_rows},
                          {"dist_bound", nullable(trace.dist_bound)},
                          {"y", matrix_to_json(trace.y.y)}};
  report["rounding"] = {
      {"rounds", options.rounds},
      {"mean_value", value.mean},
      {"std_value", value.stddev},
      {"std_error", value.std_error},
      {"expected_value_exact",
       exact && !extended ? ordered_json(exact->expected_rounded(trace.y)) : ordered_json(nullptr)},
      {"mean_cost", cost.mean},
      {"std_cost", cost.stddev},
      {"mean_dist_cost", dist.mean},
      {"cd_violations", cd_violations},
      {"discarded_pairs", discarded}};
  report["oracle"] = oracle;
  report["ratios"] = ratios;
  report["theory"] = theory;
  if (options.trace) report["trace"] = trace_to_json(trace);
  if (options.timings) {
    report["timings"] = {{"greedy_seconds", greedy_seconds},
                         {"rounding_seconds", rounding_seconds},
                         {"oracle_seconds", oracle_seconds},
                         {"total_seconds", seconds_since(start)}};
  }
  return report;
}

ordered_json run_oracle(const Instance& inst, const OracleOptions& options,
                        const std::string& source, bool& passed) {
  validate(inst);
  check_oracle_limits(inst, options.limits);
  const CascadeUtility util = CascadeUtility::from_instance(inst, {1, options.exact_edge_limit});
  if (!util.is_exact()) throw ConfigError("oracle needs an exactly evaluable utility (IC or TABLE)");
  const bool extended = inst.has_distribution_budget();

  ordered_json checks = ordered_json::array();
  passed = true;
  auto record = [&](const std::string& name, bool ok, ordered_json details) {
    passed = passed && ok;
    ordered_json entry = {{"name", name}, {"pass", ok}};
    for (auto& [key, val] : details.items()) entry[key] = val;
    checks.push_back(entry);
  };

  const SandwichReport sandwich = verify_eps_sandwich(inst, util, options.limits);
  record("reference_submodular", sandwich.reference_submodular,
         {{"witness", sandwich.reference_witness ? ordered_json(*sandwich.reference_witness)
                                                 : ordered_json(nullptr)}});
  record("eps_sandwich",
         sandwich.max_violation <= 1e-9 && sandwich.induced_submodular,
         {{"checked", sandwich.checked},
          {"max_violation", sandwich.max_violation},
          {"witness", sandwich.witness ? allocation_to_json(*sandwich.witness) : ordered_json(nullptr)},
          {"induced_submodular", sandwich.induced_submodular},
          {"induced_witness", sandwich.induced_witness ? ordered_json(*sandwich.induced_witness)
                                                       : ordered_json(nullptr)}});

  const InequalityCheck relaxation = verify_relaxation_bound(inst, util, options.limits);
  record("relaxation_bound", relaxation.holds,
         {{"policy_value", relaxation.lhs}, {"relaxation_value", relaxation.rhs}});

  const DominanceReport dominance =
      verify_concave_dominance(inst, util, options.grid_points, options.seed, options.limits);
  record("concave_dominance", dominance.ok(),
         {{"points", dominance.points},
          {"max_violation", dominance.max_violation},
          {"witness", dominance.witness ? matrix_to_json(dominance.witness->y) : ordered_json(nullptr)}});

  std::optional<double> scaled_value;
  std::optional<double> full_value;
  if (extended) {
    const InequalityCheck scaled = verify_scaled_relaxation(inst, util, options.b, options.limits);
    scaled_value = scaled.lhs;
    full_value = scaled.rhs / options.b;
    record("scaled_relaxation", scaled.holds,
           {{"b", options.b}, {"scaled_value", scaled.lhs}, {"b_times_full_value", scaled.rhs}});
  }

  const PolicyResult policy = solve_optimal_policy(inst, util, options.limits);
  ordered_json support = ordered_json::array();
  for (const PolicyEntry& e : policy.policy.support) {
    support.push_back({{"allocation", allocation_to_json(e.allocation)}, {"theta", e.theta}});
  }
  const double plain =
      solve_concave_relaxation(inst, util, RelaxationMode::kPlain, options.b, options.limits).value;

  ordered_json report;
  report["schema_version"] = kReportSchemaVersion;
  report["command"] = "oracle";
  report["instance"] = instance_summary(inst, source);
  report["policy"] = {{"value", policy.value},
                      {"expected_cost", policy.expected_cost},
                      {"support", support}};
  report["relaxation"] = {{"plain", plain},
                          {"full_budget", nullable(full_value)},
                          {"scaled_budget", nullable(scaled_value)},
                          {"b", options.b}};
  report["checks"] = checks;
  report["pass"] = passed;
  return report;
}

ordered_json run_bench(const std::filesystem::path& dir, const SolveOptions& options) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

  ordered_json rows = ordered_json::array();
  std::map<double, SampleStats> by_epsilon;
  std::map<double, double> worst;
  int failures = 0;
  for (const auto& file : files) {
    ordered_json row = {{"file", file.filename().string()}};
    try {
      const Instance inst = load_instance(file);
      const ordered_json report = run_solve(inst, options, file.filename().string());
      row["status"] = "ok";
      row["error"] = nullptr;
      row["epsilon"] = inst.epsilon;
      row["extended"] = inst.has_distribution_budget();
      row["n"] = inst.n;
      row["m"] = inst.m;
      row["fractional_value"] = report["fractional"]["value"];
      row["rounded_value"] = report["rounding"]["mean_value"];
      row["ratio"] = report["ratios"]["rounded"];
      row["ratio_std_error"] = report["ratios"]["rounded_std_error"];
      row["beta"] = report["theory"]["beta"];
      row["extension_bound"] = report["theory"]["extension_bound"];
      row["cd_violations"] = report["rounding"]["cd_violations"];
      if (report["ratios"]["rounded"].is_number()) {
        const double ratio = report["ratios"]["rounded"].get<double>();
        by_epsilon[inst.epsilon].add(ratio);
        auto [it, inserted] = worst.emplace(inst.epsilon, ratio);
        if (!inserted) it->second = std::min(it->second, ratio);
      }
    } catch (const Error& e) {
      ++failures;
      row["status"] = "failed";
      row["error"] = e.what();
    }
    rows.push_back(row);
  }

  ordered_json aggregate = ordered_json::array();
  for (auto& [eps, stats] : by_epsilon) {
    stats.finish();
    const double half_width = 1.96 * stats.std_error;
    aggregate.push_back({{"epsilon", eps},
                         {"count", stats.count},
                         {"mean_ratio", stats.mean},
                         {"std_ratio", stats.stddev},
                         {"ci95_low", stats.mean - half_width},
                         {"ci95_high", stats.mean + half_width},
                         {"min_ratio", worst[eps]}});
  }

  ordered_json report;
  report["schema_version"] = kReportSchemaVersion;
  report["command"] = "bench";
  report["directory"] = dir.filename().string();
  report["instances"] = files.size();
  report["failures"] = failures;
  report["rows"] = rows;
  report["aggregate"] = aggregate;
  return report;
}

namespace {

void write_report(const ordered_json& report, const std::string& out_path, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw IoError("cannot write report " + out_path);
  file << text;
  if (!file) throw IoError("write failed for " + out_path);
}

std::string format_value(const ordered_json& x) {
  if (x.is_null()) return "n/a";
  std::ostringstream s;
  s << std::setprecision(6) << x.get<double>();
  return s.str();
}

void print_solve_summary(const ordered_json& report, std::ostream& out) {
  out << "instance " << report["instance"]["source"].get<std::string>() << " (n="
      << report["instance"]["n"] << ", m=" << report["instance"]["m"]
      << ", eps=" << report["instance"]["epsilon"] << ", mode "
      << report["config"]["mode"].get<std::string>() << ")\n";
  out << "  F(y)            " << format_value(report["fractional"]["value"]) << "\n";
  out << "  mean f(T)       " << format_value(report["rounding"]["mean_value"]) << " +- "
      << format_value(report["rounding"]["std_error"]) << " over "
      << report["rounding"]["rounds"] << " roundings\n";
  out << "  mean cost       " << format_value(report["rounding"]["mean_cost"]) << " (B = "
      << format_value(report["instance"]["budget_B"]) << ")\n";
  if (!report["oracle"].is_null()) {
    out << "  f+(y+)          " << format_value(report["oracle"]["relaxation_value"]) << "\n";
    out << "  ratio           " << format_value(report["ratios"]["rounded"]) << " +- "
        << format_value(report["ratios"]["rounded_std_error"]) << "\n";
  }
  out << "  beta(eps)       " << format_value(report["theory"]["beta"]) << "\n";
  if (!report["theory"]["extension_bound"].is_null()) {
    out << "  (1-2b)b*beta    " << format_value(report["theory"]["extension_bound"]) << "\n";
  }
}

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

// Shared solve flags.
struct SolveFlags {
  double delta = nan_value();
  double b = nan_value();
  std::string marginals = "auto";
  std::string rounding = "partition";
  SolveOptions options;

  void attach(CLI::App* cmd) {
    cmd->add_option("--delta", delta, "continuous greedy step size (default 1/(nm)^2)")
        ->envname("COUPON_DELTA");
    cmd->add_option("--mc-samples", options.mc_samples, "Monte Carlo samples")
        ->envname("COUPON_MC_SAMPLES")
        ->capture_default_str();
    cmd->add_option("--rounds", options.rounds, "number of independent roundings")
        ->envname("COUPON_ROUNDS")
        ->capture_default_str();
    cmd->add_option("--b", b, "distribution budget scaling in (0, 1/2] (default 1/4)")
        ->envname("COUPON_B");
    cmd->add_option("--seed", options.seed, "master random seed")
        ->envname("COUPON_SEED")
        ->capture_default_str();
    cmd->add_flag("--trace", options.trace, "include the per-iteration greedy trace");
    cmd->add_flag("--timings", options.timings, "include wall-clock timings (breaks byte replay)");
    cmd->add_option("--marginals", marginals, "auto, exact or sampled")
        ->check(CLI::IsMember({"auto", "exact", "sampled"}))
        ->envname("COUPON_MARGINALS")
        ->capture_default_str();
    cmd->add_option("--rounding", rounding, "partition or swap (base model)")
        ->check(CLI::IsMember({"partition", "swap"}))
        ->envname("COUPON_ROUNDING")
        ->capture_default_str();
    cmd->add_option("--exact-edge-limit", options.exact_edge_limit,
                    "largest edge count for exact IC evaluation")
        ->envname("COUPON_EXACT_EDGE_LIMIT")
        ->capture_default_str();
    cmd->add_option("--exact-n-limit", options.exact_n_limit,
                    "largest user count for exact objective evaluation")
        ->envname("COUPON_EXACT_N_LIMIT")
        ->capture_default_str();
    cmd->add_option("--oracle-max-users", options.oracle_limits.max_users,
                    "largest n for the LP oracles")
        ->envname("COUPON_ORACLE_MAX_USERS")
        ->capture_default_str();
    cmd->add_option("--oracle-max-coupons", options.oracle_limits.max_coupons,
                    "largest m for the LP oracles")
        ->envname("COUPON_ORACLE_MAX_COUPONS")
        ->capture_default_str();
  }

  SolveOptions resolve() const {
    SolveOptions out = options;
    if (!std::isnan(delta)) out.delta = delta;
    if (!std::isnan(b)) out.b = b;
    out.marginals = marginals == "exact"     ? MarginalChoice::kExact
                    : marginals == "sampled" ? MarginalChoice::kSampled
                                             : MarginalChoice::kAuto;
    out.rounding = rounding == "swap" ? RoundingChoice::kSwap : RoundingChoice::kPartition;
    return out;
  }
};

UtilityModel parse_model_flag(const std::string& name) {
  if (name == "IC") return UtilityModel::kIndependentCascade;
  if (name == "LT") return UtilityModel::kLinearThreshold;
  return UtilityModel::kTable;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coupon allocation under approximately submodular cascades"};
  app.require_subcommand(1);

  std::string instance_path;
  std::string out_path;

  CLI::App* solve = app.add_subcommand("solve", "continuous greedy + rounding on one instance");
  SolveFlags solve_flags;
  solve->add_option("-i,--instance", instance_path, "instance JSON file")
      ->required()
      ->envname("COUPON_INSTANCE");
  solve->add_option("--out", out_path, "write the JSON report here (default: stdout)")
      ->envname("COUPON_OUT");
  solve_flags.attach(solve);

  CLI::App* oracle = app.add_subcommand("oracle", "exact oracles and bound checks");
  OracleOptions oracle_options;
  oracle->add_option("-i,--instance", instance_path, "instance JSON file")
      ->required()
      ->envname("COUPON_INSTANCE");
  oracle->add_option("--out", out_path, "write the JSON verdict here (default: stdout)")
      ->envname("COUPON_OUT");
  oracle->add_option("--b", oracle_options.b, "distribution budget scaling")
      ->envname("COUPON_B")
      ->capture_default_str();
  oracle->add_option("--grid", oracle_options.grid_points, "random points for f+ <= (1+eps) g+")
      ->capture_default_str();
  oracle->add_option("--seed", oracle_options.seed, "random seed")
      ->envname("COUPON_SEED")
      ->capture_default_str();
  oracle->add_option("--max-users", oracle_options.limits.max_users, "enumeration limit on n")
      ->capture_default_str();
  oracle->add_option("--max-coupons", oracle_options.limits.max_coupons, "enumeration limit on m")
      ->capture_default_str();

  CLI::App* bench = app.add_subcommand("bench", "solve every instance of a directory");
  std::string bench_dir;
  SolveFlags bench_flags;
  bench->add_option("-d,--dir", bench_dir, "directory of instance files")->required();
  bench->add_option("--out", out_path, "write the JSON suite report here (default: stdout)")
      ->envname("COUPON_OUT");
  bench_flags.attach(bench);

  CLI::App* generate = app.add_subcommand("generate", "write random instances");
  RandomInstanceParams params;
  std::string model = "IC";
  int count = 1;
  std::string out_dir;
  generate->add_option("--n", params.n, "users")->capture_default_str();
  generate->add_option("--m", params.m, "coupon types")->capture_default_str();
  generate->add_option("--density", params.edge_density, "edge probability")->capture_default_str();
  generate->add_option("--model", model, "IC, LT or TABLE")
      ->check(CLI::IsMember({"IC", "LT", "TABLE"}))
      ->capture_default_str();
  generate->add_option("--epsilon", params.epsilon, "perturbation magnitude")->capture_default_str();
  generate->add_option("--seed", params.seed, "seed of the first instance")->capture_default_str();
  generate->add_flag("--with-k", params.with_distribution_budget, "add distribution costs and K");
  generate->add_option("--count", count, "number of instances (seeds seed, seed+1, ...)")
      ->capture_default_str();
  generate->add_option("-o,--out", out_path, "output file (count = 1)");
  generate->add_option("--out-dir", out_dir, "output directory (files instance_000.json, ...)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) {
      const Instance inst = load_instance(instance_path);
      const ordered_json report = run_solve(inst, solve_flags.resolve(), instance_path);
      write_report(report, out_path, out);
      if (!out_path.empty()) print_solve_summary(report, out);
      return kExitOk;
    }
    if (oracle->parsed()) {
      const Instance inst = load_instance(instance_path);
      bool passed = false;
      const ordered_json report = run_oracle(inst, oracle_options, instance_path, passed);
      write_report(report, out_path, out);
      if (!out_path.empty()) {
        for (const auto& check : report["checks"]) {
          out << (check["pass"].get<bool>() ? "PASS " : "FAIL ")
              << check["name"].get<std::string>() << "\n";
        }
      }
      if (!passed) err << "oracle: at least one check failed\n";
      return passed ? kExitOk : kExitCheckFailed;
    }
    if (bench->parsed()) {
      const ordered_json report = run_bench(bench_dir, bench_flags.resolve());
      write_report(report, out_path, out);
      if (!out_path.empty()) {
        out << report["instances"] << " instances, " << report["failures"] << " failed\n";
        for (const auto& row : report["aggregate"]) {
          out << "  eps=" << row["epsilon"] << "  n=" << row["count"]
              << "  mean ratio " << format_value(row["mean_ratio"]) << "  95% CI ["
              << format_value(row["ci95_low"]) << ", " << format_value(row["ci95_high"]) << "]\n";
        }
      }
      return kExitOk;
    }
    if (generate->parsed()) {
      params.model = parse_model_flag(model);
      if (count < 1) throw ConfigError("--count must be at least 1");
      if (out_dir.empty() && (count != 1 || out_path.empty())) {
        throw ConfigError("generate needs -o for one instance or --out-dir for several");
      }
      if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
      const std::uint64_t first_seed = params.seed;
      for (int k = 0; k < count; ++k) {
        params.seed = first_seed + static_cast<std::uint64_t>(k);
        const Instance inst = generate_random(params);
        std::string path = out_path;
        if (!out_dir.empty()) {
          char name[32];
          std::snprintf(name, sizeof name, "instance_%03d.json", k);
          path = (std::filesystem::path(out_dir) / name).string();
        }
        save_instance(inst, path);
      }
      return kExitOk;
    }
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace coupon
