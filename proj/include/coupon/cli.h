#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "coupon/instance.h"
#include "coupon/oracle.h"
#include "json.hpp"

namespace coupon {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitNumeric = 3,
};

enum class MarginalChoice { kAuto, kExact, kSampled };
enum class RoundingChoice { kPartition, kSwap };

struct SolveOptions {
  std::optional<double> delta;
  int mc_samples = 1000;
  int rounds = 1000;
  std::optional<double> b;  // extended mode only; defaults to 1/4
  std::uint64_t seed = 1;
  bool trace = false;
  bool timings = false;
  MarginalChoice marginals = MarginalChoice::kAuto;
  RoundingChoice rounding = RoundingChoice::kPartition;
  int exact_edge_limit = 20;
  int exact_n_limit = 15;
  bool run_oracle = true;  // oracle values when the instance is small enough
  OracleLimits oracle_limits;
};

// End-to-end solve of one instance: continuous greedy, `rounds` roundings,
// oracle comparison when feasible. Returns the run report.
nlohmann::ordered_json run_solve(const Instance& inst, const SolveOptions& options,
                                 const std::string& source);

struct OracleOptions {
  double b = 0.25;
  int grid_points = 10;
  std::uint64_t seed = 1;
  int exact_edge_limit = 20;
  OracleLimits limits;
};

// Oracle verdict report; `passed` receives the conjunction of all checks.
nlohmann::ordered_json run_oracle(const Instance& inst, const OracleOptions& options,
                                  const std::string& source, bool& passed);

// Solves every *.json in `dir` (sorted by file name) and aggregates the
// achieved ratios by epsilon. Failed instances are reported, not fatal.
nlohmann::ordered_json run_bench(const std::filesystem::path& dir, const SolveOptions& options);

// Command-line entry point. Environment variables COUPON_<FLAG> (upper case,
// dashes as underscores) supply defaults; explicit flags win.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace coupon
