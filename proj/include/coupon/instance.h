#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coupon/matrix.h"
#include "json.hpp"

namespace coupon {

// Bit v is set iff user v (0-based) belongs to the set.
using UserSet = std::uint64_t;

// Seed sets are bitmasks, so the user count is capped.
inline constexpr int kMaxUsers = 62;

enum class UtilityModel { kIndependentCascade, kLinearThreshold, kTable };

std::string_view model_name(UtilityModel model);

// Directed influence edge between 0-based users.
struct Edge {
  int from = 0;
  int to = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

// The complete problem datum. Users and coupons are 0-based in memory and
// 1-based in the on-disk format. Coupon d has value coupon_values[d]; values
// are strictly increasing, so a larger index always means a larger value.
struct Instance {
  int n = 0;
  int m = 0;
  std::vector<double> coupon_values;
  Matrix adoption;                 // n x m, adoption(v, d) = p_v(d)
  std::vector<double> dist_cost;   // a_v, zeros in the base model
  double budget_B = 0.0;
  std::optional<double> budget_K;  // present => distribution-cost model
  std::vector<Edge> edges;
  UtilityModel model = UtilityModel::kIndependentCascade;
  std::map<UserSet, double> gamma_table;  // model == kTable only
  double epsilon = 0.0;
  std::uint64_t perturb_seed = 0;

  bool has_distribution_budget() const { return budget_K.has_value(); }
  double adoption_prob(int v, int d) const { return adoption(v, d); }
  // Expected redemption cost p_v(d) * value(d) of offering d to v.
  double expected_cost(int v, int d) const { return adoption(v, d) * coupon_values[d]; }

  bool operator==(const Instance&) const = default;
};

// Throws ValidationError naming the first violated invariant.
void validate(const Instance& inst);

// Canonical gamma_table key: sorted 1-based user indices joined by ','.
// The empty set is "".
std::string format_user_set(UserSet users);
UserSet parse_user_set(std::string_view text, int n);

Instance instance_from_json(const nlohmann::json& doc);
nlohmann::json instance_to_json(const Instance& inst);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& inst, const std::filesystem::path& path);

struct RandomInstanceParams {
  int n = 3;
  int m = 2;
  double edge_density = 0.5;
  UtilityModel model = UtilityModel::kIndependentCascade;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  // Distribution-cost model: K = 1 and a_v drawn uniformly from
  // [0, max_dist_cost_fraction * K].
  bool with_distribution_budget = false;
  double max_dist_cost_fraction = 0.5;
  // B as a fraction of the cost of giving every user the top coupon.
  double budget_fraction_lo = 0.2;
  double budget_fraction_hi = 0.8;
};

// Pure function of params. kTable instances carry a random weighted
// coverage function (monotone submodular) over all 2^n subsets.
Instance generate_random(const RandomInstanceParams& params);

}  // namespace coupon
