#include "coupon/instance.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "coupon/errors.h"
#include "coupon/rng.h"

namespace coupon {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "n",        "m",      "coupon_values", "adoption", "dist_cost",   "budget_B",
      "budget_K", "edges",  "model",         "gamma_table", "epsilon", "perturb_seed"};
  return keys;
}

UtilityModel parse_model(const std::string& name) {
  if (name == "IC") return UtilityModel::kIndependentCascade;
  if (name == "LT") return UtilityModel::kLinearThreshold;
  if (name == "TABLE") return UtilityModel::kTable;
  throw ParseError("unknown model \"" + name + "\" (expected IC, LT or TABLE)");
}

template <typename T>
T get_as(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("key \"") + key + "\": " + e.what());
  }
}

double get_number(const json& value, const std::string& what) {
  if (!value.is_number()) throw ParseError(what + " must be a number");
  return value.get<double>();
}

bool is_finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

std::string_view model_name(UtilityModel model) {
  switch (model) {
    case UtilityModel::kIndependentCascade:
      return "IC";
    case UtilityModel::kLinearThreshold:
      return "LT";
    case UtilityModel::kTable:
      return "TABLE";
  }
  return "?";
}

std::string format_user_set(UserSet users) {
  std::string out;
  for (int v = 0; users != 0; ++v, users >>= 1) {
    if (users & 1) {
      if (!out.empty()) out += ',';
      out += std::to_string(v + 1);
    }
  }
  return out;
}

UserSet parse_user_set(std::string_view text, int n) {
  UserSet users = 0;
  if (text.empty()) return users;
  int previous = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view token = text.substr(pos, comma - pos);
    int index = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), index);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
      throw ParseError("gamma_table key \"" + std::string(text) + "\" is not a user list");
    }
    if (index < 1 || index > n) {
      throw ParseError("gamma_table key \"" + std::string(text) + "\" has user out of range");
    }
    if (index <= previous) {
      throw ParseError("gamma_table key \"" + std::string(text) +
                       "\" must list distinct users in increasing order");
    }
    previous = index;
    users |= UserSet{1} << (index - 1);
    pos = comma + 1;
  }
  return users;
}

void validate(const Instance& inst) {
  if (inst.n < 1 || inst.m < 1) throw ValidationError("n and m must be at least 1");
  if (inst.n > kMaxUsers) {
    throw ValidationError("n exceeds the supported maximum of " + std::to_string(kMaxUsers));
  }
  if (static_cast<int>(inst.coupon_values.size()) != inst.m) {
    throw ValidationError("coupon_values must have m entries");
  }
  for (int d = 0; d < inst.m; ++d) {
    if (!is_finite_positive(inst.coupon_values[d])) {
      throw ValidationError("coupon values must be finite and strictly positive");
    }
    if (d > 0 && !(inst.coupon_values[d] > inst.coupon_values[d - 1])) {
      throw ValidationError("coupon values must be strictly increasing");
    }
  }
  if (inst.adoption.rows() != inst.n || inst.adoption.cols() != inst.m) {
    throw ValidationError("adoption must be an n x m matrix");
  }
  for (double p : inst.adoption.data()) {
    if (!(p > 0.0 && p <= 1.0)) throw ValidationError("adoption probability out of (0,1]");
  }
  if (static_cast<int>(inst.dist_cost.size()) != inst.n) {
    throw ValidationError("dist_cost must have n entries");
  }
  for (double a : inst.dist_cost) {
    if (!std::isfinite(a) || a < 0.0) {
      throw ValidationError("distribution costs must be finite and nonnegative");
    }
  }
  if (!is_finite_positive(inst.budget_B)) {
    throw ValidationError("budget_B must be finite and > 0");
  }
  if (inst.budget_K) {
    if (!is_finite_positive(*inst.budget_K)) {
      throw ValidationError("budget_K must be finite and > 0");
    }
    for (int v = 0; v < inst.n; ++v) {
      if (inst.dist_cost[v] > *inst.budget_K) {
        throw ValidationError("user never allocatable: distribution cost of user " +
                              std::to_string(v + 1) + " exceeds budget_K");
      }
    }
  }
  if (!std::isfinite(inst.epsilon) || inst.epsilon < 0.0 || inst.epsilon >= 1.0) {
    throw ValidationError("epsilon must lie in [0, 1)");
  }
  for (const Edge& e : inst.edges) {
    if (e.from < 0 || e.from >= inst.n || e.to < 0 || e.to >= inst.n) {
      throw ValidationError("edge endpoint out of range");
    }
    if (e.from == e.to) throw ValidationError("self-loop edges are not allowed");
    if (!(e.weight > 0.0 && e.weight <= 1.0)) {
      throw ValidationError("edge weight out of (0,1]");
    }
  }
  if (inst.model == UtilityModel::kTable) {
    if (!inst.edges.empty()) throw ValidationError("model TABLE does not take edges");
    if (inst.gamma_table.empty()) throw ValidationError("model TABLE requires gamma_table");
    for (const auto& [users, value] : inst.gamma_table) {
      if (!std::isfinite(value) || value < 0.0) {
        throw ValidationError("gamma_table values must be finite and nonnegative");
      }
      if (users == 0 && value != 0.0) {
        throw ValidationError("gamma_table entry for the empty set must be 0");
      }
    }
  } else if (!inst.gamma_table.empty()) {
    throw ValidationError("gamma_table is only allowed with model TABLE");
  }
  if (inst.model == UtilityModel::kLinearThreshold) {
    std::vector<double> incoming(inst.n, 0.0);
    for (const Edge& e : inst.edges) incoming[e.to] += e.weight;
    for (int v = 0; v < inst.n; ++v) {
      if (incoming[v] > 1.0 + 1e-12) {
        throw ValidationError("LT incoming weight of user " + std::to_string(v + 1) +
                              " exceeds 1");
      }
    }
  }
}

Instance instance_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("instance must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!known_keys().contains(item.key())) {
      throw ParseError("unknown key \"" + item.key() + "\"");
    }
  }
  for (const char* key : {"n", "m", "coupon_values", "adoption", "budget_B", "model"}) {
    if (!doc.contains(key)) throw ParseError(std::string("missing key \"") + key + "\"");
  }

  Instance inst;
  inst.n = get_as<int>(doc, "n");
  inst.m = get_as<int>(doc, "m");
  if (inst.n < 1 || inst.m < 1) throw ValidationError("n and m must be at least 1");
  if (inst.n > kMaxUsers) {
    throw ValidationError("n exceeds the supported maximum of " + std::to_string(kMaxUsers));
  }

  const json& values = doc.at("coupon_values");
  if (!values.is_array() || static_cast<int>(values.size()) != inst.m) {
    throw ParseError("coupon_values must be an array of m numbers");
  }
  for (const json& x : values) inst.coupon_values.push_back(get_number(x, "coupon value"));

  const json& adoption = doc.at("adoption");
  if (!adoption.is_array() || static_cast<int>(adoption.size()) != inst.n) {
    throw ParseError("adoption must be an array of n rows");
  }
  inst.adoption = Matrix(inst.n, inst.m);
  for (int v = 0; v < inst.n; ++v) {
    const json& row = adoption[v];
    if (!row.is_array() || static_cast<int>(row.size()) != inst.m) {
      throw ParseError("adoption rows must have m entries");
    }
    for (int d = 0; d < inst.m; ++d) inst.adoption(v, d) = get_number(row[d], "adoption");
  }

  inst.dist_cost.assign(inst.n, 0.0);
  if (doc.contains("dist_cost")) {
    const json& costs = doc.at("dist_cost");
    if (!costs.is_array() || static_cast<int>(costs.size()) != inst.n) {
      throw ParseError("dist_cost must be an array of n numbers");
    }
    for (int v = 0; v < inst.n; ++v) inst.dist_cost[v] = get_number(costs[v], "dist_cost");
  }

  inst.budget_B = get_number(doc.at("budget_B"), "budget_B");
  if (doc.contains("budget_K")) inst.budget_K = get_number(doc.at("budget_K"), "budget_K");

  if (doc.contains("edges")) {
    const json& edges = doc.at("edges");
    if (!edges.is_array()) throw ParseError("edges must be an array");
    for (const json& e : edges) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
          !e[1].is_number_integer()) {
        throw ParseError("each edge must be [from, to, weight] with integer users");
      }
      inst.edges.push_back(
          {e[0].get<int>() - 1, e[1].get<int>() - 1, get_number(e[2], "edge weight")});
    }
  }

  inst.model = parse_model(get_as<std::string>(doc, "model"));
  if (doc.contains("gamma_table")) {
    const json& table = doc.at("gamma_table");
    if (!table.is_object()) throw ParseError("gamma_table must be an object");
    for (const auto& item : table.items()) {
      const UserSet users = parse_user_set(item.key(), inst.n);
      inst.gamma_table[users] = get_number(item.value(), "gamma_table value");
    }
  }
  if (doc.contains("epsilon")) inst.epsilon = get_number(doc.at("epsilon"), "epsilon");
  if (doc.contains("perturb_seed")) {
    const json& seed = doc.at("perturb_seed");
    if (!seed.is_number_integer()) throw ParseError("perturb_seed must be an integer");
    inst.perturb_seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>()
                                                  : static_cast<std::uint64_t>(seed.get<std::int64_t>());
  }

  validate(inst);
  return inst;
}

json instance_to_json(const Instance& inst) {
  json doc;
  doc["n"] = inst.n;
  doc["m"] = inst.m;
  doc["coupon_values"] = inst.coupon_values;
  json adoption = json::array();
  for (int v = 0; v < inst.n; ++v) {
    const auto row = inst.adoption.row(v);
    adoption.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["adoption"] = adoption;
  doc["dist_cost"] = inst.dist_cost;
  doc["budget_B"] = inst.budget_B;
  if (inst.budget_K) doc["budget_K"] = *inst.budget_K;
  if (!inst.edges.empty()) {
    json edges = json::array();
    for (const Edge& e : inst.edges) edges.push_back({e.from + 1, e.to + 1, e.weight});
    doc["edges"] = edges;
  }
  doc["model"] = std::string(model_name(inst.model));
  if (inst.model == UtilityModel::kTable) {
    json table = json::object();
    for (const auto& [users, value] : inst.gamma_table) table[format_user_set(users)] = value;
    doc["gamma_table"] = table;
  }
  doc["epsilon"] = inst.epsilon;
  doc["perturb_seed"] = inst.perturb_seed;
  return doc;
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return instance_from_json(doc);
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  validate(inst);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance file " + path.string());
  out << instance_to_json(inst).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Instance generate_random(const RandomInstanceParams& params) {
  if (params.n < 1 || params.m < 1) throw ValidationError("n and m must be at least 1");
  if (params.n > kMaxUsers) throw ValidationError("n exceeds the supported maximum");
  if (!(params.edge_density >= 0.0 && params.edge_density <= 1.0)) {
    throw ValidationError("edge_density must lie in [0, 1]");
  }
  if (!(params.epsilon >= 0.0 && params.epsilon < 1.0)) {
    throw ValidationError("epsilon must lie in [0, 1)");
  }
  Rng rng(splitmix64(params.seed));
  auto uniform = [&rng](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };

  Instance inst;
  inst.n = params.n;
  inst.m = params.m;
  inst.model = params.model;
  inst.epsilon = params.epsilon;
  inst.perturb_seed = splitmix64(params.seed ^ 0x5bd1e995ULL);

  double value = 0.0;
  for (int d = 0; d < params.m; ++d) {
    value += uniform(0.5, 1.5);
    inst.coupon_values.push_back(value);
  }

  // Higher-value coupons are adopted at least as often.
  inst.adoption = Matrix(params.n, params.m);
  for (int v = 0; v < params.n; ++v) {
    std::vector<double> probs(params.m);
    for (double& p : probs) p = uniform(0.05, 1.0);
    std::sort(probs.begin(), probs.end());
    for (int d = 0; d < params.m; ++d) inst.adoption(v, d) = probs[d];
  }

  double full_cost = 0.0;
  for (int v = 0; v < params.n; ++v) full_cost += inst.expected_cost(v, params.m - 1);
  inst.budget_B = full_cost * uniform(params.budget_fraction_lo, params.budget_fraction_hi);

  inst.dist_cost.assign(params.n, 0.0);
  if (params.with_distribution_budget) {
    inst.budget_K = 1.0;
    for (double& a : inst.dist_cost) a = uniform(0.0, params.max_dist_cost_fraction);
  }

  if (params.model == UtilityModel::kTable) {
    // Weighted coverage: user v covers a random subset of 2n items.
    const int items = 2 * params.n;
    std::vector<double> item_weight(items);
    for (double& w : item_weight) w = uniform(0.1, 1.0);
    std::vector<std::uint64_t> covers(params.n, 0);
    for (int v = 0; v < params.n; ++v) {
      for (int i = 0; i < items; ++i) {
        if (uniform01(rng) < 0.4) covers[v] |= std::uint64_t{1} << i;
      }
    }
    for (UserSet users = 1; users < (UserSet{1} << params.n); ++users) {
      std::uint64_t covered = 0;
      for (int v = 0; v < params.n; ++v) {
        if (users >> v & 1) covered |= covers[v];
      }
      double total = 0.0;
      for (int i = 0; i < items; ++i) {
        if (covered >> i & 1) total += item_weight[i];
      }
      inst.gamma_table[users] = total;
    }
  } else {
    for (int u = 0; u < params.n; ++u) {
      for (int v = 0; v < params.n; ++v) {
        if (u == v) continue;
        // Draw both numbers unconditionally so density=0 and density=1
        // consume the stream identically.
        const double coin = uniform01(rng);
        const double weight = uniform(0.1, 1.0);
        if (params.edge_density > 0.0 && coin < params.edge_density) {
          inst.edges.push_back({u, v, weight});
        }
      }
    }
    if (params.model == UtilityModel::kLinearThreshold) {
      std::vector<double> incoming(params.n, 0.0);
      for (const Edge& e : inst.edges) incoming[e.to] += e.weight;
      for (Edge& e : inst.edges) {
        if (incoming[e.to] > 1.0) e.weight /= incoming[e.to];
      }
    }
  }
  validate(inst);
  return inst;
}

}  // namespace coupon
