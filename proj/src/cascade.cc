#include "coupon/cascade.h"

#include <bit>
#include <cmath>
#include <sstream>

#include "coupon/errors.h"

namespace coupon {

namespace {

struct Adjacency {
  std::vector<std::vector<std::pair<int, double>>> out;
  std::vector<std::vector<std::pair<int, double>>> in;
};

Adjacency build_adjacency(const Graph& graph) {
  Adjacency adj;
  adj.out.resize(graph.n);
  adj.in.resize(graph.n);
  for (const Edge& e : graph.edges) {
    adj.out[e.from].emplace_back(e.to, e.weight);
    adj.in[e.to].emplace_back(e.from, e.weight);
  }
  return adj;
}

void check_lt_weights(const Graph& graph) {
  std::vector<double> incoming(graph.n, 0.0);
  for (const Edge& e : graph.edges) incoming[e.to] += e.weight;
  for (int v = 0; v < graph.n; ++v) {
    if (incoming[v] > 1.0 + 1e-12) {
      throw ValidationError("LT incoming weight of user " + std::to_string(v + 1) +
                            " exceeds 1");
    }
  }
}

void check_edge_limit(const Graph& graph, int edge_limit) {
  if (static_cast<int>(graph.edges.size()) > edge_limit) {
    throw LimitError("exact IC evaluation limited to " + std::to_string(edge_limit) +
                     " edges, graph has " + std::to_string(graph.edges.size()));
  }
  if (graph.edges.size() >= 63) throw LimitError("too many edges for live-edge enumeration");
}

// Reachability closure of every node in the live-edge graph `live`.
std::vector<UserSet> reach_masks(const Graph& graph, std::uint64_t live) {
  const int n = graph.n;
  std::vector<UserSet> reach(n);
  for (int v = 0; v < n; ++v) reach[v] = UserSet{1} << v;
  // Fixed point of reach[u] |= reach[v] over live edges (u -> v).
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
      if (!(live >> i & 1)) continue;
      const Edge& e = graph.edges[i];
      const UserSet merged = reach[e.from] | reach[e.to];
      if (merged != reach[e.from]) {
        reach[e.from] = merged;
        changed = true;
      }
    }
  }
  return reach;
}

double world_probability(const Graph& graph, std::uint64_t live) {
  double prob = 1.0;
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const double w = graph.edges[i].weight;
    prob *= (live >> i & 1) ? w : 1.0 - w;
  }
  return prob;
}

Graph graph_of(const Instance& inst) { return Graph{inst.n, inst.edges}; }

}  // namespace

struct CascadeUtility::Base {
  UtilityKind kind = UtilityKind::kTable;
  int n = 0;
  Graph graph;
  Adjacency adjacency;
  int samples = 1;
  int edge_limit = 20;
  std::map<UserSet, double> table;
};

double gamma_ic_exact(const Graph& graph, UserSet seeds, int edge_limit) {
  check_edge_limit(graph, edge_limit);
  if (seeds == 0) return 0.0;
  const std::uint64_t worlds = std::uint64_t{1} << graph.edges.size();
  double total = 0.0;
  for (std::uint64_t live = 0; live < worlds; ++live) {
    const std::vector<UserSet> reach = reach_masks(graph, live);
    UserSet active = 0;
    for (int v = 0; v < graph.n; ++v) {
      if (seeds >> v & 1) active |= reach[v];
    }
    total += world_probability(graph, live) * std::popcount(active);
  }
  return total;
}

std::vector<double> tabulate_ic_exact(const Graph& graph, int edge_limit) {
  check_edge_limit(graph, edge_limit);
  if (graph.n > 24) throw LimitError("tabulation limited to 24 users");
  const std::size_t subsets = std::size_t{1} << graph.n;
  std::vector<double> table(subsets, 0.0);
  std::vector<UserSet> active(subsets, 0);
  const std::uint64_t worlds = std::uint64_t{1} << graph.edges.size();
  for (std::uint64_t live = 0; live < worlds; ++live) {
    const std::vector<UserSet> reach = reach_masks(graph, live);
    const double prob = world_probability(graph, live);
    for (std::size_t users = 1; users < subsets; ++users) {
      const int low = std::countr_zero(users);
      active[users] = active[users & (users - 1)] | reach[low];
      table[users] += prob * std::popcount(active[users]);
    }
  }
  return table;
}

namespace {

double simulate_ic(const Adjacency& adj, int n, UserSet seeds, Rng& rng) {
  std::vector<char> active(n, 0);
  std::vector<int> frontier;
  for (int v = 0; v < n; ++v) {
    if (seeds >> v & 1) {
      active[v] = 1;
      frontier.push_back(v);
    }
  }
  std::size_t count = frontier.size();
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int u : frontier) {
      for (const auto& [v, w] : adj.out[u]) {
        if (active[v]) continue;
        if (uniform01(rng) < w) {
          active[v] = 1;
          next.push_back(v);
          ++count;
        }
      }
    }
    frontier = std::move(next);
  }
  return static_cast<double>(count);
}

double simulate_lt(const Adjacency& adj, int n, UserSet seeds, Rng& rng) {
  std::vector<double> threshold(n);
  for (double& t : threshold) t = uniform01(rng);
  std::vector<char> active(n, 0);
  for (int v = 0; v < n; ++v) active[v] = (seeds >> v & 1) ? 1 : 0;
  std::size_t count = std::popcount(seeds);
  // Synchronous rounds until no new activation.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < n; ++v) {
      if (active[v]) continue;
      double weight = 0.0;
      for (const auto& [u, w] : adj.in[v]) {
        if (active[u]) weight += w;
      }
      if (weight >= threshold[v] && weight > 0.0) {
        active[v] = 1;
        ++count;
        changed = true;
      }
    }
  }
  return static_cast<double>(count);
}

}  // namespace

double gamma_mc(const Graph& graph, UserSet seeds, CascadeModel model, int samples, Rng& rng) {
  if (samples < 1) throw ConfigError("gamma_mc needs at least one sample");
  if (model == CascadeModel::kLinearThreshold) check_lt_weights(graph);
  if (seeds == 0) return 0.0;
  const Adjacency adj = build_adjacency(graph);
  double total = 0.0;
  for (int s = 0; s < samples; ++s) {
    total += model == CascadeModel::kIndependentCascade ? simulate_ic(adj, graph.n, seeds, rng)
                                                        : simulate_lt(adj, graph.n, seeds, rng);
  }
  return total / samples;
}

SubmodularityReport check_submodular_monotone(std::span<const double> table, int n,
                                              double tolerance) {
  if (n < 0 || n > 12) throw LimitError("submodularity check limited to n <= 12");
  const UserSet full = (UserSet{1} << n) - 1;
  if (table.size() != (std::size_t{1} << n)) {
    throw ValidationError("set function table must have 2^n entries");
  }
  SubmodularityReport report;
  // Monotonicity reduces to single-element steps.
  for (UserSet x = 0; x <= full; ++x) {
    for (int e = 0; e < n; ++e) {
      if (x >> e & 1) continue;
      const UserSet y = x | (UserSet{1} << e);
      const double gap = table[x] - table[y];
      if (gap > tolerance) {
        report.ok = false;
        report.violation = SubmodularityViolation{true, x, y, e, gap};
        return report;
      }
    }
  }
  // X subset of Y: enumerate Y, then every subset X of Y.
  for (UserSet y = 0; y <= full; ++y) {
    for (UserSet x = y;; x = (x - 1) & y) {
      for (int e = 0; e < n; ++e) {
        if (y >> e & 1) continue;
        const UserSet bit = UserSet{1} << e;
        const double gap = (table[y | bit] - table[y]) - (table[x | bit] - table[x]);
        if (gap > tolerance) {
          report.ok = false;
          report.violation = SubmodularityViolation{false, x, y, e, gap};
          return report;
        }
      }
      if (x == 0) break;
    }
  }
  return report;
}

std::string describe(const SubmodularityViolation& violation) {
  std::ostringstream out;
  if (violation.monotonicity) {
    out << "monotonicity violated: h({" << format_user_set(violation.smaller) << "}) > h({"
        << format_user_set(violation.larger) << "}) by " << violation.gap;
  } else {
    out << "diminishing returns violated: X={" << format_user_set(violation.smaller)
        << "}, Y={" << format_user_set(violation.larger) << "}, x=" << violation.element + 1
        << ", gap " << violation.gap;
  }
  return out.str();
}

CascadeUtility CascadeUtility::ic_exact(Graph graph, int edge_limit) {
  check_edge_limit(graph, edge_limit);
  auto base = std::make_shared<Base>();
  base->kind = UtilityKind::kIcExact;
  base->n = graph.n;
  base->edge_limit = edge_limit;
  base->graph = std::move(graph);
  CascadeUtility util;
  util.base_ = std::move(base);
  return util;
}

CascadeUtility CascadeUtility::ic_monte_carlo(Graph graph, int samples) {
  if (samples < 1) throw ConfigError("Monte Carlo utility needs at least one sample");
  auto base = std::make_shared<Base>();
  base->kind = UtilityKind::kIcMonteCarlo;
  base->n = graph.n;
  base->samples = samples;
  base->adjacency = build_adjacency(graph);
  base->graph = std::move(graph);
  CascadeUtility util;
  util.base_ = std::move(base);
  return util;
}

CascadeUtility CascadeUtility::lt_monte_carlo(Graph graph, int samples) {
  if (samples < 1) throw ConfigError("Monte Carlo utility needs at least one sample");
  check_lt_weights(graph);
  auto base = std::make_shared<Base>();
  base->kind = UtilityKind::kLtMonteCarlo;
  base->n = graph.n;
  base->samples = samples;
  base->adjacency = build_adjacency(graph);
  base->graph = std::move(graph);
  CascadeUtility util;
  util.base_ = std::move(base);
  return util;
}

CascadeUtility CascadeUtility::table(int n, std::map<UserSet, double> values) {
  if (n < 1 || n > kMaxUsers) throw ValidationError("table utility needs 1 <= n <= 62");
  auto base = std::make_shared<Base>();
  base->kind = UtilityKind::kTable;
  base->n = n;
  base->table = std::move(values);
  CascadeUtility util;
  util.base_ = std::move(base);
  return util;
}

CascadeUtility CascadeUtility::from_instance(const Instance& inst, const CascadeOptions& options) {
  CascadeUtility base = [&] {
    switch (inst.model) {
      case UtilityModel::kIndependentCascade:
        if (static_cast<int>(inst.edges.size()) <= options.exact_edge_limit) {
          return ic_exact(graph_of(inst), options.exact_edge_limit);
        }
        return ic_monte_carlo(graph_of(inst), options.mc_samples);
      case UtilityModel::kLinearThreshold:
        return lt_monte_carlo(graph_of(inst), options.mc_samples);
      case UtilityModel::kTable:
        break;
    }
    return table(inst.n, inst.gamma_table);
  }();
  return make_eps_perturbed(base, inst.epsilon, inst.perturb_seed);
}

CascadeUtility CascadeUtility::with_reference(const CascadeUtility& gamma, const CascadeUtility& q,
                                              double epsilon) {
  if (gamma.num_users() != q.num_users()) {
    throw ValidationError("gamma and reference must have the same user count");
  }
  if (!q.is_exact()) throw ConfigError("reference utility must be exact");
  CascadeUtility util = gamma;
  util.explicit_reference_ = std::make_shared<const CascadeUtility>(q);
  util.explicit_epsilon_ = epsilon;
  return util;
}

CascadeUtility make_eps_perturbed(const CascadeUtility& q, double epsilon,
                                  std::uint64_t perturb_seed) {
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 1.0) {
    throw ValidationError("epsilon must lie in [0, 1)");
  }
  if (q.perturbation_ || q.explicit_reference_) {
    throw ConfigError("utility is already perturbed");
  }
  CascadeUtility util = q;
  util.perturbation_ = CascadeUtility::Perturbation{epsilon, perturb_seed};
  return util;
}

UtilityKind CascadeUtility::kind() const { return base_->kind; }
int CascadeUtility::num_users() const { return base_->n; }

double CascadeUtility::epsilon() const {
  if (explicit_reference_) return explicit_epsilon_;
  return perturbation_ ? perturbation_->epsilon : 0.0;
}

bool CascadeUtility::is_perturbed() const { return perturbation_.has_value(); }

bool CascadeUtility::is_exact() const {
  return base_->kind == UtilityKind::kIcExact || base_->kind == UtilityKind::kTable;
}

bool CascadeUtility::has_reference() const {
  if (explicit_reference_) return true;
  return perturbation_.has_value() && is_exact();
}

double CascadeUtility::perturbation_factor(UserSet seeds) const {
  if (!perturbation_ || seeds == 0) return 1.0;
  const std::uint64_t h = splitmix64(splitmix64(perturbation_->seed) ^ splitmix64(seeds));
  return 1.0 + perturbation_->epsilon * (2.0 * unit_from_bits(h) - 1.0);
}

double CascadeUtility::base_value(UserSet seeds, Rng* rng) const {
  if (seeds == 0) return 0.0;
  if (seeds >> base_->n) throw ValidationError("seed set contains users out of range");
  switch (base_->kind) {
    case UtilityKind::kIcExact:
      return gamma_ic_exact(base_->graph, seeds, base_->edge_limit);
    case UtilityKind::kTable: {
      const auto it = base_->table.find(seeds);
      if (it == base_->table.end()) {
        throw ValidationError("gamma_table has no entry for {" + format_user_set(seeds) + "}");
      }
      return it->second;
    }
    case UtilityKind::kIcMonteCarlo:
    case UtilityKind::kLtMonteCarlo:
      break;
  }
  if (rng == nullptr) throw ConfigError("Monte Carlo utility needs a random stream");
  double total = 0.0;
  for (int s = 0; s < base_->samples; ++s) {
    total += base_->kind == UtilityKind::kIcMonteCarlo
                 ? simulate_ic(base_->adjacency, base_->n, seeds, *rng)
                 : simulate_lt(base_->adjacency, base_->n, seeds, *rng);
  }
  return total / base_->samples;
}

double CascadeUtility::gamma(UserSet seeds, Rng& rng) const {
  return perturbation_factor(seeds) * base_value(seeds, &rng);
}

double CascadeUtility::gamma(UserSet seeds) const {
  if (!is_exact()) throw ConfigError("utility has no exact evaluation");
  return perturbation_factor(seeds) * base_value(seeds, nullptr);
}

double CascadeUtility::reference_q(UserSet seeds) const {
  if (explicit_reference_) return explicit_reference_->gamma(seeds);
  if (!has_reference()) throw ConfigError("utility has no exact submodular reference");
  return base_value(seeds, nullptr);
}

std::vector<double> CascadeUtility::base_table() const {
  if (!is_exact()) throw ConfigError("utility has no exact evaluation");
  if (base_->n > 24) throw LimitError("tabulation limited to 24 users");
  if (base_->kind == UtilityKind::kIcExact) {
    return tabulate_ic_exact(base_->graph, base_->edge_limit);
  }
  const std::size_t subsets = std::size_t{1} << base_->n;
  std::vector<double> table(subsets, 0.0);
  for (std::size_t users = 1; users < subsets; ++users) table[users] = base_value(users, nullptr);
  return table;
}

std::vector<double> CascadeUtility::tabulate() const {
  std::vector<double> table = base_table();
  for (std::size_t users = 0; users < table.size(); ++users) {
    table[users] *= perturbation_factor(users);
  }
  return table;
}

std::vector<double> CascadeUtility::tabulate_reference() const {
  if (explicit_reference_) return explicit_reference_->tabulate();
  if (!has_reference()) throw ConfigError("utility has no exact submodular reference");
  return base_table();
}

}  // namespace coupon
