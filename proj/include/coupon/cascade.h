#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coupon/instance.h"
#include "coupon/rng.h"

namespace coupon {

struct Graph {
  int n = 0;
  std::vector<Edge> edges;
};

enum class CascadeModel { kIndependentCascade, kLinearThreshold };

enum class UtilityKind { kIcExact, kIcMonteCarlo, kLtMonteCarlo, kTable };

struct CascadeOptions {
  int mc_samples = 1000;
  int exact_edge_limit = 20;
};

// Expected spread of `seeds` under IC, by enumerating all 2^|E| live-edge
// graphs. Throws LimitError above `edge_limit` edges.
double gamma_ic_exact(const Graph& graph, UserSet seeds, int edge_limit = 20);

// The same expectation for all 2^n seed sets at once.
std::vector<double> tabulate_ic_exact(const Graph& graph, int edge_limit = 20);

// Mean spread over `samples` simulated cascades. LT requires incoming weight
// sums <= 1 at every node (ValidationError otherwise).
double gamma_mc(const Graph& graph, UserSet seeds, CascadeModel model, int samples, Rng& rng);

struct SubmodularityViolation {
  bool monotonicity = false;  // true: h(smaller) > h(larger)
  UserSet smaller = 0;        // X
  UserSet larger = 0;         // Y, X subset of Y
  int element = -1;           // x not in Y (diminishing returns only)
  double gap = 0.0;           // size of the violation, > 0
};

struct SubmodularityReport {
  bool ok = true;
  std::optional<SubmodularityViolation> violation;
};

// Exhaustive diminishing-returns and monotonicity check of a set function
// given as a table of 2^n values indexed by UserSet. Violations smaller than
// `tolerance` are ignored. Requires n <= 12.
SubmodularityReport check_submodular_monotone(std::span<const double> table, int n,
                                              double tolerance = 1e-12);

std::string describe(const SubmodularityViolation& violation);

// Seed-set utility gamma(U). Immutable once built; copies share state.
//
// An epsilon-perturbed utility evaluates gamma(U) = c(U) * q(U) where q is
// the base utility and c(U) in [1 - eps, 1 + eps] is a hash of
// (perturb_seed, U). The base is then available as the submodular reference
// q whenever it can be evaluated exactly.
class CascadeUtility {
 public:
  static CascadeUtility ic_exact(Graph graph, int edge_limit = 20);
  static CascadeUtility ic_monte_carlo(Graph graph, int samples);
  static CascadeUtility lt_monte_carlo(Graph graph, int samples);
  // Missing keys are allowed here and reported when evaluated.
  static CascadeUtility table(int n, std::map<UserSet, double> values);
  // Utility described by an instance: IC (exact within the edge limit, Monte
  // Carlo beyond it), LT (Monte Carlo) or TABLE, perturbed by the instance's
  // epsilon and perturb_seed.
  static CascadeUtility from_instance(const Instance& inst, const CascadeOptions& options = {});

  // Explicit gamma/q pair with a claimed epsilon. Nothing ties the two
  // together, which makes it the tool for negative controls.
  static CascadeUtility with_reference(const CascadeUtility& gamma, const CascadeUtility& q,
                                       double epsilon);

  UtilityKind kind() const;
  int num_users() const;
  double epsilon() const;
  bool is_perturbed() const;
  // Deterministic evaluation is available.
  bool is_exact() const;
  bool has_reference() const;

  double gamma(UserSet seeds, Rng& rng) const;
  // Exact kinds only; throws ConfigError otherwise.
  double gamma(UserSet seeds) const;
  double reference_q(UserSet seeds) const;
  double perturbation_factor(UserSet seeds) const;

  // gamma (resp. q) over all 2^n seed sets.
  std::vector<double> tabulate() const;
  std::vector<double> tabulate_reference() const;

  friend CascadeUtility make_eps_perturbed(const CascadeUtility& q, double epsilon,
                                           std::uint64_t perturb_seed);

 private:
  struct Base;
  struct Perturbation {
    double epsilon = 0.0;
    std::uint64_t seed = 0;
  };

  CascadeUtility() = default;
  double base_value(UserSet seeds, Rng* rng) const;
  std::vector<double> base_table() const;

  std::shared_ptr<const Base> base_;
  std::optional<Perturbation> perturbation_;
  std::shared_ptr<const CascadeUtility> explicit_reference_;
  double explicit_epsilon_ = 0.0;
};

// gamma(U) = c(U) * q(U), c(U) in [1 - epsilon, 1 + epsilon], c(empty) = 1.
CascadeUtility make_eps_perturbed(const CascadeUtility& q, double epsilon,
                                  std::uint64_t perturb_seed);

}  // namespace coupon
