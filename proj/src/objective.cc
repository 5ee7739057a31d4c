#include "coupon/objective.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <memory>

#include "coupon/errors.h"

namespace coupon {

namespace {

std::uint64_t checked_code_space(int n, int m) {
  double space = std::pow(static_cast<double>(m + 1), n);
  if (space > 9.0e15) throw LimitError("allocation space too large to index");
  return static_cast<std::uint64_t>(space);
}

void check_shape(const Instance& inst, const FractionalSolution& y) {
  if (y.num_users() != inst.n || y.num_coupons() != inst.m) {
    throw ValidationError("fractional solution must be n x m");
  }
}

Estimate summarize(double sum, double sum_sq, int samples) {
  Estimate est;
  est.mean = sum / samples;
  if (samples > 1) {
    const double var = std::max(0.0, (sum_sq - samples * est.mean * est.mean) / (samples - 1));
    est.std_error = std::sqrt(var / samples);
  }
  return est;
}

// Draws R (each pair independently with probability y_vd) and returns the
// allocation of highest coupons.
Allocation sample_highest(const FractionalSolution& y, Rng& rng) {
  const int n = y.num_users();
  const int m = y.num_coupons();
  Allocation a(n);
  for (int v = 0; v < n; ++v) {
    for (int d = 0; d < m; ++d) {
      if (uniform01(rng) < y(v, d)) a.assign(v, d);  // later d has higher value
    }
  }
  return a;
}

// Evaluates f on allocations, exactly when the utility allows, otherwise by
// one seed draw followed by a (Monte Carlo) gamma evaluation. In the sampled
// mode the caller supplies per-user uniforms and a gamma stream, so two
// allocations evaluated with the same inputs are coupled.
class FEvaluator {
 public:
  FEvaluator(const Instance& inst, const CascadeUtility& util, const ObjectiveLimits& limits)
      : inst_(inst), util_(util) {
    if (util.is_exact() && inst.n <= limits.exact_n_limit) {
      exact_ = std::make_unique<ExactObjective>(inst, util, limits);
    }
  }

  bool exact() const { return exact_ != nullptr; }

  double value(const Allocation& a, std::span<const double> coins, const Rng& gamma_stream) const {
    if (exact_) return exact_->f(a);
    UserSet seeds = 0;
    for (int v = 0; v < inst_.n; ++v) {
      const int d = a.raw(v);
      if (d != Allocation::kNone && coins[v] < inst_.adoption_prob(v, d)) {
        seeds |= UserSet{1} << v;
      }
    }
    Rng stream = gamma_stream;
    return util_.gamma(seeds, stream);
  }

 private:
  const Instance& inst_;
  const CascadeUtility& util_;
  std::unique_ptr<ExactObjective> exact_;
};

}  // namespace

Allocation Allocation::from_pairs(int n, int m, std::span<const UserCouponPair> pairs) {
  Allocation a(n);
  for (const UserCouponPair& p : pairs) {
    if (p.user < 0 || p.user >= n || p.coupon < 0 || p.coupon >= m) {
      throw ValidationError("user-coupon pair out of range");
    }
    if (a.coupon_[p.user] != kNone) {
      throw ValidationError("user " + std::to_string(p.user + 1) +
                            " receives more than one coupon");
    }
    a.coupon_[p.user] = p.coupon;
  }
  return a;
}

Allocation Allocation::from_code(std::uint64_t code, int n, int m) {
  Allocation a(n);
  for (int v = 0; v < n; ++v) {
    a.coupon_[v] = static_cast<int>(code % (m + 1)) - 1;
    code /= (m + 1);
  }
  return a;
}

std::size_t Allocation::size() const {
  return static_cast<std::size_t>(
      std::count_if(coupon_.begin(), coupon_.end(), [](int d) { return d != kNone; }));
}

std::vector<UserCouponPair> Allocation::pairs() const {
  std::vector<UserCouponPair> out;
  for (int v = 0; v < num_users(); ++v) {
    if (coupon_[v] != kNone) out.push_back({v, coupon_[v]});
  }
  return out;
}

UserSet Allocation::users() const {
  UserSet users = 0;
  for (int v = 0; v < num_users(); ++v) {
    if (coupon_[v] != kNone) users |= UserSet{1} << v;
  }
  return users;
}

std::uint64_t Allocation::code(int m) const {
  checked_code_space(num_users(), m);
  std::uint64_t code = 0;
  for (int v = num_users() - 1; v >= 0; --v) code = code * (m + 1) + (coupon_[v] + 1);
  return code;
}

FractionalSolution FractionalSolution::indicator(const Allocation& s, int m) {
  FractionalSolution y(s.num_users(), m);
  for (const UserCouponPair& p : s.pairs()) y(p.user, p.coupon) = 1.0;
  return y;
}

double FractionalSolution::row_sum(int v) const {
  double sum = 0.0;
  for (double x : y.row(v)) sum += x;
  return sum;
}

bool FractionalSolution::in_box(double tolerance) const {
  return std::all_of(y.data().begin(), y.data().end(), [tolerance](double x) {
    return x >= -tolerance && x <= 1.0 + tolerance;
  });
}

bool FractionalSolution::rows_within_cap(double tolerance) const {
  for (int v = 0; v < num_users(); ++v) {
    if (row_sum(v) > 1.0 + tolerance) return false;
  }
  return true;
}

FractionalSolution oplus(const FractionalSolution& a, const FractionalSolution& b) {
  if (!a.y.same_shape(b.y)) throw ValidationError("oplus needs matrices of the same shape");
  FractionalSolution out = a;
  auto dst = out.y.data();
  auto src = b.y.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::max(dst[i], src[i]);
  return out;
}

std::optional<int> highest_coupon(const Allocation& s, int v) { return s.coupon_of(v); }

std::optional<int> highest_coupon(const Instance& inst, std::span<const UserCouponPair> pairs,
                                  int v) {
  std::optional<int> best;
  for (const UserCouponPair& p : pairs) {
    if (p.user != v) continue;
    if (!best || inst.coupon_values[p.coupon] > inst.coupon_values[*best]) best = p.coupon;
  }
  return best;
}

Allocation reduce_to_highest(const Instance& inst, std::span<const UserCouponPair> pairs) {
  Allocation a(inst.n);
  for (int v = 0; v < inst.n; ++v) {
    if (auto d = highest_coupon(inst, pairs, v)) a.assign(v, *d);
  }
  return a;
}

std::vector<double> seed_marginals(const Instance& inst, const Allocation& s) {
  std::vector<double> probs(inst.n, 0.0);
  for (int v = 0; v < inst.n; ++v) {
    if (auto d = s.coupon_of(v)) probs[v] = inst.adoption_prob(v, *d);
  }
  return probs;
}

double seed_prob(const Instance& inst, const Allocation& s, UserSet seeds) {
  double prob = 1.0;
  for (int v = 0; v < inst.n; ++v) {
    const auto d = s.coupon_of(v);
    const double p = d ? inst.adoption_prob(v, *d) : 0.0;
    prob *= (seeds >> v & 1) ? p : 1.0 - p;
  }
  return prob;
}

double cost_exact(const Instance& inst, const Allocation& s) {
  double cost = 0.0;
  for (const UserCouponPair& p : s.pairs()) cost += inst.expected_cost(p.user, p.coupon);
  return cost;
}

double distribution_cost(const Instance& inst, const Allocation& s) {
  double cost = 0.0;
  for (const UserCouponPair& p : s.pairs()) cost += inst.dist_cost[p.user];
  return cost;
}

namespace {

double expectation_over_seeds(const Instance& inst, const Allocation& s, int limit,
                              const std::function<double(UserSet)>& value) {
  if (inst.n > limit) {
    throw LimitError("exact f limited to n <= " + std::to_string(limit) + " users");
  }
  double total = 0.0;
  const UserSet subsets = UserSet{1} << inst.n;
  for (UserSet seeds = 1; seeds < subsets; ++seeds) {
    const double prob = seed_prob(inst, s, seeds);
    if (prob != 0.0) total += prob * value(seeds);
  }
  return total;
}

}  // namespace

double f_exact(const Instance& inst, const CascadeUtility& util, const Allocation& s,
               const ObjectiveLimits& limits) {
  if (!util.is_exact()) throw ConfigError("f_exact needs an exactly evaluable utility");
  return expectation_over_seeds(inst, s, limits.exact_n_limit,
                                [&util](UserSet seeds) { return util.gamma(seeds); });
}

double g_exact(const Instance& inst, const CascadeUtility& util, const Allocation& s,
               const ObjectiveLimits& limits) {
  return expectation_over_seeds(inst, s, limits.exact_n_limit,
                                [&util](UserSet seeds) { return util.reference_q(seeds); });
}

Estimate f_mc(const Instance& inst, const CascadeUtility& util, const Allocation& s, int samples,
              Rng& rng) {
  if (samples < 1) throw ConfigError("f_mc needs at least one sample");
  const std::vector<double> probs = seed_marginals(inst, s);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < samples; ++i) {
    UserSet seeds = 0;
    for (int v = 0; v < inst.n; ++v) {
      if (uniform01(rng) < probs[v]) seeds |= UserSet{1} << v;
    }
    const double value = util.gamma(seeds, rng);
    sum += value;
    sum_sq += value * value;
  }
  return summarize(sum, sum_sq, samples);
}

double multilinear_F_exact(const Instance& inst, const CascadeUtility& util,
                           const FractionalSolution& y, const ObjectiveLimits& limits) {
  check_shape(inst, y);
  const int pairs = inst.n * inst.m;
  if (pairs > limits.multilinear_pair_limit) {
    throw LimitError("exact multilinear extension limited to n*m <= " +
                     std::to_string(limits.multilinear_pair_limit));
  }
  const ExactObjective objective(inst, util, limits);
  double total = 0.0;
  const std::uint64_t subsets = std::uint64_t{1} << pairs;
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    double weight = 1.0;
    Allocation a(inst.n);
    for (int k = 0; k < pairs && weight != 0.0; ++k) {
      const int v = k / inst.m;
      const int d = k % inst.m;
      if (mask >> k & 1) {
        weight *= y(v, d);
        a.assign(v, d);  // coupons visited in increasing value order
      } else {
        weight *= 1.0 - y(v, d);
      }
    }
    if (weight != 0.0) total += weight * objective.f(a);
  }
  return total;
}

Estimate multilinear_F_mc(const Instance& inst, const CascadeUtility& util,
                          const FractionalSolution& y, int samples, Rng& rng,
                          const ObjectiveLimits& limits) {
  check_shape(inst, y);
  if (samples < 1) throw ConfigError("multilinear_F_mc needs at least one sample");
  const FEvaluator eval(inst, util, limits);
  const std::uint64_t base_seed = rng();
  std::vector<double> coins(inst.n);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    Rng stream = substream(base_seed, static_cast<std::uint64_t>(s));
    const Allocation a = sample_highest(y, stream);
    for (double& c : coins) c = uniform01(stream);
    const double value = eval.value(a, coins, stream);
    sum += value;
    sum_sq += value * value;
  }
  return summarize(sum, sum_sq, samples);
}

MarginalEstimate marginal_omega(const Instance& inst, const CascadeUtility& util,
                                const FractionalSolution& y, int samples, Rng& rng,
                                const ObjectiveLimits& limits) {
  check_shape(inst, y);
  if (samples < 1) throw ConfigError("marginal_omega needs at least one sample");
  const FEvaluator eval(inst, util, limits);
  const std::uint64_t base_seed = rng();
  Matrix sum(inst.n, inst.m);
  Matrix sum_sq(inst.n, inst.m);
  double base_sum = 0.0;
  double base_sum_sq = 0.0;
  std::vector<double> coins(inst.n);
  for (int s = 0; s < samples; ++s) {
    Rng stream = substream(base_seed, static_cast<std::uint64_t>(s));
    const Allocation a = sample_highest(y, stream);
    for (double& c : coins) c = uniform01(stream);
    const Rng gamma_stream = stream;
    const double base = eval.value(a, coins, gamma_stream);
    base_sum += base;
    base_sum_sq += base * base;
    for (int v = 0; v < inst.n; ++v) {
      for (int d = 0; d < inst.m; ++d) {
        const int current = a.raw(v);
        double diff = 0.0;
        if (current == Allocation::kNone || current < d) {
          Allocation raised = a;
          raised.assign(v, d);
          diff = eval.value(raised, coins, gamma_stream) - base;
        }
        sum(v, d) += diff;
        sum_sq(v, d) += diff * diff;
      }
    }
  }
  MarginalEstimate out;
  out.omega = Matrix(inst.n, inst.m);
  out.std_error = Matrix(inst.n, inst.m);
  for (int v = 0; v < inst.n; ++v) {
    for (int d = 0; d < inst.m; ++d) {
      const Estimate est = summarize(sum(v, d), sum_sq(v, d), samples);
      out.omega(v, d) = std::max(0.0, est.mean);
      out.std_error(v, d) = est.std_error;
    }
  }
  out.base = summarize(base_sum, base_sum_sq, samples);
  return out;
}

double multilinear_of_table(std::span<const double> table, std::span<const double> probs) {
  const int n = static_cast<int>(probs.size());
  if (table.size() != (std::size_t{1} << n)) {
    throw ValidationError("set function table must have 2^n entries");
  }
  // weights[U] = prod_{v in U} x_v prod_{v not in U} (1 - x_v), built one user
  // at a time.
  std::vector<double> weights(table.size(), 0.0);
  weights[0] = 1.0;
  for (int v = 0; v < n; ++v) {
    const std::size_t half = std::size_t{1} << v;
    for (std::size_t users = 0; users < half; ++users) {
      weights[users | half] = weights[users] * probs[v];
      weights[users] *= 1.0 - probs[v];
    }
  }
  double total = 0.0;
  for (std::size_t users = 1; users < table.size(); ++users) total += weights[users] * table[users];
  return total;
}

ExactObjective::ExactObjective(const Instance& inst, const CascadeUtility& util,
                               const ObjectiveLimits& limits)
    : inst_(inst) {
  if (!util.is_exact()) throw ConfigError("exact objective needs an exactly evaluable utility");
  if (util.num_users() != inst.n) throw ValidationError("utility and instance disagree on n");
  if (inst.n > limits.exact_n_limit) {
    throw LimitError("exact f limited to n <= " + std::to_string(limits.exact_n_limit) +
                     " users");
  }
  gamma_table_ = util.tabulate();
  if (util.has_reference()) q_table_ = util.tabulate_reference();
  const double codes = std::pow(static_cast<double>(inst.m + 1), inst.n);
  if (codes <= 65536.0) {
    f_cache_.resize(static_cast<std::size_t>(codes));
    for (std::uint64_t code = 0; code < f_cache_.size(); ++code) {
      f_cache_[code] =
          extension(gamma_table_, seed_marginals(inst_, Allocation::from_code(code, inst.n, inst.m)));
    }
  }
}

double ExactObjective::extension(std::span<const double> table,
                                 std::span<const double> probs) const {
  return multilinear_of_table(table, probs);
}

double ExactObjective::f(const Allocation& s) const {
  if (!f_cache_.empty()) return f_cache_[s.code(inst_.m)];
  return extension(gamma_table_, seed_marginals(inst_, s));
}

double ExactObjective::f_code(std::uint64_t code) const {
  if (!f_cache_.empty()) return f_cache_[code];
  return f(Allocation::from_code(code, inst_.n, inst_.m));
}

double ExactObjective::g(const Allocation& s) const {
  if (q_table_.empty()) throw ConfigError("utility has no exact submodular reference");
  return extension(q_table_, seed_marginals(inst_, s));
}

std::vector<double> ExactObjective::highest_seed_probs(const FractionalSolution& y) const {
  check_shape(inst_, y);
  std::vector<double> rho(inst_.n, 0.0);
  for (int v = 0; v < inst_.n; ++v) {
    double none_above = 1.0;
    for (int d = inst_.m - 1; d >= 0; --d) {
      rho[v] += y(v, d) * none_above * inst_.adoption_prob(v, d);
      none_above *= 1.0 - y(v, d);
    }
  }
  return rho;
}

double ExactObjective::multilinear(const FractionalSolution& y) const {
  return extension(gamma_table_, highest_seed_probs(y));
}

Matrix ExactObjective::marginals(const FractionalSolution& y) const {
  const double base = multilinear(y);
  Matrix omega(inst_.n, inst_.m);
  for (int v = 0; v < inst_.n; ++v) {
    for (int d = 0; d < inst_.m; ++d) {
      if (y(v, d) >= 1.0) continue;
      FractionalSolution raised = y;
      raised(v, d) = 1.0;
      omega(v, d) = multilinear(raised) - base;
    }
  }
  return omega;
}

double ExactObjective::expected_rounded(const FractionalSolution& y) const {
  check_shape(inst_, y);
  std::vector<double> rho(inst_.n, 0.0);
  for (int v = 0; v < inst_.n; ++v) {
    for (int d = 0; d < inst_.m; ++d) rho[v] += y(v, d) * inst_.adoption_prob(v, d);
  }
  return extension(gamma_table_, rho);
}

}  // namespace coupon
