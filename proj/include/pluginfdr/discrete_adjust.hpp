#pragma once

// Adjustments of m0 estimators to discrete p-values with known null
// supports: rescaling by the discrete null expectation (du), mid-p values
// with their own rescaling (mid), and the expected randomized estimator
// (rand).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "pvalue_model.hpp"
#include "random.hpp"

namespace pluginfdr {

enum class Adjustment { none, du, mid, rand };

inline std::string to_string(Adjustment a) {
  switch (a) {
    case Adjustment::none: return "none";
    case Adjustment::du: return "du";
    case Adjustment::mid: return "mid";
    case Adjustment::rand: return "rand";
  }
  return "none";
}

inline Adjustment parse_adjustment(const std::string& s) {
  if (s == "none") return Adjustment::none;
  if (s == "du") return Adjustment::du;
  if (s == "mid") return Adjustment::mid;
  if (s == "rand") return Adjustment::rand;
  throw InputError("unknown adjustment '" + s + "' (expected none, du, mid or rand)");
}

inline constexpr std::size_t kDefaultRandReps = 1000;

namespace detail {

inline const std::vector<DiscreteNullDistribution>& require_supports(const PValueVector& pvals) {
  if (!pvals.has_supports()) throw InputError("discrete adjustment requires null supports");
  return pvals.supports();
}

inline void require_superuniform(std::span<const DiscreteNullDistribution> supports) {
  for (std::size_t i = 0; i < supports.size(); ++i) {
    if (!check_superuniform(supports[i])) {
      throw InputError("support " + std::to_string(i) + " is not super-uniform");
    }
  }
}

/// 1/min ν_i + Σ g(x_i)/ν_i over indices with ν_i > 0.
inline double rescaled_sum(const TransformFn& g, std::span<const double> x, std::span<const double> nus,
                           std::vector<double>* contributions) {
  double min_nu = std::numeric_limits<double>::infinity();
  for (double nu : nus) {
    if (nu > 0.0) min_nu = std::min(min_nu, nu);
  }
  if (!std::isfinite(min_nu)) throw InputError("all adjusted rescaling constants are zero");
  double s = 1.0 / min_nu;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = nus[i] > 0.0 ? g(x[i]) / nus[i] : 0.0;
    if (nus[i] > 0.0) s += c;
    if (contributions) contributions->push_back(c);
  }
  return s;
}

}  // namespace detail

/// ν_i^du = E_{p ~ F_i} g(p) for each support.
inline std::vector<double> du_rescaling(const TransformFn& g, std::span<const DiscreteNullDistribution> supports) {
  std::vector<double> nus;
  nus.reserve(supports.size());
  for (const auto& f : supports) nus.push_back(nu_adjusted(g, f));
  return nus;
}

/// Discrete-uniform estimator 1/min ν_i^du + Σ g(p_i)/ν_i^du. Requires
/// super-uniform supports; never exceeds the unadjusted estimate.
inline EstimateResult adjust_du(const TransformFn& g, const PValueVector& pvals) {
  const auto& supports = detail::require_supports(pvals);
  detail::require_superuniform(supports);
  const auto nus = du_rescaling(g, supports);
  EstimateResult r;
  r.contributions.reserve(pvals.size());
  const double m0 = detail::rescaled_sum(g, pvals.values(), nus, &r.contributions);
  auto out = detail::make_result(m0, pvals.size(), "du[" + g.describe() + "]");
  out.contributions = std::move(r.contributions);
  return out;
}

/// Mid-p values q_i = p_i - P(p_i = observed)/2.
inline std::vector<double> mid_pvalues(const PValueVector& pvals) {
  const auto& supports = detail::require_supports(pvals);
  std::vector<double> q(pvals.size());
  for (std::size_t i = 0; i < pvals.size(); ++i) q[i] = mid_value(pvals[i], supports[i].mass_at(pvals[i]));
  return q;
}

/// ν_i^mid = E g(q_i) under the null law of the mid-p value.
inline std::vector<double> mid_rescaling(const TransformFn& g, std::span<const DiscreteNullDistribution> supports) {
  std::vector<double> nus;
  nus.reserve(supports.size());
  for (const auto& f : supports) {
    const auto masses = f.masses();
    const auto atoms = f.atoms();
    CompensatedSum s;
    for (std::size_t j = 0; j < f.size(); ++j) s.add(g(mid_value(atoms[j], masses[j])) * masses[j]);
    nus.push_back(s.value());
  }
  return nus;
}

/// Mid-p estimator 1/min ν_i^mid + Σ g(q_i)/ν_i^mid. For g(u) = u this is
/// 2 + 2 Σ q_i.
inline EstimateResult adjust_mid(const TransformFn& g, const PValueVector& pvals) {
  const auto& supports = detail::require_supports(pvals);
  detail::require_superuniform(supports);
  const auto q = mid_pvalues(pvals);
  const auto nus = mid_rescaling(g, supports);
  std::vector<double> contributions;
  contributions.reserve(q.size());
  const double m0 = detail::rescaled_sum(g, q, nus, &contributions);
  auto out = detail::make_result(m0, pvals.size(), "mid[" + g.describe() + "]");
  out.contributions = std::move(contributions);
  return out;
}

struct RandomizedEstimate {
  EstimateResult estimate;
  /// Unadjusted m̂0 at the observed p-values.
  double base = 0.0;
  /// Monte Carlo mean of 1/m̂0(r(p, U)) and its standard error.
  double reciprocal_mean = 0.0;
  double reciprocal_se = 0.0;
  /// Mean of m̂0(r(p, U)); approximates the estimate when its spread is small.
  double mean_of_estimates = 0.0;
  /// Largest single-draw m̂0(r(p, U)).
  double max_draw = 0.0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

struct RandomizeOptions {
  std::size_t replications = kDefaultRandReps;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  /// Permit bases without a plug-in guarantee (legacy PC, ZZD).
  bool allow_no_guarantee = false;
};

/// Expected randomized estimator [E_U 1/m̂0(r(p_1,U_1), ..., r(p_m,U_m))]^{-1},
/// approximated over `replications` seeded draws. Replication k draws its m
/// uniforms from substream derive_seed(seed, k), so results do not depend on
/// the worker count.
inline RandomizedEstimate adjust_randomized(const EstimatorSpec& base, const PValueVector& pvals,
                                            const RandomizeOptions& opt) {
  if (opt.replications < 1) throw InputError("randomized adjustment needs at least one replication");
  if (!base.guaranteed() && !opt.allow_no_guarantee) {
    throw InputError("randomized adjustment of " + base.id() +
                     " carries no control guarantee; pass the no-guarantee flag to force it");
  }
  const auto& supports = detail::require_supports(pvals);
  const std::size_t m = pvals.size();
  std::vector<double> masses(m);
  for (std::size_t i = 0; i < m; ++i) masses[i] = supports[i].mass_at(pvals[i]);

  const double base_value = evaluate(base, pvals.values());
  if (!(base_value > 0.0)) throw InputError("base estimate is zero; randomized estimator undefined");

  // ratio[k] = m̂0(p) / m̂0(r_k) >= 1; the estimate is m̂0(p) / mean(ratio).
  std::vector<double> ratio(opt.replications);
  std::vector<double> draws(opt.replications);
  parallel_for(opt.replications, opt.workers, [&](std::size_t k) {
    Rng rng(derive_seed(opt.seed, k));
    std::vector<double> r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = pvals[i] - rng.uniform() * masses[i];
    const double est = evaluate(base, r);
    if (!(est > 0.0)) throw InputError("base estimator returned zero on a randomized vector");
    draws[k] = est;
    ratio[k] = base_value / est;
  });

  double excess = 0.0;
  double max_draw = 0.0;
  for (std::size_t k = 0; k < ratio.size(); ++k) {
    excess += ratio[k] - 1.0;
    max_draw = std::max(max_draw, draws[k]);
  }
  const double mean_ratio = 1.0 + excess / static_cast<double>(ratio.size());
  const auto ratio_stats = mean_and_se(ratio);

  RandomizedEstimate out;
  out.base = base_value;
  out.estimate = detail::make_result(base_value / mean_ratio, m, "rand[" + base.id() + "]");
  out.reciprocal_mean = mean_ratio / base_value;
  out.reciprocal_se = ratio_stats.se / base_value;
  out.mean_of_estimates = mean_and_se(draws).mean;
  out.max_draw = max_draw;
  out.replications = opt.replications;
  out.seed = opt.seed;
  if (!base.guaranteed()) out.estimate.warnings.push_back("no plug-in FDR guarantee for this base");
  return out;
}

/// Applies `adj` to `spec`. du and mid need a homogeneous base.
inline EstimateResult apply_adjustment(const EstimatorSpec& spec, Adjustment adj, const PValueVector& pvals,
                                       const RandomizeOptions& rand_opt = {}) {
  switch (adj) {
    case Adjustment::none:
      return estimate(spec, pvals);
    case Adjustment::du:
    case Adjustment::mid: {
      const auto g = spec.homogeneous_transform();
      if (!g) throw InputError(to_string(adj) + " adjustment requires a homogeneous base, got " + spec.id());
      auto r = adj == Adjustment::du ? adjust_du(*g, pvals) : adjust_mid(*g, pvals);
      r.estimator = to_string(adj) + "[" + spec.id() + "]";
      return r;
    }
    case Adjustment::rand:
      return adjust_randomized(spec, pvals, rand_opt).estimate;
  }
  throw InputError("unknown adjustment");
}

}  // namespace pluginfdr
