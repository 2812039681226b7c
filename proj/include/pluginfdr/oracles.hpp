#pragma once

// Independent verifiers: convex order between finite distributions via
// stop-loss transforms, the Bernoulli convex bound for transformed uniforms,
// inverse moments of Binomial and Irwin-Hall variables, and the CLT
// comparison of PC-new with PC-ZZD.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "estimators.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "pvalue_model.hpp"
#include "random.hpp"
#include "stat_tests.hpp"

namespace pluginfdr {

inline constexpr double kExactTolerance = 1e-12;

/// Distribution on finitely many points: increasing atoms, positive
/// probabilities summing to 1.
class FiniteDistribution {
 public:
  FiniteDistribution(std::vector<double> atoms, std::vector<double> probs)
      : atoms_(std::move(atoms)), probs_(std::move(probs)) {
    if (atoms_.empty() || atoms_.size() != probs_.size()) {
      throw InputError("finite distribution: atoms and probabilities must be non-empty and of equal length");
    }
    CompensatedSum total;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
      if (j > 0 && !(atoms_[j] > atoms_[j - 1])) {
        throw InputError("finite distribution: atoms must be strictly increasing");
      }
      if (!(probs_[j] > 0.0)) throw InputError("finite distribution: probabilities must be positive");
      total.add(probs_[j]);
    }
    if (std::fabs(total.value() - 1.0) > kExactTolerance) {
      throw InputError("finite distribution: probabilities must sum to 1");
    }
  }

  /// Sorts, merges equal atoms and drops zero-probability entries.
  static FiniteDistribution from_pairs(std::vector<std::pair<double, double>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    std::vector<double> atoms;
    std::vector<double> probs;
    for (const auto& [a, w] : pairs) {
      if (w <= 0.0) continue;
      if (!atoms.empty() && atoms.back() == a) {
        probs.back() += w;
      } else {
        atoms.push_back(a);
        probs.push_back(w);
      }
    }
    return {std::move(atoms), std::move(probs)};
  }

  static FiniteDistribution point_mass(double x) { return {{x}, {1.0}}; }

  static FiniteDistribution bernoulli(double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw InputError("bernoulli parameter must lie in [0,1]");
    return from_pairs({{0.0, 1.0 - q}, {1.0, q}});
  }

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }

  double mean() const {
    CompensatedSum s;
    for (std::size_t j = 0; j < atoms_.size(); ++j) s.add(atoms_[j] * probs_[j]);
    return s.value();
  }

  /// E[(X - t)_+].
  double stop_loss(double t) const {
    CompensatedSum s;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
      if (atoms_[j] > t) s.add((atoms_[j] - t) * probs_[j]);
    }
    return s.value();
  }

 private:
  std::vector<double> atoms_;
  std::vector<double> probs_;
};

/// X <=cx Y for finite laws: equal means and E(X-t)_+ <= E(Y-t)_+ at every
/// atom of either law (stop-loss transforms are piecewise linear with kinks
/// only at atoms).
inline bool convex_order_leq(const FiniteDistribution& x, const FiniteDistribution& y,
                             double tol = kExactTolerance) {
  if (std::fabs(x.mean() - y.mean()) > tol) return false;
  std::vector<double> grid = x.atoms();
  grid.insert(grid.end(), y.atoms().begin(), y.atoms().end());
  for (double t : grid) {
    if (x.stop_loss(t) > y.stop_loss(t) + tol) return false;
  }
  return true;
}

/// Exact law of g(U), U uniform, for transforms with finite range
/// (indicator and table kinds).
inline FiniteDistribution law_of_transformed_uniform(const TransformFn& g) {
  if (const auto* ind = std::get_if<TransformFn::Indicator>(&g.kind())) {
    return FiniteDistribution::from_pairs({{0.0, ind->lambda}, {1.0, 1.0 - ind->lambda}});
  }
  if (const auto* tab = std::get_if<TransformFn::Table>(&g.kind())) {
    std::vector<std::pair<double, double>> pairs;
    pairs.emplace_back(0.0, tab->breakpoints.front());
    for (std::size_t j = 0; j < tab->values.size(); ++j) {
      const double right = j + 1 < tab->breakpoints.size() ? tab->breakpoints[j + 1] : 1.0;
      pairs.emplace_back(tab->values[j], right - tab->breakpoints[j]);
    }
    return FiniteDistribution::from_pairs(std::move(pairs));
  }
  throw InputError("law of g(U) is only available for finite-range transforms (indicator, table)");
}

/// g(U) <=cx Bernoulli(ν) with ν = E g(U).
inline bool verify_transform_order(const TransformFn& g, double tol = kExactTolerance) {
  return convex_order_leq(law_of_transformed_uniform(g), FiniteDistribution::bernoulli(g.nu()), tol);
}

/// Random non-decreasing step transform with `steps` levels on [0,1].
inline TransformFn random_step_transform(Rng& rng, std::size_t steps) {
  if (steps == 0) throw InputError("step transform needs at least one step");
  std::vector<double> breaks{0.0};
  while (breaks.size() < steps) {
    const double b = rng.uniform();
    if (b > 0.0 && std::find(breaks.begin(), breaks.end(), b) == breaks.end()) breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> values(steps);
  for (auto& v : values) v = rng.uniform();
  std::sort(values.begin(), values.end());
  values.back() = std::max(values.back(), 1e-3);
  return TransformFn::table(std::move(breaks), std::move(values));
}

struct BinomInverseMoment {
  double enumerated = 0.0;
  double closed_form = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// E[1/(1 + Bin(k, q))] by enumeration, the closed identity
/// (1 - (1-q)^{k+1}) / ((k+1) q), and the bound 1/((k+1) q).
inline BinomInverseMoment binom_inverse_moment(std::size_t k, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw InputError("binomial probability must lie in (0,1]");
  const auto n = static_cast<double>(k);
  CompensatedSum s;
  for (std::size_t j = 0; j <= k; ++j) {
    const auto jj = static_cast<double>(j);
    double log_pmf = std::lgamma(n + 1.0) - std::lgamma(jj + 1.0) - std::lgamma(n - jj + 1.0);
    if (j > 0) log_pmf += jj * std::log(q);
    if (j < k) {
      if (q == 1.0) continue;
      log_pmf += (n - jj) * std::log1p(-q);
    }
    s.add(std::exp(log_pmf) / (1.0 + jj));
  }
  BinomInverseMoment out;
  out.enumerated = s.value();
  out.closed_form = q == 1.0 ? 1.0 / (n + 1.0) : -std::expm1((n + 1.0) * std::log1p(-q)) / ((n + 1.0) * q);
  out.bound = 1.0 / ((n + 1.0) * q);
  out.holds = out.enumerated <= out.bound + kExactTolerance;
  return out;
}

struct IrwinHallInverseMoment {
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;  // 2/k
  double upper = 0.0;  // 2/(k-1)
  bool pass = false;
};

enum class IrwinHallMethod {
  /// Average of 1/S over draws of S = U_1 + ... + U_k.
  plain,
  /// Average of E[1/S | U_1..U_{k-1}] = ln((T+1)/T), T = U_1 + ... + U_{k-1}.
  conditional,
};

/// Monte Carlo estimate of E[1/(U_1 + ... + U_k)]; checks
/// 2/k - 3SE <= estimate <= 2/(k-1) + 3SE. Samples are split into fixed
/// blocks with substreams derive_seed(seed, block), so the result does not
/// depend on the worker count.
inline IrwinHallInverseMoment irwin_hall_inverse_moment(std::size_t k, std::size_t samples, std::uint64_t seed,
                                                        IrwinHallMethod method = IrwinHallMethod::conditional,
                                                        unsigned workers = 1) {
  if (k < 2) throw InputError("Irwin-Hall inverse moment needs k >= 2");
  if (samples < 2) throw InputError("Irwin-Hall inverse moment needs at least two samples");
  constexpr std::size_t kBlock = 1 << 14;
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<double> sums(blocks);
  std::vector<double> sumsq(blocks);
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    const std::size_t n = std::min(kBlock, samples - b * kBlock);
    CompensatedSum s;
    CompensatedSum s2;
    for (std::size_t i = 0; i < n; ++i) {
      double t = 0.0;
      double y = 0.0;
      if (method == IrwinHallMethod::plain) {
        for (std::size_t j = 0; j < k; ++j) t += rng.uniform_open();
        y = 1.0 / t;
      } else {
        for (std::size_t j = 0; j + 1 < k; ++j) t += rng.uniform_open();
        y = std::log1p(1.0 / t);
      }
      s.add(y);
      s2.add(y * y);
    }
    sums[b] = s.value();
    sumsq[b] = s2.value();
  });
  const double n = static_cast<double>(samples);
  const double mean = compensated_sum(sums) / n;
  const double var = std::max(0.0, (compensated_sum(sumsq) - n * mean * mean) / (n - 1.0));
  IrwinHallInverseMoment out;
  out.estimate = mean;
  out.se = std::sqrt(var / n);
  out.lower = 2.0 / static_cast<double>(k);
  out.upper = 2.0 / static_cast<double>(k - 1);
  out.pass = out.lower - 3.0 * out.se <= out.estimate && out.estimate <= out.upper + 3.0 * out.se;
  return out;
}

struct PcComparison {
  double clt = 0.0;
  double monte_carlo = 0.0;
  /// Sample standard error of the Monte Carlo proportion.
  double se = 0.0;
  /// Standard error of a proportion equal to the CLT value; the agreement
  /// check uses it so that a rare event with no hits still has a scale.
  double se_at_clt = 0.0;
  bool agree = false;  // |mc - clt| <= 3 se_at_clt
};

/// CLT approximation of P(PC-new > PC-ZZD) when the alternatives carry no
/// weight: 1 - Φ(sqrt(3/m0) (m C - (m0 + 2))).
inline double pc_comparison_clt(std::size_t m, std::size_t m0, double c) {
  const auto mm = static_cast<double>(m);
  const auto n0 = static_cast<double>(m0);
  return norm_sf(std::sqrt(3.0 / n0) * (mm * c - (n0 + 2.0)));
}

/// CLT value alongside a Monte Carlo estimate of P(PC-new > PC-ZZD) with m0
/// uniform nulls and m - m0 alternatives at 0.
inline PcComparison pc_comparison_prob(std::size_t m, std::size_t m0, double c, double s, std::size_t samples,
                                       std::uint64_t seed, unsigned workers = 1) {
  if (m0 == 0 || m0 > m) throw InputError("pc comparison needs 0 < m0 <= m");
  if (samples < 2) throw InputError("pc comparison needs at least two samples");
  std::vector<double> hit(samples);
  parallel_for(samples, workers, [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    std::vector<double> p(m, 0.0);
    for (std::size_t i = 0; i < m0; ++i) p[i] = rng.uniform();
    const double pc_new = evaluate_homogeneous(TransformFn::identity(), p);
    const double pc_zzd = evaluate_pc_zzd(p, c, s);
    hit[r] = pc_new > pc_zzd ? 1.0 : 0.0;
  });
  const auto stats = mean_and_se(hit);
  PcComparison out;
  out.clt = pc_comparison_clt(m, m0, c);
  out.monte_carlo = stats.mean;
  out.se = stats.se;
  out.se_at_clt = std::sqrt(out.clt * (1.0 - out.clt) / static_cast<double>(samples));
  out.agree = std::fabs(out.monte_carlo - out.clt) <= 3.0 * out.se_at_clt;
  return out;
}

}  // namespace pluginfdr
