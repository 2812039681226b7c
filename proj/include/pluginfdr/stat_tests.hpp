#pragma once

// Test statistics that produce p-values together with their exact null
// supports: Fisher's exact test on 2x2 tables and the one-sided Gaussian
// test, plus the normal distribution functions they need.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "numeric.hpp"
#include "pvalue_model.hpp"

namespace pluginfdr {

/// Φ(x).
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Φ(x), accurate far into the tail.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Φ^{-1}(u) for u in (0,1); Wichura's AS241 (PPND16), relative accuracy
/// about 1e-16.
inline double norm_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InputError("norm_quantile: argument must lie in (0,1)");
  const double q = u - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

/// One-sided Gaussian test of H0: mean 0 vs mean > 0; p = 1 - Φ(x).
inline double gaussian_onesided_p(double x) { return norm_sf(x); }

/// Density of the one-sided Gaussian p-value when the statistic has mean μ:
/// f1(t) = exp(-μ Φ^{-1}(t) - μ²/2).
inline double gaussian_alternative_density(double t, double mu) {
  return std::exp(-mu * norm_quantile(t) - 0.5 * mu * mu);
}

/// 2x2 table laid out as
///
///              success  failure
///   group A       a        b
///   group B       c        d
struct ContingencyTable {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint32_t c = 0;
  std::uint32_t d = 0;

  std::uint32_t total() const { return a + b + c + d; }
};

enum class Alternative { greater, two_sided };

struct FisherResult {
  double p = 1.0;
  DiscreteNullDistribution support = DiscreteNullDistribution::point_mass_at_one();
};

/// The achievable p-values for fixed margins: p_by_count[k - k_min] is the
/// p-value when the top-left cell equals k.
struct FisherMarginSupport {
  std::uint32_t k_min = 0;
  std::vector<double> p_by_count;
  DiscreteNullDistribution support = DiscreteNullDistribution::point_mass_at_one();
};

namespace detail {

using u128 = unsigned __int128;

/// C(n, k) exactly, or 0 if it overflows 64 bits.
inline std::uint64_t binomial_u64(std::uint32_t n, std::uint32_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  u128 r = 1;
  for (std::uint32_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > static_cast<u128>(UINT64_MAX)) return 0;
  }
  return static_cast<std::uint64_t>(r);
}

inline double log_choose(std::uint32_t n, std::uint32_t k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Two-sided p-value rule: outcomes whose point probability does not exceed
/// the observed one (relative slack 1e-7).
inline constexpr double kTwoSidedSlack = 1e-7;

inline double u128_to_double(u128 x) {
  const auto hi = static_cast<std::uint64_t>(x >> 64);
  const auto lo = static_cast<std::uint64_t>(x);
  return std::ldexp(static_cast<double>(hi), 64) + static_cast<double>(lo);
}

/// Support of the p-value for the hypergeometric with margins (n1, n2, k1):
/// group sizes n1, n2 and k1 total successes.
inline FisherMarginSupport build_fisher_support(std::uint32_t n1, std::uint32_t n2, std::uint32_t k1,
                                                Alternative alt) {
  const std::uint32_t n = n1 + n2;
  const std::uint32_t k_min = k1 > n2 ? k1 - n2 : 0;
  const std::uint32_t k_max = std::min(n1, k1);
  const std::size_t count = k_max - k_min + 1;

  FisherMarginSupport out;
  out.k_min = k_min;
  out.p_by_count.assign(count, 1.0);
  if (count == 1) return out;

  const std::uint64_t total = binomial_u64(n, n1);
  std::vector<double> pv(count);
  std::vector<double> atom_masses;
  std::vector<double> atom_values;
  std::vector<double> atom_cdf;

  if (total != 0) {
    // Exact integer path: point weights C(k1,k) C(n-k1, n1-k) sum to C(n, n1).
    std::vector<u128> w(count);
    for (std::size_t j = 0; j < count; ++j) {
      const auto k = static_cast<std::uint32_t>(k_min + j);
      w[j] = static_cast<u128>(binomial_u64(k1, k)) * binomial_u64(n - k1, n1 - k);
    }
    std::vector<u128> tail(count);  // integer numerator of each p-value
    if (alt == Alternative::greater) {
      u128 acc = 0;
      for (std::size_t j = count; j-- > 0;) {
        acc += w[j];
        tail[j] = acc;
      }
    } else {
      for (std::size_t j = 0; j < count; ++j) {
        const double cutoff = u128_to_double(w[j]) * (1.0 + kTwoSidedSlack);
        u128 acc = 0;
        for (std::size_t l = 0; l < count; ++l) {
          if (u128_to_double(w[l]) <= cutoff) acc += w[l];
        }
        tail[j] = acc;
      }
    }
    const double denom = static_cast<double>(total);
    for (std::size_t j = 0; j < count; ++j) {
      pv[j] = tail[j] == total ? 1.0 : u128_to_double(tail[j]) / denom;
    }
    // Distinct p-values, ascending; mass = total weight of outcomes mapping there.
    std::map<u128, u128> by_value;
    for (std::size_t j = 0; j < count; ++j) by_value[tail[j]] += w[j];
    u128 running = 0;
    for (const auto& [numer, weight] : by_value) {
      running += weight;
      const double value = numer == total ? 1.0 : u128_to_double(numer) / denom;
      const double cdf = running == total ? 1.0 : u128_to_double(running) / denom;
      // Above 2^53 neighbouring numerators can render to the same double.
      if (!atom_values.empty() && atom_values.back() == value) {
        atom_cdf.back() = cdf;
        continue;
      }
      atom_values.push_back(value);
      atom_cdf.push_back(cdf);
    }
  } else {
    // Log-space path for large margins.
    std::vector<double> logw(count);
    for (std::size_t j = 0; j < count; ++j) {
      const auto k = static_cast<std::uint32_t>(k_min + j);
      logw[j] = log_choose(k1, k) + log_choose(n - k1, n1 - k) - log_choose(n, n1);
    }
    std::vector<double> prob(count);
    CompensatedSum norm;
    for (std::size_t j = 0; j < count; ++j) {
      prob[j] = std::exp(logw[j]);
      norm.add(prob[j]);
    }
    for (auto& x : prob) x /= norm.value();
    if (alt == Alternative::greater) {
      CompensatedSum acc;
      for (std::size_t j = count; j-- > 0;) {
        acc.add(prob[j]);
        pv[j] = j == 0 ? 1.0 : std::min(1.0, acc.value());
      }
    } else {
      for (std::size_t j = 0; j < count; ++j) {
        CompensatedSum acc;
        const double cutoff = logw[j] + std::log1p(kTwoSidedSlack);
        bool everything = true;
        for (std::size_t l = 0; l < count; ++l) {
          if (logw[l] <= cutoff) {
            acc.add(prob[l]);
          } else {
            everything = false;
          }
        }
        pv[j] = everything ? 1.0 : std::min(1.0, acc.value());
      }
    }
    std::map<double, double> by_value;
    for (std::size_t j = 0; j < count; ++j) by_value[pv[j]] += prob[j];
    CompensatedSum running;
    for (const auto& [value, mass] : by_value) {
      running.add(mass);
      atom_values.push_back(value);
      atom_cdf.push_back(std::min(running.value(), value));
    }
    atom_cdf.back() = 1.0;
    if (alt == Alternative::greater) atom_cdf = atom_values;
  }
  out.p_by_count = std::move(pv);
  out.support = DiscreteNullDistribution(std::move(atom_values), std::move(atom_cdf));
  return out;
}

}  // namespace detail

/// Memo of Fisher supports keyed by (n1, n2, k1, alternative). Safe for
/// concurrent readers; builders run outside the lock.
class FisherSupportCache {
 public:
  std::shared_ptr<const FisherMarginSupport> get(std::uint32_t n1, std::uint32_t n2, std::uint32_t k1,
                                                 Alternative alt) {
    const Key key{n1, n2, k1, alt == Alternative::greater ? 0 : 1};
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto built = std::make_shared<const FisherMarginSupport>(detail::build_fisher_support(n1, n2, k1, alt));
    std::unique_lock lock(mutex_);
    return cache_.try_emplace(key, std::move(built)).first->second;
  }

  static FisherSupportCache& global() {
    static FisherSupportCache cache;
    return cache;
  }

 private:
  using Key = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, int>;
  std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const FisherMarginSupport>> cache_;
};

/// Fisher's exact test. `greater` tests for a larger success rate in group A
/// (p = P(A >= a)); `two_sided` sums the probabilities of all tables no more
/// likely than the observed one. Returns the p-value and the full null law
/// of the p-value for the observed margins.
inline FisherResult fisher_exact(const ContingencyTable& t, Alternative alt,
                                 FisherSupportCache& cache = FisherSupportCache::global()) {
  if (t.total() == 0) throw InputError("contingency table has no observations");
  const std::uint32_t n1 = t.a + t.b;
  const std::uint32_t n2 = t.c + t.d;
  const std::uint32_t k1 = t.a + t.c;
  const auto s = cache.get(n1, n2, k1, alt);
  return {s->p_by_count[t.a - s->k_min], s->support};
}

}  // namespace pluginfdr
