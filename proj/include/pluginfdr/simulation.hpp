#pragma once

// Simulation settings (one-sided Gaussian, two-sample Fisher exact, Dirac-
// Uniform), the closed-form bias/variance of homogeneous estimators in the
// Gaussian model, the inverse-moment-condition harness and the replication
// runner that aggregates estimation and plug-in BH metrics.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "discrete_adjust.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "procedures.hpp"
#include "pvalue_model.hpp"
#include "random.hpp"
#include "stat_tests.hpp"

namespace pluginfdr {

// ---------------------------------------------------------------------------
// Quadrature against the alternative p-value density of the Gaussian model.

inline constexpr double kQuadratureTolerance = 1e-8;

namespace detail {

template <typename F>
double gauss_kronrod(F&& f, double a, double b) {
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13, &error);
  if (!(error <= kQuadratureTolerance) || !std::isfinite(value)) {
    throw std::runtime_error("quadrature did not converge (error estimate " + std::to_string(error) + ")");
  }
  return value;
}

/// ∫ over [a,b] split at the given interior points.
template <typename F>
double piecewise_integral(F&& f, double a, double b, std::vector<double> cuts) {
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  double left = a;
  for (double c : cuts) {
    if (c <= left || c >= b) continue;
    total += gauss_kronrod(f, left, c);
    left = c;
  }
  return total + gauss_kronrod(f, left, b);
}

}  // namespace detail

/// ∫_0^1 h(t) f1(t) dt where f1 is the density of the one-sided Gaussian
/// p-value under mean shift μ. Evaluated in z-space (t = 1 - Φ(z)) where the
/// integrand becomes h(1 - Φ(z)) φ(z - μ), split at the images of the given
/// discontinuities of h.
template <typename H>
double alternative_expectation(H&& h, double mu, const std::vector<double>& discontinuities = {}) {
  constexpr double kHalfWidth = 12.0;
  std::vector<double> cuts;
  for (double t : discontinuities) {
    if (t > 0.0 && t < 1.0) cuts.push_back(-norm_quantile(t));
  }
  auto integrand = [&](double z) { return h(norm_sf(z)) * norm_pdf(z - mu); };
  return detail::piecewise_integral(integrand, mu - kHalfWidth, mu + kHalfWidth, std::move(cuts));
}

/// ∫_0^1 h(u) du split at the given discontinuities.
template <typename H>
double uniform_expectation(H&& h, const std::vector<double>& discontinuities = {}) {
  return detail::piecewise_integral(std::forward<H>(h), 0.0, 1.0, discontinuities);
}

struct BiasVariance {
  double ex0 = 0.0;   // E g(X0) = ν
  double var0 = 0.0;  // Var g(X0)
  double ex1 = 0.0;   // E g(X1)
  double var1 = 0.0;  // Var g(X1)
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
};

/// Bias, variance and MSE of the homogeneous estimator with transform g in
/// the one-sided Gaussian model with m hypotheses, m0 uniform nulls and
/// alternatives shifted by μ. All quantities on the m0 scale.
inline BiasVariance closed_form_bias_var(const TransformFn& g, double mu, std::size_t m, std::size_t m0) {
  if (m0 > m) throw InputError("m0 exceeds m");
  const auto cuts = g.discontinuities();
  BiasVariance out;
  out.ex0 = g.nu();
  const double second0 = g.uniform_second_moment().value_or(
      uniform_expectation([&](double u) { return g(u) * g(u); }, cuts));
  out.var0 = second0 - out.ex0 * out.ex0;
  out.ex1 = alternative_expectation([&](double t) { return g(t); }, mu, cuts);
  const double second1 = alternative_expectation([&](double t) { return g(t) * g(t); }, mu, cuts);
  out.var1 = second1 - out.ex1 * out.ex1;
  const double nu = g.nu();
  const auto m1 = static_cast<double>(m - m0);
  out.bias = bias_uniform(g, m, m0, out.ex1);
  out.variance = (static_cast<double>(m0) * out.var0 + m1 * out.var1) / (nu * nu);
  out.mse = out.bias * out.bias + out.variance;
  return out;
}

// ---------------------------------------------------------------------------
// Data generators. Nulls occupy the leading indices.

struct GaussianConfig {
  std::size_t m = 10000;
  std::size_t m0 = 6000;
  double mu = 1.5;
  std::size_t replications = 1000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
};

inline std::size_t m0_from_pi0(std::size_t m, double pi0) {
  if (!(pi0 >= 0.0 && pi0 <= 1.0)) throw InputError("pi0 must lie in [0,1]");
  return static_cast<std::size_t>(std::llround(pi0 * static_cast<double>(m)));
}

/// Replication `rep`: X_i ~ N(0,1) for the m0 nulls, N(μ,1) otherwise;
/// p_i = 1 - Φ(X_i).
inline PValueVector sim_gaussian(const GaussianConfig& cfg, std::size_t rep) {
  if (cfg.m0 > cfg.m) throw InputError("m0 exceeds m");
  if (!(cfg.mu >= 0.0)) throw InputError("signal strength mu must be non-negative");
  Rng rng(derive_seed(cfg.seed, rep));
  std::vector<double> p(cfg.m);
  std::vector<bool> is_null(cfg.m);
  for (std::size_t i = 0; i < cfg.m; ++i) {
    is_null[i] = i < cfg.m0;
    const double x = norm_quantile(rng.uniform_open()) + (is_null[i] ? 0.0 : cfg.mu);
    p[i] = gaussian_onesided_p(x);
  }
  return PValueVector(std::move(p), {}, std::move(is_null));
}

struct FetConfig {
  std::size_t m = 500;
  std::uint32_t n_per_group = 25;
  double p3 = 0.4;
  /// Number of alternatives; (m - m3) must be even.
  std::size_t m3 = 0;
  double rate_low = 0.01;
  double rate_high = 0.10;
  Alternative alternative = Alternative::two_sided;
  std::size_t replications = 200;
  std::uint64_t seed = 0;
  double alpha = 0.05;

  std::size_t m0() const { return m - m3; }
};

/// m3 for a target π1 = m3/m; rejects values that make m1 = m2 fractional.
inline std::size_t fet_m3_from_pi1(std::size_t m, double pi1) {
  const std::size_t m3 = m0_from_pi0(m, pi1);
  if ((m - m3) % 2 != 0) {
    throw InputError("pi1 gives an odd number of nulls; m1 = m2 = (m - m3)/2 must be integral");
  }
  return m3;
}

/// Replication `rep` of the two-sample binary setting: m1 nulls at base
/// rate rate_low, m2 nulls at rate_high, m3 alternatives with rate_high in
/// group B and p3 in group A. Each hypothesis is tested with Fisher's exact
/// test; supports are attached.
inline PValueVector sim_fet(const FetConfig& cfg, std::size_t rep,
                            FisherSupportCache& cache = FisherSupportCache::global()) {
  if (cfg.m3 > cfg.m || (cfg.m - cfg.m3) % 2 != 0) {
    throw InputError("FET config: m3 must not exceed m and m - m3 must be even");
  }
  const std::size_t m1 = (cfg.m - cfg.m3) / 2;
  Rng rng(derive_seed(cfg.seed, rep));
  std::vector<double> p(cfg.m);
  std::vector<DiscreteNullDistribution> supports;
  supports.reserve(cfg.m);
  std::vector<bool> is_null(cfg.m);
  for (std::size_t i = 0; i < cfg.m; ++i) {
    is_null[i] = i < cfg.m0();
    const double rate_b = i < m1 ? cfg.rate_low : cfg.rate_high;
    const double rate_a = is_null[i] ? rate_b : cfg.p3;
    const unsigned xa = rng.binomial(cfg.n_per_group, rate_a);
    const unsigned xb = rng.binomial(cfg.n_per_group, rate_b);
    const ContingencyTable t{xa, cfg.n_per_group - xa, xb, cfg.n_per_group - xb};
    auto res = fisher_exact(t, cfg.alternative, cache);
    p[i] = res.p;
    supports.push_back(std::move(res.support));
  }
  return PValueVector(std::move(p), std::move(supports), std::move(is_null));
}

/// Nulls i.i.d. uniform, the m - m0 alternatives exactly 0.
inline PValueVector sim_dirac_uniform(std::size_t m, std::size_t m0, std::uint64_t seed) {
  if (m0 > m) throw InputError("m0 exceeds m");
  Rng rng(seed);
  std::vector<double> p(m, 0.0);
  std::vector<bool> is_null(m, false);
  for (std::size_t i = 0; i < m0; ++i) {
    p[i] = rng.uniform();
    is_null[i] = true;
  }
  return PValueVector(std::move(p), {}, std::move(is_null));
}

// ---------------------------------------------------------------------------
// Inverse moment condition E[1/m̂0(p_{0,h})] <= 1/m0.

struct ImcResult {
  double estimate = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::size_t replications = 0;
};

using PValueGenerator = std::function<PValueVector(std::size_t replication)>;
using EstimatorFn = std::function<double(const PValueVector&)>;

/// Monte Carlo check of the inverse moment condition for null index h:
/// averages 1/m̂0 with p_h set to 0; passes iff estimate <= 1/m0 + 3 SE.
inline ImcResult verify_imc(const EstimatorFn& estimator, const PValueGenerator& generator, std::size_t h,
                            std::size_t replications, unsigned workers = 1) {
  if (replications < 2) throw InputError("IMC check needs at least two replications");
  std::vector<double> recip(replications);
  std::vector<std::size_t> m0s(replications);
  parallel_for(replications, workers, [&](std::size_t r) {
    const PValueVector pv = generator(r);
    if (!pv.has_labels() || h >= pv.size() || !pv.is_null()[h]) {
      throw InputError("IMC check: index h must be a labelled null");
    }
    m0s[r] = pv.null_count();
    recip[r] = 1.0 / estimator(pv.with_value(h, 0.0));
  });
  const auto stats = mean_and_se(recip);
  ImcResult out;
  out.estimate = stats.mean;
  out.se = stats.se;
  out.bound = 1.0 / static_cast<double>(m0s.front());
  out.pass = out.estimate <= out.bound + 3.0 * out.se;
  out.replications = replications;
  return out;
}

inline ImcResult verify_imc(const EstimatorSpec& spec, const PValueGenerator& generator, std::size_t h,
                            std::size_t replications, unsigned workers = 1) {
  return verify_imc([&spec](const PValueVector& pv) { return evaluate(spec, pv.values()); }, generator, h,
                    replications, workers);
}

/// Exact E[1/m̂0^Storey(p_{0,h})] under Dirac-Uniform with m0 nulls:
/// ν E[1/(1 + Bin(m0-1, ν))] = (1 - (1-ν)^{m0}) / m0.
inline double imc_storey_dirac_exact(std::size_t m0, double lambda) {
  if (m0 == 0) throw InputError("m0 must be positive");
  const double nu = 1.0 - lambda;
  const auto n = static_cast<double>(m0);
  return -std::expm1(n * std::log1p(-nu)) / n;
}

// ---------------------------------------------------------------------------
// Replication runner.

struct MethodSpec {
  enum class Kind { estimator, plain_bh, oracle };

  std::string id;
  Kind kind = Kind::estimator;
  EstimatorSpec estimator = EstimatorSpec::storey(0.5);
  Adjustment adjustment = Adjustment::none;
  std::size_t rand_reps = 200;

  static MethodSpec of(EstimatorSpec spec, Adjustment adj = Adjustment::none, std::size_t rand_reps = 200) {
    MethodSpec m;
    m.id = adj == Adjustment::none ? spec.id() : to_string(adj) + "[" + spec.id() + "]";
    m.estimator = std::move(spec);
    m.adjustment = adj;
    m.rand_reps = rand_reps;
    return m;
  }
  static MethodSpec plain_bh() {
    MethodSpec m;
    m.id = "bh";
    m.kind = Kind::plain_bh;
    return m;
  }
  static MethodSpec oracle() {
    MethodSpec m;
    m.id = "oracle";
    m.kind = Kind::oracle;
    return m;
  }
};

struct MethodSummary {
  std::string id;
  double mean_pi0_hat = 0.0;
  double pi0_se = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double fdr_hat = 0.0;
  double fdr_se = 0.0;
  double power = 0.0;
  double power_se = 0.0;
};

struct ExperimentReport {
  std::string config_point;
  std::size_t m = 0;
  std::size_t m0 = 0;
  std::size_t replications = 0;
  std::vector<MethodSummary> methods;
  /// Per-method, per-replication values: m0_hat[j][r], fdp[j][r], power[j][r].
  std::vector<std::vector<double>> m0_hat;
  std::vector<std::vector<double>> fdp;
  std::vector<std::vector<double>> power;

  std::size_t method_index(const std::string& id) const {
    for (std::size_t j = 0; j < methods.size(); ++j) {
      if (methods[j].id == id) return j;
    }
    throw InputError("no method '" + id + "' in report");
  }
};

/// Runs `replications` independent replications. Each replication draws its
/// data from generator(r) and the randomized adjustment of method j from
/// substream derive_seed(derive_seed(derive_seed(seed, r), 1), j). Results
/// land in indexed slots and are reduced in replication order, so reports
/// are bit-identical for any worker count.
inline ExperimentReport run_experiment(const PValueGenerator& generator, std::size_t m, std::size_t m0,
                                       std::size_t replications, double alpha,
                                       const std::vector<MethodSpec>& methods, std::uint64_t seed,
                                       unsigned workers, std::string config_point) {
  if (replications == 0) throw InputError("experiment needs at least one replication");
  if (methods.empty()) throw InputError("experiment needs at least one method");
  const std::size_t k = methods.size();
  ExperimentReport rep;
  rep.config_point = std::move(config_point);
  rep.m = m;
  rep.m0 = m0;
  rep.replications = replications;
  rep.m0_hat.assign(k, std::vector<double>(replications));
  rep.fdp.assign(k, std::vector<double>(replications));
  rep.power.assign(k, std::vector<double>(replications));

  parallel_for(replications, workers, [&](std::size_t r) {
    const PValueVector pv = generator(r);
    const double mm = static_cast<double>(pv.size());
    for (std::size_t j = 0; j < k; ++j) {
      const MethodSpec& method = methods[j];
      double m0_hat = mm;
      switch (method.kind) {
        case MethodSpec::Kind::plain_bh:
          m0_hat = mm;
          break;
        case MethodSpec::Kind::oracle:
          m0_hat = std::max<double>(1.0, static_cast<double>(pv.null_count()));
          break;
        case MethodSpec::Kind::estimator: {
          RandomizeOptions opt;
          opt.replications = method.rand_reps;
          opt.seed = derive_seed(derive_seed(derive_seed(seed, r), 1), j);
          m0_hat = apply_adjustment(method.estimator, method.adjustment, pv, opt).m0_hat;
          break;
        }
      }
      const auto bh_result = bh_stepup(pv.values(), alpha, m0_hat);
      const auto metrics = evaluate_rejections(pv, bh_result);
      rep.m0_hat[j][r] = m0_hat;
      rep.fdp[j][r] = metrics.fdp;
      rep.power[j][r] = metrics.power;
    }
  });

  const double pi0 = m > 0 ? static_cast<double>(m0) / static_cast<double>(m) : 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> pi0_hat(replications);
    std::vector<double> sq_err(replications);
    for (std::size_t r = 0; r < replications; ++r) {
      pi0_hat[r] = rep.m0_hat[j][r] / static_cast<double>(m);
      sq_err[r] = (pi0_hat[r] - pi0) * (pi0_hat[r] - pi0);
    }
    const auto est = mean_and_se(pi0_hat);
    const auto fdr = mean_and_se(rep.fdp[j]);
    const auto pw = mean_and_se(rep.power[j]);
    MethodSummary s;
    s.id = methods[j].id;
    s.mean_pi0_hat = est.mean;
    s.pi0_se = est.se;
    s.bias = est.mean - pi0;
    s.mse = compensated_sum(sq_err) / static_cast<double>(replications);
    s.fdr_hat = fdr.mean;
    s.fdr_se = fdr.se;
    s.power = pw.mean;
    s.power_se = pw.se;
    rep.methods.push_back(std::move(s));
  }
  return rep;
}

inline std::string gaussian_config_point(const GaussianConfig& cfg) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "gaussian:m=%zu;m0=%zu;mu=%g", cfg.m, cfg.m0, cfg.mu);
  return buf;
}

inline std::string fet_config_point(const FetConfig& cfg) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "fet:m=%zu;m3=%zu;N=%u;p3=%g", cfg.m, cfg.m3, cfg.n_per_group, cfg.p3);
  return buf;
}

inline ExperimentReport run_gaussian(const GaussianConfig& cfg, const std::vector<MethodSpec>& methods,
                                     unsigned workers = 1) {
  return run_experiment([&cfg](std::size_t r) { return sim_gaussian(cfg, r); }, cfg.m, cfg.m0,
                        cfg.replications, cfg.alpha, methods, cfg.seed, workers, gaussian_config_point(cfg));
}

inline ExperimentReport run_fet(const FetConfig& cfg, const std::vector<MethodSpec>& methods,
                                unsigned workers = 1) {
  return run_experiment([&cfg](std::size_t r) { return sim_fet(cfg, r); }, cfg.m, cfg.m0(), cfg.replications,
                        cfg.alpha, methods, cfg.seed, workers, fet_config_point(cfg));
}

inline ExperimentReport run_dirac(std::size_t m, std::size_t m0, std::size_t replications, double alpha,
                                  std::uint64_t seed, const std::vector<MethodSpec>& methods,
                                  unsigned workers = 1) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "dirac:m=%zu;m0=%zu", m, m0);
  return run_experiment([=](std::size_t r) { return sim_dirac_uniform(m, m0, derive_seed(seed, r)); }, m, m0,
                        replications, alpha, methods, seed, workers, buf);
}

}  // namespace pluginfdr
