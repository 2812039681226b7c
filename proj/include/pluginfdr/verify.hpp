#pragma once

// Verification suites behind `pluginfdr verify`. Each returns rows of
// (check, parameters, value, reference, tolerance, pass).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "io.hpp"
#include "oracles.hpp"
#include "random.hpp"
#include "simulation.hpp"

namespace pluginfdr {

struct VerifyOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  /// Monte Carlo sample count; 0 selects the suite default.
  std::size_t samples = 0;
};

namespace detail {

inline std::string params(const char* format, auto... args) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

}  // namespace detail

/// Convex-order checks: the fixed examples plus 50 random step transforms.
inline std::vector<io::VerifyRow> verify_orders(const VerifyOptions& opt) {
  std::vector<io::VerifyRow> rows;
  const auto half = FiniteDistribution::point_mass(0.5);
  const auto bern = FiniteDistribution::bernoulli(0.5);
  rows.push_back({"convex_order", "point(0.5)<=cx bernoulli(0.5)", convex_order_leq(half, bern) ? 1.0 : 0.0, 1.0,
                  kExactTolerance, convex_order_leq(half, bern)});
  rows.push_back({"convex_order", "bernoulli(0.5)<=cx point(0.5)", convex_order_leq(bern, half) ? 1.0 : 0.0, 0.0,
                  kExactTolerance, !convex_order_leq(bern, half)});
  const auto two_step = TransformFn::table({0.0, 0.5, 0.8}, {0.0, 0.4, 1.0});
  rows.push_back({"transform_bernoulli_order", "table{0,.4@.5,1@.8}", two_step.nu(), 0.32, kExactTolerance,
                  verify_transform_order(two_step) && std::fabs(two_step.nu() - 0.32) <= kExactTolerance});
  for (double lambda : {0.0, 0.25, 0.5, 0.9}) {
    const auto g = TransformFn::indicator(lambda);
    rows.push_back({"transform_bernoulli_order", detail::params("indicator(%g)", lambda), g.nu(), 1.0 - lambda,
                    kExactTolerance, verify_transform_order(g)});
  }
  const std::size_t n = opt.samples ? opt.samples : 50;
  for (std::size_t k = 0; k < n; ++k) {
    Rng rng(derive_seed(opt.seed, k));
    const std::size_t steps = 1 + static_cast<std::size_t>(rng.uniform() * 8.0);
    const auto g = random_step_transform(rng, steps);
    rows.push_back({"transform_bernoulli_order", detail::params("random_step[%zu];steps=%zu", k, steps), g.nu(),
                    g.nu(), kExactTolerance, verify_transform_order(g)});
  }
  return rows;
}

/// Binomial and Irwin-Hall inverse-moment bounds.
inline std::vector<io::VerifyRow> verify_bounds(const VerifyOptions& opt) {
  std::vector<io::VerifyRow> rows;
  for (std::size_t k = 0; k <= 12; ++k) {
    for (int qi = 1; qi <= 9; ++qi) {
      const double q = qi / 10.0;
      const auto b = binom_inverse_moment(k, q);
      rows.push_back({"binom_inverse_bound", detail::params("k=%zu;q=%g", k, q), b.enumerated, b.bound,
                      kExactTolerance, b.holds});
    }
  }
  for (std::size_t k = 0; k <= 60; ++k) {
    for (double q : {0.05, 0.3, 0.5, 0.8, 1.0}) {
      const auto b = binom_inverse_moment(k, q);
      rows.push_back({"binom_inverse_identity", detail::params("k=%zu;q=%g", k, q), b.enumerated, b.closed_form,
                      1e-13, std::fabs(b.enumerated - b.closed_form) <= 1e-13});
    }
  }
  const std::size_t samples = opt.samples ? opt.samples : 1'000'000;
  for (std::size_t k = 2; k <= 10; ++k) {
    const auto ih = irwin_hall_inverse_moment(k, samples, derive_seed(opt.seed, k), IrwinHallMethod::conditional,
                                              opt.workers);
    rows.push_back({"irwin_hall_lower", detail::params("k=%zu;n=%zu", k, samples), ih.estimate, ih.lower,
                    3.0 * ih.se, ih.estimate >= ih.lower - 3.0 * ih.se});
    rows.push_back({"irwin_hall_upper", detail::params("k=%zu;n=%zu", k, samples), ih.estimate, ih.upper,
                    3.0 * ih.se, ih.estimate <= ih.upper + 3.0 * ih.se});
    if (k == 2) {
      const double exact = 2.0 * std::numbers::ln2;
      rows.push_back({"irwin_hall_k2_value", detail::params("n=%zu", samples), ih.estimate, exact, 2e-3,
                      std::fabs(ih.estimate - exact) <= 2e-3});
    }
  }
  return rows;
}

/// Inverse moment condition: the exact Storey/Dirac-Uniform value and
/// Monte Carlo checks for Storey and PC-new.
inline std::vector<io::VerifyRow> verify_imc_suite(const VerifyOptions& opt) {
  std::vector<io::VerifyRow> rows;
  const double exact = imc_storey_dirac_exact(50, 0.5);
  const auto enumerated = binom_inverse_moment(49, 0.5);
  // E[1/m̂0] with m̂0 = (1 + Bin(49, 1/2))/ν, ν = 1/2.
  const double by_enumeration = 0.5 * enumerated.enumerated;
  rows.push_back({"imc_exact_identity", "storey(0.5);dirac;m0=50", exact, by_enumeration, 1e-13,
                  std::fabs(exact - by_enumeration) <= 1e-13});
  rows.push_back({"imc_exact_bound", "storey(0.5);dirac;m0=50", exact, 1.0 / 50.0, 0.0, exact <= 1.0 / 50.0});

  const std::size_t reps = opt.samples ? opt.samples : 100'000;
  struct Case {
    EstimatorSpec spec;
    std::size_t m, m0;
  };
  const std::vector<Case> cases = {
      {EstimatorSpec::pc_new(), 20, 20},
      {EstimatorSpec::storey(0.5), 50, 50},
      {EstimatorSpec::storey(0.5), 100, 50},
      {EstimatorSpec::poly(2.0, 0.5), 100, 80},
  };
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& cs = cases[c];
    const std::uint64_t s = derive_seed(opt.seed, c);
    const auto gen = [&cs, s](std::size_t r) { return sim_dirac_uniform(cs.m, cs.m0, derive_seed(s, r)); };
    const auto res = verify_imc(cs.spec, gen, 0, reps, opt.workers);
    rows.push_back({"imc_monte_carlo", cs.spec.id() + detail::params(";m=%zu;m0=%zu;reps=%zu", cs.m, cs.m0, reps),
                    res.estimate, res.bound, 3.0 * res.se, res.pass});
  }
  return rows;
}

/// P(PC-new > PC-ZZD) at m = 500: CLT formula against Monte Carlo. Both
/// values are reported; the check is their agreement within 3 SE.
inline std::vector<io::VerifyRow> verify_pc_compare(const VerifyOptions& opt) {
  std::vector<io::VerifyRow> rows;
  const std::size_t samples = opt.samples ? opt.samples : 100'000;
  for (std::size_t m0 : {std::size_t{500}, std::size_t{450}}) {
    const auto r = pc_comparison_prob(kZzdM500, m0, kZzdC500, kZzdS500, samples, derive_seed(opt.seed, m0),
                                      opt.workers);
    rows.push_back({"pc_new_gt_pc_zzd", detail::params("m=500;m0=%zu;n=%zu", m0, samples), r.monte_carlo, r.clt,
                    3.0 * r.se_at_clt, r.agree});
  }
  return rows;
}

}  // namespace pluginfdr
