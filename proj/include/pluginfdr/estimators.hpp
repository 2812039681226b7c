#pragma once

// m0 estimators: the homogeneous family (1 + Σ g(p_i)) / ν, the heterogeneous
// family 1/min ν_i + Σ g_i(p_i)/ν_i, the legacy Pounds-Cheng variants, and
// convex combinations.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "pvalue_model.hpp"

namespace pluginfdr {

/// Correction constants for PC-ZZD at m = 500, as tabulated by Zhang, Zhao
/// and Dai (2011). Other m require caller-supplied constants.
inline constexpr double kZzdC500 = 1.011709;
inline constexpr double kZzdS500 = 98.0;
inline constexpr std::size_t kZzdM500 = 500;

class EstimatorSpec {
 public:
  struct Homogeneous {
    TransformFn g;
  };
  struct Heterogeneous {
    std::vector<TransformFn> gs;
    std::vector<double> nus;  // ν_i; zero entries are dropped from sum and min
  };
  struct Storey {
    double lambda = 0.5;
  };
  struct PcNew {};
  struct PcLegacy {};
  struct PcZzd {
    double c = kZzdC500;
    double s = kZzdS500;
    std::size_t m_ref = kZzdM500;
  };
  struct Poly {
    double r = 2.0;
    double lambda = 0.5;
  };
  struct Combination {
    std::vector<double> weights;
    std::vector<EstimatorSpec> members;
  };
  using Variant =
      std::variant<Homogeneous, Heterogeneous, Storey, PcNew, PcLegacy, PcZzd, Poly, Combination>;

  static EstimatorSpec homogeneous(TransformFn g) { return EstimatorSpec(Homogeneous{std::move(g)}); }

  /// Heterogeneous spec with ν_i = E g_i(U).
  static EstimatorSpec heterogeneous(std::vector<TransformFn> gs) {
    std::vector<double> nus;
    nus.reserve(gs.size());
    for (const auto& g : gs) nus.push_back(g.nu());
    return heterogeneous(std::move(gs), std::move(nus));
  }

  /// Heterogeneous spec with explicit rescaling constants (e.g. adjusted ν).
  static EstimatorSpec heterogeneous(std::vector<TransformFn> gs, std::vector<double> nus) {
    if (gs.size() != nus.size()) {
      throw InputError("heterogeneous estimator: transforms and rescaling constants differ in length");
    }
    for (double nu : nus) {
      if (!(nu >= 0.0) || !std::isfinite(nu)) {
        throw InputError("heterogeneous estimator: rescaling constants must be finite and non-negative");
      }
    }
    return EstimatorSpec(Heterogeneous{std::move(gs), std::move(nus)});
  }

  static EstimatorSpec storey(double lambda) {
    (void)TransformFn::indicator(lambda);  // validates λ
    return EstimatorSpec(Storey{lambda});
  }
  static EstimatorSpec pc_new() { return EstimatorSpec(PcNew{}); }
  static EstimatorSpec pc_legacy() { return EstimatorSpec(PcLegacy{}); }
  static EstimatorSpec pc_zzd(double c = kZzdC500, double s = kZzdS500, std::size_t m_ref = kZzdM500) {
    if (!(c > 0.0) || !(s >= 0.0)) throw InputError("pc_zzd: C must be positive and s non-negative");
    return EstimatorSpec(PcZzd{c, s, m_ref});
  }
  static EstimatorSpec poly(double r, double lambda) {
    (void)TransformFn::power(r, lambda);
    return EstimatorSpec(Poly{r, lambda});
  }

  /// Convex combination Σ w_k m̂_k. Members must be in the guaranteed class
  /// (no legacy or ZZD estimators); weights non-negative summing to 1.
  static EstimatorSpec combination(std::vector<double> weights, std::vector<EstimatorSpec> members) {
    if (weights.empty() || weights.size() != members.size()) {
      throw InputError("combination: weights and members must be non-empty and of equal length");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InputError("combination: weights must be non-negative");
      total += w;
    }
    if (std::fabs(total - 1.0) > 1e-12) throw InputError("combination: weights must sum to 1");
    for (const auto& m : members) {
      if (!m.guaranteed()) {
        throw InputError("combination: member " + m.id() +
                         " has no plug-in control guarantee and cannot be combined");
      }
    }
    return EstimatorSpec(Combination{std::move(weights), std::move(members)});
  }

  const Variant& variant() const { return v_; }

  /// True for members of the guaranteed homogeneous/heterogeneous classes and
  /// their convex combinations.
  bool guaranteed() const {
    return !std::holds_alternative<PcLegacy>(v_) && !std::holds_alternative<PcZzd>(v_);
  }

  /// The single transform g when the spec is homogeneous (Storey, PC-new,
  /// Poly, explicit homogeneous).
  std::optional<TransformFn> homogeneous_transform() const {
    return std::visit(
        [](const auto& k) -> std::optional<TransformFn> {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Homogeneous>) {
            return k.g;
          } else if constexpr (std::is_same_v<K, Storey>) {
            return TransformFn::indicator(k.lambda);
          } else if constexpr (std::is_same_v<K, PcNew>) {
            return TransformFn::identity();
          } else if constexpr (std::is_same_v<K, Poly>) {
            return TransformFn::power(k.r, k.lambda);
          } else {
            return std::nullopt;
          }
        },
        v_);
  }

  std::string id() const;

 private:
  explicit EstimatorSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

inline std::string EstimatorSpec::id() const {
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return std::string(buf);
  };
  return std::visit(
      [&](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Homogeneous>) {
          return "homogeneous[" + k.g.describe() + "]";
        } else if constexpr (std::is_same_v<K, Heterogeneous>) {
          return "heterogeneous[" + std::to_string(k.gs.size()) + "]";
        } else if constexpr (std::is_same_v<K, Storey>) {
          return "storey(" + num(k.lambda) + ")";
        } else if constexpr (std::is_same_v<K, PcNew>) {
          return "pc_new";
        } else if constexpr (std::is_same_v<K, PcLegacy>) {
          return "pc_legacy";
        } else if constexpr (std::is_same_v<K, PcZzd>) {
          return "pc_zzd(" + num(k.c) + "," + num(k.s) + ")";
        } else if constexpr (std::is_same_v<K, Poly>) {
          return "poly(" + num(k.r) + "," + num(k.lambda) + ")";
        } else {
          std::string s = "combination[";
          for (std::size_t j = 0; j < k.members.size(); ++j) {
            if (j) s += ";";
            s += num(k.weights[j]) + "*" + k.members[j].id();
          }
          return s + "]";
        }
      },
      v_);
}

struct EstimateResult {
  double m0_hat = 0.0;
  double pi0_hat_raw = 0.0;
  /// π̂0 clamped to [0,1]; display only.
  double pi0_hat = 0.0;
  std::string estimator;
  /// Per-hypothesis contributions g_i(p_i)/ν_i (empty for legacy estimators
  /// and combinations).
  std::vector<double> contributions;
  std::vector<std::string> warnings;
};

namespace detail {

inline EstimateResult make_result(double m0, std::size_t m, std::string id) {
  EstimateResult r;
  r.m0_hat = m0;
  r.pi0_hat_raw = m > 0 ? m0 / static_cast<double>(m) : 0.0;
  r.pi0_hat = std::clamp(r.pi0_hat_raw, 0.0, 1.0);
  r.estimator = std::move(id);
  return r;
}

inline double sum_of(std::span<const double> p) {
  double s = 0.0;
  for (double x : p) s += x;
  return s;
}

}  // namespace detail

// Every estimator below sums left to right without compensation: plain
// floating-point addition is monotone in each addend, so the coordinatewise
// monotonicity of the estimators survives rounding.

/// 1/ν + Σ g(p_i)/ν.
inline double evaluate_homogeneous(const TransformFn& g, std::span<const double> p) {
  const double nu = g.nu();
  double s = 1.0 / nu;
  for (double x : p) s += g(x) / nu;
  return s;
}

/// 1/min ν_i + Σ g_i(p_i)/ν_i over indices with ν_i > 0.
inline double evaluate_heterogeneous(std::span<const TransformFn> gs, std::span<const double> nus,
                                     std::span<const double> p) {
  if (gs.size() != p.size() || nus.size() != p.size()) {
    throw InputError("heterogeneous estimator: length does not match number of p-values");
  }
  double min_nu = std::numeric_limits<double>::infinity();
  for (double nu : nus) {
    if (nu > 0.0) min_nu = std::min(min_nu, nu);
  }
  if (!std::isfinite(min_nu)) {
    throw InputError("heterogeneous estimator: all rescaling constants are zero");
  }
  double s = 1.0 / min_nu;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (nus[i] > 0.0) s += gs[i](p[i]) / nus[i];
  }
  return s;
}

inline double evaluate_pc_legacy(std::span<const double> p) {
  return std::min(static_cast<double>(p.size()), 2.0 * detail::sum_of(p));
}

inline double evaluate_pc_zzd(std::span<const double> p, double c, double s) {
  return c * std::min(static_cast<double>(p.size()), std::max(s, 2.0 * detail::sum_of(p)));
}

/// m̂0 for any spec, without diagnostics. Hot path for simulations.
inline double evaluate(const EstimatorSpec& spec, std::span<const double> p) {
  using S = EstimatorSpec;
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, S::Heterogeneous>) {
          return evaluate_heterogeneous(k.gs, k.nus, p);
        } else if constexpr (std::is_same_v<K, S::PcLegacy>) {
          return evaluate_pc_legacy(p);
        } else if constexpr (std::is_same_v<K, S::PcZzd>) {
          return evaluate_pc_zzd(p, k.c, k.s);
        } else if constexpr (std::is_same_v<K, S::Combination>) {
          double s = 0.0;
          for (std::size_t j = 0; j < k.members.size(); ++j) {
            s += k.weights[j] * evaluate(k.members[j], p);
          }
          return s;
        } else {
          return evaluate_homogeneous(*spec.homogeneous_transform(), p);
        }
      },
      spec.variant());
}

inline EstimateResult estimate_homogeneous(const TransformFn& g, const PValueVector& pvals) {
  auto r = detail::make_result(evaluate_homogeneous(g, pvals.values()), pvals.size(),
                               "homogeneous[" + g.describe() + "]");
  r.contributions.reserve(pvals.size());
  for (double x : pvals.values()) r.contributions.push_back(g(x) / g.nu());
  return r;
}

inline EstimateResult estimate_heterogeneous(std::span<const TransformFn> gs, std::span<const double> nus,
                                             const PValueVector& pvals) {
  auto r = detail::make_result(evaluate_heterogeneous(gs, nus, pvals.values()), pvals.size(),
                               "heterogeneous[" + std::to_string(gs.size()) + "]");
  r.contributions.reserve(pvals.size());
  for (std::size_t i = 0; i < pvals.size(); ++i) {
    r.contributions.push_back(nus[i] > 0.0 ? gs[i](pvals[i]) / nus[i] : 0.0);
  }
  return r;
}

/// Pounds-Cheng (2006), read as min(m, 2 Σ p_i). No plug-in guarantee.
inline EstimateResult estimate_pc_legacy(const PValueVector& pvals) {
  return detail::make_result(evaluate_pc_legacy(pvals.values()), pvals.size(), "pc_legacy");
}

/// C · min[m, max(s, 2 Σ p_i)]. Warns when m differs from the m the
/// constants were derived for.
inline EstimateResult estimate_pc_zzd(const PValueVector& pvals, double c, double s,
                                      std::size_t m_ref = kZzdM500) {
  auto r = detail::make_result(evaluate_pc_zzd(pvals.values(), c, s), pvals.size(),
                               EstimatorSpec::pc_zzd(c, s, m_ref).id());
  if (pvals.size() != m_ref) {
    r.warnings.push_back("pc_zzd constants were derived for m=" + std::to_string(m_ref) +
                         " but m=" + std::to_string(pvals.size()));
  }
  return r;
}

inline EstimateResult estimate(const EstimatorSpec& spec, const PValueVector& pvals) {
  using S = EstimatorSpec;
  return std::visit(
      [&](const auto& k) -> EstimateResult {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, S::Heterogeneous>) {
          return estimate_heterogeneous(k.gs, k.nus, pvals);
        } else if constexpr (std::is_same_v<K, S::PcLegacy>) {
          return estimate_pc_legacy(pvals);
        } else if constexpr (std::is_same_v<K, S::PcZzd>) {
          return estimate_pc_zzd(pvals, k.c, k.s, k.m_ref);
        } else if constexpr (std::is_same_v<K, S::Combination>) {
          return detail::make_result(evaluate(spec, pvals.values()), pvals.size(), spec.id());
        } else {
          auto r = estimate_homogeneous(*spec.homogeneous_transform(), pvals);
          r.estimator = spec.id();
          return r;
        }
      },
      spec.variant());
}

/// Two-member convex combination λ m̂1 + (1-λ) m̂2.
inline EstimatorSpec combine(const EstimatorSpec& first, const EstimatorSpec& second, double lambda) {
  return EstimatorSpec::combination({lambda, 1.0 - lambda}, {first, second});
}

/// Representation of a guaranteed estimator as heterogeneous (g_i, ν_i) for
/// m hypotheses. Combinations are reduced pairwise.
inline EstimatorSpec::Heterogeneous heterogeneous_form(const EstimatorSpec& spec, std::size_t m);

/// The heterogeneous estimator m̃0 with f_i = κ_i g_i + (1-κ_i) h_i and
/// ε_i = κ_i ν_i + (1-κ_i) μ_i, κ_i = λμ_i / (λμ_i + (1-λ)ν_i). Satisfies
/// m̃0 <= λ m̂1 + (1-λ) m̂2 pointwise, with equality for homogeneous members.
inline EstimatorSpec reduce_combination(const EstimatorSpec& first, const EstimatorSpec& second,
                                        double lambda, std::size_t m) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("combination weight must lie in [0,1]");
  const auto a = heterogeneous_form(first, m);
  const auto b = heterogeneous_form(second, m);
  std::vector<TransformFn> fs;
  std::vector<double> eps;
  fs.reserve(m);
  eps.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double nu = a.nus[i];
    const double mu = b.nus[i];
    if (!(nu > 0.0 && mu > 0.0)) {
      throw InputError("reduce_combination: members must have positive rescaling constants");
    }
    const double kappa = lambda * mu / (lambda * mu + (1.0 - lambda) * nu);
    fs.push_back(TransformFn::mixture({kappa, 1.0 - kappa}, {a.gs[i], b.gs[i]}));
    eps.push_back(kappa * nu + (1.0 - kappa) * mu);
  }
  return EstimatorSpec::heterogeneous(std::move(fs), std::move(eps));
}

inline EstimatorSpec::Heterogeneous heterogeneous_form(const EstimatorSpec& spec, std::size_t m) {
  using S = EstimatorSpec;
  if (const auto* h = std::get_if<S::Heterogeneous>(&spec.variant())) {
    if (h->gs.size() != m) throw InputError("heterogeneous estimator: length does not match m");
    return *h;
  }
  if (const auto* c = std::get_if<S::Combination>(&spec.variant())) {
    EstimatorSpec acc = c->members.front();
    double acc_weight = c->weights.front();
    for (std::size_t j = 1; j < c->members.size(); ++j) {
      const double total = acc_weight + c->weights[j];
      if (total <= 0.0) continue;
      acc = reduce_combination(acc, c->members[j], acc_weight / total, m);
      acc_weight = total;
    }
    return heterogeneous_form(acc, m);
  }
  if (auto g = spec.homogeneous_transform()) {
    return S::Heterogeneous{std::vector<TransformFn>(m, *g), std::vector<double>(m, g->nu())};
  }
  throw InputError("estimator " + spec.id() + " is outside the guaranteed class");
}

/// Bias of a homogeneous estimator under uniform nulls: (1 + m1 E g(X1)) / ν.
inline double bias_uniform(const TransformFn& g, std::size_t m, std::size_t m0, double ex1) {
  const double m1 = static_cast<double>(m - m0);
  return (1.0 + m1 * ex1) / g.nu();
}

/// Bias under super-uniform nulls: the uniform bias plus m0 (E g(X0) - ν) / ν.
inline double bias_superuniform(const TransformFn& g, std::size_t m, std::size_t m0, double ex0,
                                double ex1) {
  return bias_uniform(g, m, m0, ex1) + static_cast<double>(m0) * (ex0 - g.nu()) / g.nu();
}

}  // namespace pluginfdr
