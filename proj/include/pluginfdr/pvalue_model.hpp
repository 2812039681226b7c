#pragma once

// Null distributions of p-values, monotone transformations g of [0,1] with
// their uniform rescaling constants, and the mid-p / randomized transforms of
// discrete p-values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "numeric.hpp"

namespace pluginfdr {

/// Absolute tolerance used to match an observed p-value to a support atom.
inline constexpr double kAtomTolerance = 1e-12;

/// A non-decreasing map g: [0,1] -> [0,1] with E g(U) > 0 for U uniform.
///
/// Kinds:
///  - indicator(λ):   g(u) = 1{u > λ}
///  - power(r, λ):    g(u) = u^r 1{u > λ}
///  - table(b, v):    right-continuous step function, g(u) = v_j on
///                    [b_j, b_{j+1}), g(u) = 0 below b_0
///  - mixture(w, gs): convex combination Σ w_k g_k
///
/// The rescaling constant ν = E g(U) is computed in closed form at
/// construction; a transform with ν = 0 is rejected.
class TransformFn {
 public:
  struct Indicator {
    double lambda = 0.0;
  };
  struct Power {
    double r = 1.0;
    double lambda = 0.0;
  };
  struct Table {
    std::vector<double> breakpoints;
    std::vector<double> values;
  };
  struct Mixture {
    std::vector<double> weights;
    std::vector<TransformFn> parts;
  };
  using Kind = std::variant<Indicator, Power, Table, Mixture>;

  static TransformFn indicator(double lambda) {
    check_lambda(lambda);
    return TransformFn(Indicator{lambda});
  }

  static TransformFn power(double r, double lambda) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw InputError("power transform: degree r must be a finite non-negative number");
    }
    check_lambda(lambda);
    return TransformFn(Power{r, lambda});
  }

  static TransformFn identity() { return power(1.0, 0.0); }

  static TransformFn table(std::vector<double> breakpoints, std::vector<double> values) {
    if (breakpoints.empty() || breakpoints.size() != values.size()) {
      throw InputError("table transform: breakpoints and values must be non-empty and of equal length");
    }
    for (std::size_t j = 0; j < breakpoints.size(); ++j) {
      if (!(breakpoints[j] >= 0.0 && breakpoints[j] <= 1.0)) {
        throw InputError("table transform: breakpoints must lie in [0,1]");
      }
      if (!(values[j] >= 0.0 && values[j] <= 1.0)) {
        throw InputError("table transform: values must lie in [0,1]");
      }
      if (j > 0 && !(breakpoints[j] > breakpoints[j - 1])) {
        throw InputError("table transform: breakpoints must be strictly increasing");
      }
      if (j > 0 && values[j] < values[j - 1]) {
        throw InputError("table transform: values must be non-decreasing");
      }
    }
    return TransformFn(Table{std::move(breakpoints), std::move(values)});
  }

  static TransformFn mixture(std::vector<double> weights, std::vector<TransformFn> parts) {
    if (weights.empty() || weights.size() != parts.size()) {
      throw InputError("mixture transform: weights and parts must be non-empty and of equal length");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InputError("mixture transform: weights must be non-negative");
      total += w;
    }
    if (std::fabs(total - 1.0) > 1e-12) {
      throw InputError("mixture transform: weights must sum to 1");
    }
    return TransformFn(Mixture{std::move(weights), std::move(parts)});
  }

  double operator()(double u) const {
    return std::visit([u](const auto& k) { return eval(k, u); }, kind_);
  }

  /// ν = E g(U).
  double nu() const { return nu_; }

  /// E g(U)^2 when available in closed form (all kinds but mixture).
  std::optional<double> uniform_second_moment() const {
    return std::visit([](const auto& k) { return second_moment(k); }, kind_);
  }

  /// Points in (0,1) where g may jump.
  std::vector<double> discontinuities() const {
    std::vector<double> out;
    collect_discontinuities(out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  const Kind& kind() const { return kind_; }

  /// Short human-readable label, e.g. "power(2,0.5)".
  std::string describe() const;

 private:
  explicit TransformFn(Kind k) : kind_(std::move(k)) {
    nu_ = std::visit([](const auto& x) { return compute_nu(x); }, kind_);
    if (!(nu_ > 0.0)) {
      throw InputError("transform has E g(U) = 0 and is not admissible");
    }
  }

  static void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda < 1.0)) {
      throw InputError("threshold lambda must lie in [0,1)");
    }
  }

  static double eval(const Indicator& k, double u) { return u > k.lambda ? 1.0 : 0.0; }

  static double eval(const Power& k, double u) {
    if (!(u > k.lambda)) return 0.0;
    if (k.r == 0.0) return 1.0;
    if (k.r == 1.0) return u;
    if (k.r == 2.0) return u * u;
    return std::pow(u, k.r);
  }

  static double eval(const Table& k, double u) {
    const auto it = std::upper_bound(k.breakpoints.begin(), k.breakpoints.end(), u);
    if (it == k.breakpoints.begin()) return 0.0;
    return k.values[static_cast<std::size_t>(it - k.breakpoints.begin()) - 1];
  }

  static double eval(const Mixture& k, double u) {
    double s = 0.0;
    for (std::size_t j = 0; j < k.parts.size(); ++j) s += k.weights[j] * k.parts[j](u);
    return s;
  }

  static double compute_nu(const Indicator& k) { return 1.0 - k.lambda; }

  static double compute_nu(const Power& k) {
    return (1.0 - std::pow(k.lambda, k.r + 1.0)) / (k.r + 1.0);
  }

  static double compute_nu(const Table& k) {
    CompensatedSum s;
    for (std::size_t j = 0; j < k.values.size(); ++j) {
      const double right = j + 1 < k.breakpoints.size() ? k.breakpoints[j + 1] : 1.0;
      s.add(k.values[j] * (right - k.breakpoints[j]));
    }
    return s.value();
  }

  static double compute_nu(const Mixture& k) {
    double s = 0.0;
    for (std::size_t j = 0; j < k.parts.size(); ++j) s += k.weights[j] * k.parts[j].nu();
    return s;
  }

  static std::optional<double> second_moment(const Indicator& k) { return 1.0 - k.lambda; }

  static std::optional<double> second_moment(const Power& k) {
    const double e = 2.0 * k.r + 1.0;
    return (1.0 - std::pow(k.lambda, e)) / e;
  }

  static std::optional<double> second_moment(const Table& k) {
    CompensatedSum s;
    for (std::size_t j = 0; j < k.values.size(); ++j) {
      const double right = j + 1 < k.breakpoints.size() ? k.breakpoints[j + 1] : 1.0;
      s.add(k.values[j] * k.values[j] * (right - k.breakpoints[j]));
    }
    return s.value();
  }

  static std::optional<double> second_moment(const Mixture&) { return std::nullopt; }

  void collect_discontinuities(std::vector<double>& out) const {
    std::visit(
        [&out](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Indicator> || std::is_same_v<K, Power>) {
            if (k.lambda > 0.0) out.push_back(k.lambda);
          } else if constexpr (std::is_same_v<K, Table>) {
            for (double b : k.breakpoints) {
              if (b > 0.0 && b < 1.0) out.push_back(b);
            }
          } else {
            for (const auto& p : k.parts) p.collect_discontinuities(out);
          }
        },
        kind_);
  }

  Kind kind_;
  double nu_ = 0.0;
};

inline std::string TransformFn::describe() const {
  auto num = [](double x) {
    std::string s = std::to_string(x);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  return std::visit(
      [&](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Indicator>) {
          return "indicator(" + num(k.lambda) + ")";
        } else if constexpr (std::is_same_v<K, Power>) {
          return "power(" + num(k.r) + "," + num(k.lambda) + ")";
        } else if constexpr (std::is_same_v<K, Table>) {
          return "table(" + std::to_string(k.values.size()) + " steps)";
        } else {
          return "mixture(" + std::to_string(k.parts.size()) + " parts)";
        }
      },
      kind_);
}

/// Finite-support null CDF of one p-value: atoms a_1 < ... < a_n in (0,1]
/// with cumulative probabilities cdf_j = P(p <= a_j), cdf_n = 1.
class DiscreteNullDistribution {
 public:
  DiscreteNullDistribution(std::vector<double> atoms, std::vector<double> cdf)
      : atoms_(std::move(atoms)), cdf_(std::move(cdf)) {
    if (atoms_.empty() || atoms_.size() != cdf_.size()) {
      throw InputError("support: atoms and cdf must be non-empty and of equal length");
    }
    if (std::fabs(cdf_.back() - 1.0) > 1e-12) {
      throw InputError("support: last cdf entry must equal 1");
    }
    cdf_.back() = 1.0;
    masses_.resize(atoms_.size());
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
      if (!(atoms_[j] > 0.0 && atoms_[j] <= 1.0)) {
        throw InputError("support: atoms must lie in (0,1]");
      }
      if (j > 0 && !(atoms_[j] > atoms_[j - 1])) {
        throw InputError("support: atoms must be strictly increasing");
      }
      masses_[j] = cdf_[j] - (j > 0 ? cdf_[j - 1] : 0.0);
      if (!(masses_[j] > 0.0)) {
        throw InputError("support: every atom must carry positive mass");
      }
    }
  }

  /// Builds the distribution from point masses (must sum to 1 within 1e-12).
  static DiscreteNullDistribution from_masses(std::vector<double> atoms,
                                              std::span<const double> masses) {
    if (atoms.size() != masses.size()) {
      throw InputError("support: atoms and masses must have equal length");
    }
    std::vector<double> cdf(masses.size());
    CompensatedSum running;
    for (std::size_t j = 0; j < masses.size(); ++j) {
      running.add(masses[j]);
      cdf[j] = running.value();
    }
    return DiscreteNullDistribution(std::move(atoms), std::move(cdf));
  }

  /// p ≡ 1.
  static DiscreteNullDistribution point_mass_at_one() { return {{1.0}, {1.0}}; }

  std::size_t size() const { return atoms_.size(); }
  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> cdf() const { return cdf_; }
  std::span<const double> masses() const { return masses_; }

  /// Index of the atom within kAtomTolerance of p, if any.
  std::optional<std::size_t> find_atom(double p) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), p - kAtomTolerance);
    if (it != atoms_.end() && std::fabs(*it - p) <= kAtomTolerance) {
      return static_cast<std::size_t>(it - atoms_.begin());
    }
    return std::nullopt;
  }

  /// Null point mass P(p = value); zero for value = 0. Throws if value is
  /// neither 0 nor an atom.
  double mass_at(double value) const {
    if (const auto j = find_atom(value)) return masses_[*j];
    if (value == 0.0) return 0.0;
    throw InputError("p-value " + std::to_string(value) + " is not an atom of its null support");
  }

  /// F(t) = P(p <= t).
  double cdf_at(double t) const {
    const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), t);
    if (it == atoms_.begin()) return 0.0;
    return cdf_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
  }

  double mean() const {
    CompensatedSum s;
    for (std::size_t j = 0; j < atoms_.size(); ++j) s.add(atoms_[j] * masses_[j]);
    return s.value();
  }

  friend bool operator==(const DiscreteNullDistribution& a, const DiscreteNullDistribution& b) {
    return a.atoms_ == b.atoms_ && a.cdf_ == b.cdf_;
  }

 private:
  std::vector<double> atoms_;
  std::vector<double> cdf_;
  std::vector<double> masses_;
};

/// Observed p-values, optionally with one null support per hypothesis and
/// truth labels (simulation only).
class PValueVector {
 public:
  PValueVector() = default;

  explicit PValueVector(std::vector<double> values,
                        std::vector<DiscreteNullDistribution> supports = {},
                        std::vector<bool> is_null = {})
      : values_(std::move(values)), supports_(std::move(supports)), is_null_(std::move(is_null)) {
    if (!supports_.empty() && supports_.size() != values_.size()) {
      throw InputError("number of supports does not match number of p-values");
    }
    if (!is_null_.empty() && is_null_.size() != values_.size()) {
      throw InputError("number of truth labels does not match number of p-values");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double p = values_[i];
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InputError("p-value at index " + std::to_string(i) + " is outside [0,1]");
      }
      if (!supports_.empty() && p != 0.0 && !supports_[i].find_atom(p)) {
        throw InputError("p-value at index " + std::to_string(i) + " is not an atom of its support");
      }
    }
  }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool has_supports() const { return !supports_.empty(); }
  const std::vector<DiscreteNullDistribution>& supports() const { return supports_; }

  bool has_labels() const { return !is_null_.empty(); }
  const std::vector<bool>& is_null() const { return is_null_; }
  std::size_t null_count() const {
    return static_cast<std::size_t>(std::count(is_null_.begin(), is_null_.end(), true));
  }

  /// Copy with p_i replaced by `value` (0 or an atom of the i-th support).
  PValueVector with_value(std::size_t i, double value) const {
    PValueVector out = *this;
    if (!(value >= 0.0 && value <= 1.0)) throw InputError("replacement p-value outside [0,1]");
    out.values_.at(i) = value;
    return out;
  }

 private:
  std::vector<double> values_;
  std::vector<DiscreteNullDistribution> supports_;
  std::vector<bool> is_null_;
};

inline double nu_uniform(const TransformFn& g) { return g.nu(); }

/// ν^adj = E_{p ~ F} g(p) = Σ_j g(a_j) mass_j. May be zero.
inline double nu_adjusted(const TransformFn& g, const DiscreteNullDistribution& f) {
  CompensatedSum s;
  const auto atoms = f.atoms();
  const auto masses = f.masses();
  for (std::size_t j = 0; j < f.size(); ++j) s.add(g(atoms[j]) * masses[j]);
  return s.value();
}

/// Mid-p value of an observed p with null point mass `mass`.
inline double mid_value(double p, double mass) { return p - 0.5 * mass; }

struct MidTransform {
  /// mid_atoms[j] is the image of atom j of the input distribution.
  std::vector<double> mid_atoms;
  /// Law of the mid-p value under the null (same masses, sorted and merged).
  DiscreteNullDistribution distribution;
};

inline MidTransform mid_transform(const DiscreteNullDistribution& f) {
  const auto atoms = f.atoms();
  const auto masses = f.masses();
  std::vector<double> mid(f.size());
  std::vector<std::pair<double, double>> law(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    mid[j] = mid_value(atoms[j], masses[j]);
    if (!(mid[j] > 0.0)) {
      throw InputError("mid-p transform produced a non-positive atom (support is not super-uniform)");
    }
    law[j] = {mid[j], masses[j]};
  }
  std::sort(law.begin(), law.end());
  std::vector<double> merged_atoms;
  std::vector<double> merged_masses;
  for (const auto& [a, w] : law) {
    if (!merged_atoms.empty() && a == merged_atoms.back()) {
      merged_masses.back() += w;
    } else {
      merged_atoms.push_back(a);
      merged_masses.push_back(w);
    }
  }
  return {std::move(mid), DiscreteNullDistribution::from_masses(std::move(merged_atoms), merged_masses)};
}

/// Randomized p-value r(p, u) = p - u P(p = observed). r(0, u) = 0.
inline double randomize(double p, const DiscreteNullDistribution& f, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw InputError("randomization variate must lie in [0,1]");
  return p - u * f.mass_at(p);
}

/// SuperUnif: F(a_j) <= a_j at every atom.
inline bool check_superuniform(const DiscreteNullDistribution& f) {
  const auto atoms = f.atoms();
  const auto cdf = f.cdf();
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (cdf[j] > atoms[j]) return false;
  }
  return true;
}

}  // namespace pluginfdr
