#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "error.hpp"
#include "pvalue_model.hpp"

namespace pluginfdr {

struct BHResult {
  std::size_t k_hat = 0;
  /// k̂ α / denominator; 0 when nothing is rejected.
  double threshold = 0.0;
  /// Rejected hypothesis indices, ascending.
  std::vector<std::size_t> rejected;
  double denominator = 0.0;
  double alpha = 0.0;
};

/// Step-up: k̂ = max{ℓ : p_(ℓ) <= ℓ α / denominator}, rejecting every
/// hypothesis with p <= p_(k̂). denominator = m gives plain BH; an estimate
/// m̂0 gives the plug-in procedure. Ordering is stable on (p, index).
inline BHResult bh_stepup(std::span<const double> p, double alpha, double denominator) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
  if (!(denominator > 0.0)) throw InputError("BH denominator must be positive");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  BHResult out;
  out.alpha = alpha;
  out.denominator = denominator;
  for (std::size_t l = m; l >= 1; --l) {
    if (p[order[l - 1]] <= static_cast<double>(l) * alpha / denominator) {
      out.k_hat = l;
      break;
    }
  }
  if (out.k_hat == 0) return out;
  out.threshold = static_cast<double>(out.k_hat) * alpha / denominator;
  out.rejected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(out.k_hat));
  std::sort(out.rejected.begin(), out.rejected.end());
  return out;
}

inline BHResult bh_stepup(const PValueVector& pvals, double alpha, double denominator) {
  return bh_stepup(pvals.values(), alpha, denominator);
}

/// Plain BH at level alpha.
inline BHResult bh(std::span<const double> p, double alpha) {
  return bh_stepup(p, alpha, static_cast<double>(p.size()));
}

struct ErrorMetrics {
  /// False rejections / max(1, rejections).
  double fdp = 0.0;
  /// True rejections / max(1, m1).
  double power = 0.0;
  std::size_t false_rejections = 0;
  std::size_t true_rejections = 0;
};

inline ErrorMetrics evaluate_rejections(const std::vector<bool>& is_null, const BHResult& result) {
  if (is_null.empty()) throw InputError("error metrics need truth labels");
  ErrorMetrics e;
  for (std::size_t i : result.rejected) {
    if (is_null.at(i)) {
      ++e.false_rejections;
    } else {
      ++e.true_rejections;
    }
  }
  const std::size_t m1 = static_cast<std::size_t>(std::count(is_null.begin(), is_null.end(), false));
  const std::size_t r = result.rejected.size();
  e.fdp = static_cast<double>(e.false_rejections) / static_cast<double>(std::max<std::size_t>(1, r));
  e.power = static_cast<double>(e.true_rejections) / static_cast<double>(std::max<std::size_t>(1, m1));
  return e;
}

inline ErrorMetrics evaluate_rejections(const PValueVector& pvals, const BHResult& result) {
  if (!pvals.has_labels()) throw InputError("error metrics need truth labels");
  return evaluate_rejections(pvals.is_null(), result);
}

}  // namespace pluginfdr
