#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "sparsetest/errors.hpp"

namespace sparsetest {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier-compensated accumulator; the running correction keeps long
// alternating sums accurate to ~1 ulp of the true result.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

// Integer power by squaring.
inline double pow_int(double base, std::uint64_t e) {
  double acc = 1.0, b = base;
  while (e) {
    if (e & 1u) acc *= b;
    b *= b;
    e >>= 1u;
  }
  return acc;
}

inline std::uint64_t binomial_u64(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (unsigned i = 1; i <= k; ++i) {
    c = c / i * (n - k + i) + c % i * (n - k + i) / i;
  }
  return c;
}

inline double log_sum_exp(std::span<const double> xs) {
  double mx = -kInf;
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  CompensatedSum s;
  for (double x : xs) s.add(std::exp(x - mx));
  return mx + std::log(s.value());
}

// Streaming log-sum-exp; processes terms one at a time so callers never
// materialize the full list of log-weights.
class OnlineLogSumExp {
 public:
  void add(double x) {
    if (x == -kInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
    ++count_;
  }
  double value() const {
    if (count_ == 0) return -kInf;
    return max_ + std::log(sum_);
  }
  std::uint64_t count() const { return count_; }

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
  std::uint64_t count_ = 0;
};

// Adaptive Simpson on [a, b] with absolute tolerance.
namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double fa, double b,
                      double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa,
                                   double b, double fb, double m, double fm, double whole,
                                   double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  const double delta = left + right - whole;
  if (depth <= 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", std::abs(delta));
    throw NumericalError(std::string("adaptive quadrature failed to converge; residual ") + buf);
  }
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-12, int max_depth = 48) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = detail::simpson(f, a, fa, b, fb, m, fm);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
}

namespace detail {
inline double binomial_cdf(std::uint64_t successes, std::uint64_t n, double p) {
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return successes >= n ? 1.0 : 0.0;
  CompensatedSum acc;
  for (std::uint64_t i = 0; i <= successes; ++i) {
    const double lg = std::lgamma(static_cast<double>(n) + 1.0) -
                      std::lgamma(static_cast<double>(i) + 1.0) -
                      std::lgamma(static_cast<double>(n - i) + 1.0) +
                      static_cast<double>(i) * std::log(p) +
                      static_cast<double>(n - i) * std::log1p(-p);
    acc.add(std::exp(lg));
  }
  return std::min(1.0, acc.value());
}
}  // namespace detail

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 1.0;
};

// Exact (Clopper-Pearson) binomial confidence interval for successes/n.
inline ConfidenceInterval clopper_pearson(std::uint64_t successes, std::uint64_t n,
                                          double confidence = 0.95) {
  if (n == 0) throw DomainError("confidence interval needs n >= 1");
  const double alpha = 1.0 - confidence;
  ConfidenceInterval ci;
  if (successes == 0) {
    ci.lo = 0.0;
  } else {
    double lo = 0.0, hi = static_cast<double>(successes) / static_cast<double>(n);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      // lower bound: largest p with P(X >= s) <= alpha/2
      if (1.0 - detail::binomial_cdf(successes - 1, n, mid) <= 0.5 * alpha) lo = mid;
      else hi = mid;
    }
    ci.lo = lo;
  }
  if (successes == n) {
    ci.hi = 1.0;
  } else {
    double lo = static_cast<double>(successes) / static_cast<double>(n), hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      // upper bound: smallest p with P(X <= s) <= alpha/2
      if (detail::binomial_cdf(successes, n, mid) <= 0.5 * alpha) hi = mid;
      else lo = mid;
    }
    ci.hi = hi;
  }
  return ci;
}

// Two-sample Kolmogorov-Smirnov test; returns true when the null (same
// distribution) is NOT rejected at the given level.  Conservative for
// discrete data, which only makes acceptance stricter here.
inline bool ks_two_sample_accepts(std::vector<double> a, std::vector<double> b, double level) {
  if (a.empty() || b.empty()) throw DomainError("ks test needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // critical value c(level) * sqrt((na + nb) / (na * nb))
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  return d <= c * std::sqrt((na + nb) / (na * nb));
}

// Fixed-shape tree reduction; the summation order depends only on the length,
// which keeps multi-threaded callers bit-reproducible.
inline double tree_sum(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  std::vector<double> level(xs.begin(), xs.end());
  while (level.size() > 1) {
    std::size_t half = (level.size() + 1) / 2;
    for (std::size_t i = 0; i + half < level.size(); ++i) level[i] += level[i + half];
    level.resize(half);
  }
  return level[0];
}

}  // namespace sparsetest
