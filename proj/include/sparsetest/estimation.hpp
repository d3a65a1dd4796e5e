#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sparsetest/bell.hpp"
#include "sparsetest/errors.hpp"
#include "sparsetest/numeric.hpp"

namespace sparsetest {

// Empirical raw moment sum(y_i^l) / m with compensated summation.  When the
// powers overflow the double range the sum is redone in log-magnitude + sign
// form.
inline double empirical_moment(std::span<const double> y, int ell) {
  if (y.empty()) throw EmptyVector("empirical moment of an empty sample");
  if (ell < 1) throw DomainError("moment order must be >= 1");
  CompensatedSum acc;
  bool overflow = false;
  for (double v : y) {
    const double term = pow_int(v, static_cast<std::uint64_t>(ell));
    if (!std::isfinite(term)) {
      overflow = true;
      break;
    }
    acc.add(term);
  }
  if (!overflow) return acc.value() / static_cast<double>(y.size());

  OnlineLogSumExp positive, negative;
  for (double v : y) {
    if (v == 0.0) continue;
    const double lg = static_cast<double>(ell) * std::log(std::abs(v));
    const bool neg = (v < 0.0) && (ell % 2 == 1);
    (neg ? negative : positive).add(lg);
  }
  const double lp = positive.value(), ln = negative.value();
  const double mx = std::max(lp, ln);
  const double diff = std::exp(lp - mx) - std::exp(ln - mx);
  const double result = (diff == 0.0) ? 0.0
                                      : ((diff > 0.0 ? 1.0 : -1.0) *
                                         std::exp(mx + std::log(std::abs(diff)) - std::log(static_cast<double>(y.size()))));
  if (!std::isfinite(result)) throw NumericalError("empirical moment overflows even in log form");
  return result;
}

// Plug-in cumulant estimator: estimate raw moments through order ell, force
// odd ones to exactly zero when the sample is symmetrized, then run the
// moment -> cumulant transform and take order ell.
inline double empirical_cumulant(std::span<const double> y, int ell, bool symmetric) {
  if (y.empty()) throw EmptyVector("empirical cumulant of an empty sample");
  if (ell < 1 || ell > kMaxTransformOrder) throw DomainError("cumulant order out of range");
  if (symmetric && ell % 2 == 1) return 0.0;  // contract, not an error
  std::vector<double> m(static_cast<std::size_t>(ell), 0.0);
  for (int j = 1; j <= ell; ++j) {
    if (symmetric && j % 2 == 1) continue;
    m[static_cast<std::size_t>(j - 1)] = empirical_moment(y, j);
  }
  const auto kappa = moments_to_cumulants<double>(m);
  return kappa[static_cast<std::size_t>(ell - 1)];
}

struct PowerSumEstimate {
  int order = 0;
  double value = 0.0;  // estimate of sum_i w_i^order
  std::size_t samples_used = 0;
  double kappa_x = 0.0;
  double kappa_eta = 0.0;
};

// M_l = (kappa_l(y) - kappa_l(eta)) / kappa_l(X); the labels must come from a
// symmetrized batch and the cumulants must refer to that symmetrized scale.
inline PowerSumEstimate estimate_power_sum(std::span<const double> y, int ell, double kappa_x,
                                           double kappa_eta) {
  if (ell < 2 || ell % 2 != 0) throw DomainError("power-sum order must be even and >= 2");
  if (kappa_x == 0.0)
    throw DegenerateCumulant("kappa_" + std::to_string(ell) +
                             "(X) = 0; power sums are invisible at this order");
  PowerSumEstimate est;
  est.order = ell;
  est.samples_used = y.size();
  est.kappa_x = kappa_x;
  est.kappa_eta = kappa_eta;
  est.value = (empirical_cumulant(y, ell, /*symmetric=*/true) - kappa_eta) / kappa_x;
  return est;
}

struct Norm2Estimate {
  double value = 0.0;  // estimate of ||w||_2^2
  bool clamped = false;
};

inline Norm2Estimate estimate_norm2(std::span<const double> y, double noise_second_moment) {
  Norm2Estimate est;
  est.value = empirical_moment(y, 2) - noise_second_moment;
  if (est.value < 0.0) {
    est.value = 0.0;
    est.clamped = true;
  }
  return est;
}

// min{1, max{0, M}^{1/l}} computed in log space.
inline double linf_extract(double m_ell, int ell) {
  if (ell < 2 || ell % 2 != 0) throw DomainError("extraction order must be even and >= 2");
  if (m_ell <= 0.0) return 0.0;
  return std::exp(std::min(0.0, std::log(m_ell) / static_cast<double>(ell)));
}

// Same for a power sum supplied as log(M); supports orders where M itself
// underflows the double range.
inline double linf_extract_log(double log_m_ell, int ell) {
  if (ell < 2 || ell % 2 != 0) throw DomainError("extraction order must be even and >= 2");
  if (log_m_ell == -kInf) return 0.0;
  return std::exp(std::min(0.0, log_m_ell / static_cast<double>(ell)));
}

// Sample-size recommendation for estimating sum_i w_i^l to additive eps with
// confidence 1 - delta, given |kappa_l(X)| >= tau and ||w||_2 <= C:
//     m = ceil( 64 * (2l)^{4l} * (m_{2l}(X) + m_{2l}(eta)) * C^{2l} / (delta eps^2 tau^2) ).
// The exponents concretize a variance bound of the plug-in moment estimator;
// the leading constant is a heuristic, not a proved one.  Values beyond the
// integer range saturate.
inline std::uint64_t sample_size_power_sum(int ell, double eps, double delta, double tau, double C,
                                           double m2l_x, double m2l_eta) {
  if (ell < 2 || ell % 2 != 0) throw DomainError("order must be even and >= 2");
  if (eps <= 0.0 || delta <= 0.0 || tau <= 0.0) throw DomainError("eps, delta, tau must be positive");
  if (C <= 0.0) throw DomainError("norm bound C must be positive");
  const double l2 = 2.0 * static_cast<double>(ell);
  const double value = 64.0 * std::pow(l2, l2 * 2.0) * (m2l_x + m2l_eta) *
                       std::pow(C, l2) / (delta * eps * eps * tau * tau);
  constexpr double kMax = 9.0e18;
  if (!(value < kMax)) return static_cast<std::uint64_t>(kMax);
  return static_cast<std::uint64_t>(std::ceil(value));
}

}  // namespace sparsetest
