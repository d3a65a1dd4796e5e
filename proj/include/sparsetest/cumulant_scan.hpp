#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>

#include "sparsetest/bell.hpp"
#include "sparsetest/errors.hpp"
#include "sparsetest/models.hpp"
#include "sparsetest/rational.hpp"

namespace sparsetest {

// Smallest even order j in (ell_start, max_order] with |kappa_j| >= threshold,
// or nullopt.  Requires a symmetric model with mean 0 and variance 1; odd
// cumulants are identically zero there, so only even orders are scanned.
// The transform runs in exact rational arithmetic whenever the model's
// moments allow it; the alternating sums cancel catastrophically in floats.
inline std::optional<int> find_nonzero_cumulant(const MarginalModel& model, int ell_start,
                                                int max_order, double threshold) {
  if (threshold <= 0.0) throw DomainError("threshold must be positive");
  if (!model.symmetric()) throw PreconditionError("cumulant gap scan requires a symmetric model");
  {
    const auto m = model.exact_moments(2);
    if (std::abs(m[0]) > 1e-12 || std::abs(m[1] - 1.0) > 1e-12)
      throw PreconditionError("cumulant gap scan requires mean 0 and variance 1");
  }
  if (max_order <= ell_start) return std::nullopt;
  if (max_order > kMaxTransformOrder)
    throw TruncationError("cumulant scan supports orders up to " + std::to_string(kMaxTransformOrder));

  int first_even = ell_start + 1;
  if (first_even % 2 != 0) ++first_even;

  if (auto mr = model.exact_moments_rational(max_order)) {
    const auto kappa = moments_to_cumulants<Rational>(*mr);
    const Rational thr = rational_from_double(threshold);
    for (int j = first_even; j <= max_order; j += 2) {
      Rational v = kappa[static_cast<std::size_t>(j - 1)];
      if (v < 0) v = -v;
      if (v >= thr) return j;
    }
    return std::nullopt;
  }
  const auto m = model.exact_moments(max_order);
  const auto kappa = moments_to_cumulants<double>(m);
  for (int j = first_even; j <= max_order; j += 2)
    if (std::abs(kappa[static_cast<std::size_t>(j - 1)]) >= threshold) return j;
  return std::nullopt;
}

struct MgfRootResult {
  std::optional<std::complex<double>> root;
  std::uint64_t evaluations = 0;
};

// Searches for a complex zero of M_X(z) = E[e^{zX}] with |z| <= radius
// (default 200 B^3 for support bound B).  For a symmetric model M_X is real
// on the imaginary axis, so a sign-change scan plus bisection finds axis
// roots; a winding-number sweep over circles catches the rest.  NotFound
// after the evaluation budget is reported, not thrown: for bounded symmetric
// non-degenerate X a root must exist in this disc.
inline MgfRootResult mgf_root_search(const MarginalModel& model, double radius = 0.0,
                                     double tol = 1e-8, std::uint64_t budget = 100000) {
  if (!model.symmetric()) throw PreconditionError("mgf root search requires a symmetric model");
  const double bound = model.support_bound();
  if (!std::isfinite(bound)) throw PreconditionError("mgf root search requires bounded support");
  if (bound <= 0.0) throw PreconditionError("mgf root search requires a non-degenerate model");
  const double b = std::max(1.0, bound);
  if (radius <= 0.0) radius = 200.0 * b * b * b;

  MgfRootResult result;
  const auto mgf_im = [&](double alpha) {
    ++result.evaluations;
    return model.mgf(std::complex<double>(0.0, alpha)).real();
  };

  // Imaginary-axis scan: E[cos(alpha X)] starts at 1, look for a sign change.
  const std::uint64_t grid = 8192;
  double prev_alpha = 0.0, prev_val = 1.0;
  for (std::uint64_t i = 1; i <= grid && result.evaluations < budget; ++i) {
    const double alpha = radius * static_cast<double>(i) / static_cast<double>(grid);
    const double val = mgf_im(alpha);
    if (val == 0.0 || (prev_val > 0.0) != (val > 0.0)) {
      double lo = prev_alpha, hi = alpha;
      double flo = prev_val;
      for (int it = 0; it < 200 && result.evaluations < budget; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = mgf_im(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((flo > 0.0) != (fm > 0.0)) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      const double alpha0 = 0.5 * (lo + hi);
      const std::complex<double> z0(0.0, alpha0);
      if (std::abs(model.mgf(z0)) <= tol) {
        result.root = z0;
        return result;
      }
    }
    prev_alpha = alpha;
    prev_val = val;
  }

  // Disc sweep: winding number of M along concentric circles, then damped
  // Newton from the minimum-|M| point of the first winding circle.
  constexpr int kCirclePoints = 1024;
  for (double r = radius / 256.0; r <= radius && result.evaluations < budget; r *= 1.5) {
    double winding = 0.0;
    double min_abs = kInf;
    std::complex<double> min_z;
    std::complex<double> prev = model.mgf(std::complex<double>(r, 0.0));
    ++result.evaluations;
    for (int i = 1; i <= kCirclePoints; ++i) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / kCirclePoints;
      const std::complex<double> z = std::polar(r, theta);
      const std::complex<double> v = model.mgf(z);
      ++result.evaluations;
      winding += std::arg(v / prev);
      prev = v;
      if (std::abs(v) < min_abs) {
        min_abs = std::abs(v);
        min_z = z;
      }
    }
    if (std::abs(winding) > std::numbers::pi) {
      std::complex<double> z = min_z;
      for (int it = 0; it < 500 && result.evaluations < budget; ++it) {
        const std::complex<double> f = model.mgf(z);
        ++result.evaluations;
        if (std::abs(f) <= tol && std::abs(z) <= radius) {
          result.root = z;
          return result;
        }
        const std::complex<double> df = model.mgf_derivative(z);
        if (std::abs(df) == 0.0) break;
        std::complex<double> step = f / df;
        if (std::abs(step) > 0.25 * r) step *= 0.25 * r / std::abs(step);
        z -= step;
      }
    }
  }
  return result;
}

}  // namespace sparsetest
