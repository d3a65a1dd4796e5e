#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sparsetest/batch.hpp"
#include "sparsetest/cumulant_scan.hpp"
#include "sparsetest/estimation.hpp"
#include "sparsetest/errors.hpp"
#include "sparsetest/models.hpp"
#include "sparsetest/numeric.hpp"

namespace sparsetest {

// Fraction of the l2 mass of w outside its k largest-magnitude coordinates;
// equals min over k-sparse w' of ||w - w'||_2 / ||w||_2.
inline double dist_to_k_sparse(const WeightVector& w, int k) {
  const std::size_t n = w.size();
  if (k < 0 || static_cast<std::size_t>(k) >= n) throw DomainError("need 0 <= k < n");
  if (w.norm2() == 0.0) throw DomainError("distance to sparsity is undefined for w = 0");
  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(w[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  CompensatedSum tail;
  for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) tail.add(mags[i] * mags[i]);
  return std::sqrt(std::max(0.0, tail.value())) / w.norm2();
}

enum class ScheduleMode { PaperExact, Practical };

// Cumulant orders l_1 > ... > l_k and error parameters delta_1 < ... < delta_k
// used by the general tester.  PaperExact follows the recursion
//   delta_k = eps / (12 k),  l_k = smallest even order >= 100 / delta_k^3,
//   delta_i = (delta_{i+1} / (5 l_{i+1}))^{l_{i+1}} / (2 k),
// whose orders explode far beyond anything runnable; such schedules are
// returned with feasible = false and saturated order values.  Practical mode
// takes user orders and validates that the cumulants there are nonzero.
struct Schedule {
  int k = 0;
  std::vector<std::int64_t> orders;
  std::vector<double> deltas;        // 0 when the value underflows doubles
  std::vector<double> log10_deltas;  // always meaningful
  std::vector<double> kappas;        // kappa_{l_i}(X); 0 when unverified
  double tau = 0.0;                  // min |kappa_{l_i}(X)| over verified orders
  ScheduleMode mode = ScheduleMode::Practical;
  bool feasible = false;
};

struct ScheduleOptions {
  double kappa_floor = 1e-9;  // |kappa| below this counts as zero
  int scan_max = kMaxTransformOrder;
};

namespace detail {

inline double kappa_at_order(const MarginalModel& model, int ell) {
  return model.known_cumulants(ell)[static_cast<std::size_t>(ell - 1)];
}

inline std::int64_t ceil_even(double target) {
  if (target >= 9.0e18) return std::numeric_limits<std::int64_t>::max();
  auto v = static_cast<std::int64_t>(std::ceil(target));
  if (v < 2) v = 2;
  if (v % 2 != 0) ++v;
  return v;
}

}  // namespace detail

inline Schedule build_schedule(int k, double eps, double C, const MarginalModel& model,
                               ScheduleMode mode, const std::vector<std::int64_t>& user_orders = {},
                               const ScheduleOptions& opts = {}) {
  if (k < 1) throw DomainError("sparsity k must be >= 1");
  if (eps <= 0.0 || eps > 1.0) throw DomainError("eps must be in (0, 1]");
  if (C < 1.0) throw DomainError("norm promise C must be >= 1");
  (void)C;
  // Precondition for either mode: some even cumulant past order 2 must be
  // usable, otherwise the marginal is (cumulant-wise) a Gaussian and no
  // order can carry a power sum.
  {
    const auto kappa = model.known_cumulants(opts.scan_max);
    bool usable = false;
    for (int ell = 4; ell <= opts.scan_max && !usable; ell += 2)
      usable = std::abs(kappa[static_cast<std::size_t>(ell - 1)]) >= opts.kappa_floor;
    if (!usable)
      throw GaussianObstruction("no even cumulant of order in [4, " +
                                std::to_string(opts.scan_max) + "] reaches " +
                                std::to_string(opts.kappa_floor));
  }

  Schedule sched;
  sched.k = k;
  sched.mode = mode;

  if (mode == ScheduleMode::Practical) {
    if (static_cast<int>(user_orders.size()) != k)
      throw ValidationError("practical schedule needs exactly k orders");
    for (int i = 0; i < k; ++i) {
      const std::int64_t ell = user_orders[static_cast<std::size_t>(i)];
      if (ell < 2 || ell % 2 != 0) throw ValidationError("schedule orders must be even and >= 2");
      if (ell > opts.scan_max) throw ValidationError("schedule order exceeds the transform cap");
      if (i > 0 && ell >= user_orders[static_cast<std::size_t>(i - 1)])
        throw ValidationError("schedule orders must be strictly decreasing");
    }
    sched.orders = user_orders;
    sched.tau = kInf;
    for (std::int64_t ell : user_orders) {
      const double kappa = detail::kappa_at_order(model, static_cast<int>(ell));
      if (std::abs(kappa) < opts.kappa_floor)
        throw GaussianObstruction("kappa_" + std::to_string(ell) +
                                  "(X) vanishes; this order cannot carry a power sum");
      sched.kappas.push_back(kappa);
      sched.tau = std::min(sched.tau, std::abs(kappa));
    }
    // Largest deltas for which each order satisfies l >= 100 / delta^3.
    for (std::int64_t ell : user_orders) {
      const double delta = std::cbrt(100.0 / static_cast<double>(ell));
      sched.deltas.push_back(delta);
      sched.log10_deltas.push_back(std::log10(delta));
    }
    sched.feasible = true;
    return sched;
  }

  // PaperExact: build delta_k .. delta_1 in log10 space (the recursion
  // underflows doubles already at k = 2).
  std::vector<double> log10_delta(static_cast<std::size_t>(k));
  log10_delta[static_cast<std::size_t>(k - 1)] = std::log10(eps / (12.0 * k));
  std::vector<std::int64_t> orders(static_cast<std::size_t>(k));
  std::vector<double> kappas(static_cast<std::size_t>(k), 0.0);
  bool feasible = true;
  double tau = kInf;
  for (int i = k - 1; i >= 0; --i) {
    const double l10d = log10_delta[static_cast<std::size_t>(i)];
    const double log10_target = 2.0 - 3.0 * l10d;
    std::int64_t ell;
    if (log10_target > 17.0) {
      ell = std::numeric_limits<std::int64_t>::max();
      feasible = false;
    } else {
      const double target = std::pow(10.0, log10_target);
      ell = detail::ceil_even(target);
      if (ell <= opts.scan_max) {
        // smallest even order >= target with a usable cumulant
        const auto found = find_nonzero_cumulant(model, static_cast<int>(ell) - 1, opts.scan_max,
                                                 opts.kappa_floor);
        if (!found)
          throw GaussianObstruction("no nonzero even cumulant in [" + std::to_string(ell) + ", " +
                                    std::to_string(opts.scan_max) + "]");
        ell = *found;
        kappas[static_cast<std::size_t>(i)] = detail::kappa_at_order(model, static_cast<int>(ell));
        tau = std::min(tau, std::abs(kappas[static_cast<std::size_t>(i)]));
      } else {
        feasible = false;
      }
    }
    orders[static_cast<std::size_t>(i)] = ell;
    if (i > 0) {
      // delta_{i-1} = (delta_i / (5 l_i))^{l_i} / (2k)
      const double ell_d = static_cast<double>(std::min<std::int64_t>(ell, std::numeric_limits<std::int64_t>::max()));
      log10_delta[static_cast<std::size_t>(i - 1)] =
          ell_d * (l10d - std::log10(5.0 * ell_d)) - std::log10(2.0 * k);
    }
  }
  sched.orders = std::move(orders);
  sched.kappas = std::move(kappas);
  sched.log10_deltas = std::move(log10_delta);
  for (double l10 : sched.log10_deltas) sched.deltas.push_back(std::pow(10.0, l10));
  sched.tau = std::isfinite(tau) ? tau : 0.0;
  sched.feasible = feasible;
  return sched;
}

enum class Decision { Sparse, FarFromSparse };

struct TestVerdict {
  Decision decision = Decision::Sparse;
  std::vector<double> w_tilde;  // slot magnitude estimates, original scale
  double s2 = 0.0;              // ||w||_2^2 estimate, original scale
  double statistic = 0.0;       // the compared quantity (internal rescaled units)
  double threshold = 0.0;
  std::optional<double> distance_estimate;
  bool degenerate = false;      // all-noise labels, s2 ~ 0
  bool under_sampled = false;   // fewer rows than the size calculator asks for
};

namespace detail {

// Effective even-order cumulants seen by the estimators after the tester's
// internal symmetrization and 1/C label rescaling.
inline double sym_scaled_kappa(double kappa, int ell, double C) {
  return std::pow(2.0, 1.0 - ell / 2.0) * kappa / pow_int(C, static_cast<std::uint64_t>(ell));
}

struct PreparedLabels {
  std::vector<double> y;  // symmetrized, divided by C
};

inline PreparedLabels prepare_labels(std::span<const double> labels, bool already_symmetrized,
                                     double C) {
  PreparedLabels out;
  if (already_symmetrized) {
    out.y.assign(labels.begin(), labels.end());
  } else {
    if (labels.size() < 2) throw InsufficientSamples("tester needs at least 2 rows");
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    out.y.resize(labels.size() / 2);
    for (std::size_t i = 0; i < out.y.size(); ++i)
      out.y[i] = (labels[2 * i] - labels[2 * i + 1]) * inv_sqrt2;
  }
  if (C != 1.0)
    for (double& v : out.y) v /= C;
  return out;
}

}  // namespace detail

// Tolerant tester: distinguishes dist(w, k-sparse) <= c from >= s given
// 1/C <= ||w||_2 <= C.  Estimates the k largest coordinate magnitudes from
// power sums at the schedule's cumulant orders and compares their mass
// against the estimated total.  Ties resolve toward Sparse.
inline TestVerdict general_tester(std::span<const double> labels, bool already_symmetrized, int k,
                                  double c, double s, double C, const MarginalModel& model,
                                  const NoiseModel& noise, const Schedule& schedule) {
  if (k < 1) throw DomainError("sparsity k must be >= 1");
  if (!(0.0 <= c && c < s && s <= 1.0)) throw DomainError("need 0 <= c < s <= 1");
  if (C < 1.0) throw DomainError("norm promise C must be >= 1");
  if (schedule.k != k) throw ValidationError("schedule was built for a different k");
  if (!schedule.feasible)
    throw ValidationError("schedule orders are not runnable; use a practical schedule");

  const auto prep = detail::prepare_labels(labels, already_symmetrized, C);
  const int max_order = static_cast<int>(schedule.orders.front());
  const auto kappa_x = model.known_cumulants(max_order);
  const auto kappa_eta = noise.known_cumulants(std::max(2, max_order));
  const double noise_m2 = noise.exact_moments(2)[1];

  const auto s2 = estimate_norm2(prep.y, noise_m2 / (C * C));

  TestVerdict verdict;
  verdict.s2 = s2.value * C * C;
  verdict.under_sampled = false;

  std::vector<double> w_tilde;
  w_tilde.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const int ell = static_cast<int>(schedule.orders[static_cast<std::size_t>(j)]);
    const double kx = detail::sym_scaled_kappa(kappa_x[static_cast<std::size_t>(ell - 1)], ell, 1.0);
    const double keta = detail::sym_scaled_kappa(kappa_eta[static_cast<std::size_t>(ell - 1)], ell, C);
    if (std::abs(kx) == 0.0)
      throw DegenerateCumulant("kappa_" + std::to_string(ell) + "(X) = 0");
    const auto est = estimate_power_sum(prep.y, ell, kx, keta);
    CompensatedSum prior;
    for (double wi : w_tilde) prior.add(pow_int(wi, static_cast<std::uint64_t>(ell)));
    const double residual = est.value - prior.value();
    w_tilde.push_back(std::min(1.0, std::pow(std::abs(residual), 1.0 / static_cast<double>(ell))));

    // sample-size advisory at this slot's accuracy target
    const double delta_j = schedule.deltas[static_cast<std::size_t>(j)];
    if (delta_j > 0.0) {
      const double eps_j = std::pow(delta_j / (5.0 * ell), static_cast<double>(ell)) / (2.0 * k);
      if (eps_j > 0.0) {
        const double m2l_x = model.exact_moments(2 * ell)[static_cast<std::size_t>(2 * ell - 1)];
        const double m2l_eta = noise.exact_moments(2 * ell)[static_cast<std::size_t>(2 * ell - 1)];
        const auto rec = sample_size_power_sum(ell, eps_j, 1.0 / (20.0 * k),
                                               std::max(std::abs(kx), 1e-300), C, m2l_x, m2l_eta);
        if (prep.y.size() < rec) verdict.under_sampled = true;
      } else {
        verdict.under_sampled = true;
      }
    } else {
      verdict.under_sampled = true;
    }
  }

  CompensatedSum mass;
  for (double wi : w_tilde) mass.add(wi * wi);
  verdict.statistic = mass.value();
  verdict.threshold = (1.0 - (s * s - c * c) / 2.0) * s2.value;
  verdict.w_tilde.resize(w_tilde.size());
  for (std::size_t i = 0; i < w_tilde.size(); ++i) verdict.w_tilde[i] = w_tilde[i] * C;

  if (s2.clamped || s2.value <= 1e-12) {
    verdict.degenerate = true;
    verdict.decision = Decision::Sparse;
    verdict.distance_estimate = 0.0;
    return verdict;
  }
  verdict.decision =
      verdict.statistic >= verdict.threshold ? Decision::Sparse : Decision::FarFromSparse;
  verdict.distance_estimate = std::sqrt(std::max(0.0, 1.0 - verdict.statistic / s2.value));
  return verdict;
}

inline TestVerdict general_tester(const SampleBatch& batch, int k, double c, double s, double C,
                                  const MarginalModel& model, const NoiseModel& noise,
                                  const Schedule& schedule) {
  return general_tester(batch.y, batch.symmetrized, k, c, s, C, model, noise, schedule);
}

// Newton's identity over squared weights: given power sums p_i = sum_j x_j^i,
// returns Sym_1 .. Sym_L with l Sym_l = sum_{i=1}^{l} (-1)^{i-1} Sym_{l-i} p_i.
template <class T>
std::vector<T> newton_sym_from_power_sums(std::span<const T> p) {
  if (p.empty()) throw DomainError("need at least one power sum");
  std::vector<T> sym(p.size() + 1);
  sym[0] = T(1);
  for (std::size_t ell = 1; ell <= p.size(); ++ell) {
    T acc(0);
    int sign = 1;
    for (std::size_t i = 1; i <= ell; ++i) {
      acc = acc + T(sign) * sym[ell - i] * p[i - 1];
      sign = -sign;
    }
    sym[ell] = acc / T(static_cast<int>(ell));
  }
  return std::vector<T>(sym.begin() + 1, sym.end());
}

inline std::vector<double> newton_sym_from_power_sums(std::span<const double> p) {
  return newton_sym_from_power_sums<double>(p);
}

// Symmetric-polynomial tester: estimates Sym_{k+1}(w_1^2, ..., w_n^2) from
// the first k+1 even power sums and compares against the k-sparse threshold
//   (1/2) C^{-(4k+4)} eps^{2k} / (k+1)!.
// Requires kappa_2, ..., kappa_{2k+2}(X) all nonzero.  Not a tolerant tester.
inline TestVerdict sym_poly_tester(std::span<const double> labels, bool already_symmetrized, int k,
                                   double eps, double C, const MarginalModel& model,
                                   const NoiseModel& noise, double cumulant_floor = 1e-9) {
  if (k < 1) throw DomainError("sparsity k must be >= 1");
  if (eps <= 0.0 || eps > 1.0) throw DomainError("eps must be in (0, 1]");
  if (C < 1.0) throw DomainError("norm promise C must be >= 1");
  const int top = 2 * k + 2;
  if (top > kMaxTransformOrder) throw DomainError("k too large for the transform cap");

  const auto kappa_x = model.known_cumulants(top);
  const auto kappa_eta = noise.known_cumulants(top);
  for (int i = 1; i <= k + 1; ++i) {
    if (std::abs(kappa_x[static_cast<std::size_t>(2 * i - 1)]) < cumulant_floor)
      throw DegenerateCumulant("kappa_" + std::to_string(2 * i) + "(X) below floor");
  }

  const auto prep = detail::prepare_labels(labels, already_symmetrized, C);

  std::vector<double> power_sums(static_cast<std::size_t>(k) + 1);
  for (int i = 1; i <= k + 1; ++i) {
    const int ell = 2 * i;
    const double kx = detail::sym_scaled_kappa(kappa_x[static_cast<std::size_t>(ell - 1)], ell, 1.0);
    const double keta = detail::sym_scaled_kappa(kappa_eta[static_cast<std::size_t>(ell - 1)], ell, C);
    const auto est = estimate_power_sum(prep.y, ell, kx, keta);
    power_sums[static_cast<std::size_t>(i - 1)] = std::min(est.value, 1.0);
  }
  const auto sym = newton_sym_from_power_sums<double>(power_sums);

  double fact = 1.0;
  for (int i = 2; i <= k + 1; ++i) fact *= i;
  const double threshold = 0.5 * std::pow(C, -(4.0 * k + 4.0)) * std::pow(eps, 2.0 * k) / fact;

  TestVerdict verdict;
  verdict.statistic = sym[static_cast<std::size_t>(k)];
  verdict.threshold = threshold;
  verdict.s2 = power_sums[0] * C * C;
  verdict.decision =
      verdict.statistic > threshold ? Decision::FarFromSparse : Decision::Sparse;
  return verdict;
}

inline TestVerdict sym_poly_tester(const SampleBatch& batch, int k, double eps, double C,
                                   const MarginalModel& model, const NoiseModel& noise,
                                   double cumulant_floor = 1e-9) {
  return sym_poly_tester(batch.y, batch.symmetrized, k, eps, C, model, noise, cumulant_floor);
}

struct Recovery {
  std::vector<std::size_t> support;
  std::vector<double> weights;
};

namespace detail {

// Least squares on the rows x support submatrix via normal equations with
// partial pivoting; support sizes here are tiny.
inline std::optional<std::vector<double>> solve_least_squares(const SampleBatch& batch,
                                                              std::span<const std::size_t> support,
                                                              std::size_t use_rows) {
  const std::size_t s = support.size();
  std::vector<double> ata(s * s, 0.0), aty(s, 0.0);
  for (std::size_t r = 0; r < use_rows; ++r) {
    for (std::size_t a = 0; a < s; ++a) {
      const double xa = batch.at(r, support[a]);
      aty[a] += xa * batch.y[r];
      for (std::size_t b = 0; b < s; ++b) ata[a * s + b] += xa * batch.at(r, support[b]);
    }
  }
  std::vector<double> aug(ata);
  std::vector<double> rhs(aty);
  for (std::size_t col = 0; col < s; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < s; ++r)
      if (std::abs(aug[r * s + col]) > std::abs(aug[piv * s + col])) piv = r;
    if (std::abs(aug[piv * s + col]) < 1e-300) return std::nullopt;
    if (piv != col) {
      for (std::size_t j = 0; j < s; ++j) std::swap(aug[piv * s + j], aug[col * s + j]);
      std::swap(rhs[piv], rhs[col]);
    }
    for (std::size_t r = col + 1; r < s; ++r) {
      const double f = aug[r * s + col] / aug[col * s + col];
      for (std::size_t j = col; j < s; ++j) aug[r * s + j] -= f * aug[col * s + j];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> sol(s);
  for (std::size_t i = s; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t j = i + 1; j < s; ++j) acc -= aug[i * s + j] * sol[j];
    sol[i] = acc / aug[i * s + i];
  }
  return sol;
}

inline double max_residual(const SampleBatch& batch, std::span<const std::size_t> support,
                           std::span<const double> weights) {
  double worst = 0.0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    double pred = 0.0;
    for (std::size_t a = 0; a < support.size(); ++a) pred += weights[a] * batch.at(r, support[a]);
    worst = std::max(worst, std::abs(batch.y[r] - pred));
  }
  return worst;
}

}  // namespace detail

// Noise-free exact recovery by support enumeration: with a continuous
// marginal and k+1 rows, a k-sparse target is the unique support whose
// induced linear system is consistent with every row.  Returns nullopt when
// no support of size <= k fits (the target is not k-sparse).
inline std::optional<Recovery> noiseless_recover(const SampleBatch& batch, int k,
                                                 double residual_tol = 1e-8,
                                                 double enumeration_guard = 1e6) {
  if (k < 0) throw DomainError("k must be >= 0");
  if (!batch.meta.noise_kind.empty() && batch.meta.noise_kind != "zero")
    throw PreconditionError("noiseless recovery requires zero-noise labels");
  if (batch.rows < static_cast<std::size_t>(k) + 1)
    throw InsufficientSamples("need at least k+1 rows");
  const std::size_t n = batch.cols;
  {
    double combos = 0.0, c = 1.0;
    for (int s = 1; s <= k; ++s) {
      c = c * static_cast<double>(n - static_cast<std::size_t>(s) + 1) / s;
      combos += c;
    }
    if (combos > enumeration_guard) throw ResourceLimit("support enumeration too large");
  }

  bool all_zero = true;
  for (double v : batch.y)
    if (std::abs(v) > residual_tol) {
      all_zero = false;
      break;
    }
  if (all_zero) return Recovery{};

  for (int s = 1; s <= k; ++s) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
    const std::size_t use_rows = std::min(batch.rows, static_cast<std::size_t>(k) + 1);
    while (true) {
      if (auto sol = detail::solve_least_squares(batch, idx, use_rows)) {
        bool nonzero = true;
        for (double v : *sol)
          if (std::abs(v) <= residual_tol) {
            nonzero = false;
            break;
          }
        if (nonzero && detail::max_residual(batch, idx, *sol) <= residual_tol)
          return Recovery{idx, *sol};
      }
      // next combination
      int pos = s - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - static_cast<std::size_t>(s - pos)) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int j = pos + 1; j < s; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return std::nullopt;
}

}  // namespace sparsetest
