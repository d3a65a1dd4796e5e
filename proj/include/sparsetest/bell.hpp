#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "sparsetest/errors.hpp"
#include "sparsetest/numeric.hpp"

namespace sparsetest {

// Transform orders are capped here; factorial weights past this point are
// meaningless in double precision anyway.
inline constexpr int kMaxTransformOrder = 24;

namespace detail {

template <class T>
T binomial_t(unsigned n, unsigned k) {
  return static_cast<T>(binomial_u64(n, k));
}

template <class T>
T factorial_t(unsigned n) {
  T f(1);
  for (unsigned i = 2; i <= n; ++i) f = f * T(static_cast<int>(i));
  return f;
}

// Full table B[j][k] for j <= ell over the recurrence
//   B(j,k) = sum_{i=1}^{j-k+1} C(j-1, i-1) x_i B(j-i, k-1).
template <class T>
std::vector<std::vector<T>> bell_table(int ell, std::span<const T> args) {
  std::vector<std::vector<T>> b(static_cast<std::size_t>(ell) + 1);
  for (int j = 0; j <= ell; ++j) b[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(j) + 1, T(0));
  b[0][0] = T(1);
  for (int j = 1; j <= ell; ++j) {
    for (int k = 1; k <= j; ++k) {
      T acc(0);
      const int imax = j - k + 1;
      for (int i = 1; i <= imax; ++i) {
        if (static_cast<std::size_t>(i) > args.size()) break;
        acc = acc + binomial_t<T>(static_cast<unsigned>(j - 1), static_cast<unsigned>(i - 1)) *
                        args[static_cast<std::size_t>(i - 1)] * b[static_cast<std::size_t>(j - i)][static_cast<std::size_t>(k - 1)];
      }
      b[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = acc;
    }
  }
  return b;
}

inline void check_order(int ell) {
  if (ell < 1 || ell > kMaxTransformOrder)
    throw DomainError("order must be in [1, " + std::to_string(kMaxTransformOrder) + "], got " +
                      std::to_string(ell));
}

}  // namespace detail

// Incomplete (partial) Bell polynomial B_{ell,k}(x_1, ..., x_{ell-k+1}).
template <class T>
T bell_polynomial(int ell, int k, std::span<const T> args) {
  detail::check_order(ell);
  if (k < 1 || k > ell) throw DomainError("bell polynomial requires 1 <= k <= ell");
  if (args.size() < static_cast<std::size_t>(ell - k + 1))
    throw DomainError("bell polynomial needs ell - k + 1 arguments");
  const auto table = detail::bell_table<T>(ell, args);
  return table[static_cast<std::size_t>(ell)][static_cast<std::size_t>(k)];
}

inline double bell_polynomial(int ell, int k, std::span<const double> args) {
  return bell_polynomial<double>(ell, k, args);
}

// kappa_l = sum_{k=1}^{l} (-1)^{k-1} (k-1)! B_{l,k}(m_1, ..., m_{l-k+1}).
// These are alternating sums with heavy cancellation; instantiate with
// Rational whenever the inputs are exact.
template <class T>
std::vector<T> moments_to_cumulants(std::span<const T> moments) {
  const int order = static_cast<int>(moments.size());
  detail::check_order(order);
  const auto table = detail::bell_table<T>(order, moments);
  std::vector<T> kappa(static_cast<std::size_t>(order));
  for (int ell = 1; ell <= order; ++ell) {
    if constexpr (std::is_same_v<T, double>) {
      CompensatedSum acc;
      double sign = 1.0;
      for (int k = 1; k <= ell; ++k) {
        acc.add(sign * detail::factorial_t<double>(static_cast<unsigned>(k - 1)) *
                table[static_cast<std::size_t>(ell)][static_cast<std::size_t>(k)]);
        sign = -sign;
      }
      kappa[static_cast<std::size_t>(ell - 1)] = acc.value();
    } else {
      T acc(0);
      int sign = 1;
      for (int k = 1; k <= ell; ++k) {
        acc = acc + T(sign) * detail::factorial_t<T>(static_cast<unsigned>(k - 1)) *
                        table[static_cast<std::size_t>(ell)][static_cast<std::size_t>(k)];
        sign = -sign;
      }
      kappa[static_cast<std::size_t>(ell - 1)] = acc;
    }
  }
  return kappa;
}

// m_l = sum_{k=1}^{l} B_{l,k}(kappa_1, ..., kappa_{l-k+1}); inverse of the above.
template <class T>
std::vector<T> cumulants_to_moments(std::span<const T> cumulants) {
  const int order = static_cast<int>(cumulants.size());
  detail::check_order(order);
  const auto table = detail::bell_table<T>(order, cumulants);
  std::vector<T> m(static_cast<std::size_t>(order));
  for (int ell = 1; ell <= order; ++ell) {
    if constexpr (std::is_same_v<T, double>) {
      CompensatedSum acc;
      for (int k = 1; k <= ell; ++k)
        acc.add(table[static_cast<std::size_t>(ell)][static_cast<std::size_t>(k)]);
      m[static_cast<std::size_t>(ell - 1)] = acc.value();
    } else {
      T acc(0);
      for (int k = 1; k <= ell; ++k)
        acc = acc + table[static_cast<std::size_t>(ell)][static_cast<std::size_t>(k)];
      m[static_cast<std::size_t>(ell - 1)] = acc;
    }
  }
  return m;
}

// Mean-zero recurrence kappa_l = m_l - sum_j C(l-1, j-1) kappa_j m_{l-j}.
template <class T>
std::vector<T> cumulant_recurrence(std::span<const T> moments) {
  const int order = static_cast<int>(moments.size());
  detail::check_order(order);
  bool mean_zero;
  if constexpr (std::is_same_v<T, double>) {
    mean_zero = std::abs(moments[0]) <= 1e-12;
  } else {
    mean_zero = moments[0] == T(0);
  }
  if (!mean_zero) throw PreconditionError("cumulant recurrence requires a mean-zero moment sequence");
  std::vector<T> kappa(static_cast<std::size_t>(order));
  for (int ell = 1; ell <= order; ++ell) {
    T acc = moments[static_cast<std::size_t>(ell - 1)];
    for (int j = 1; j <= ell - 1; ++j) {
      acc = acc - detail::binomial_t<T>(static_cast<unsigned>(ell - 1), static_cast<unsigned>(j - 1)) *
                      kappa[static_cast<std::size_t>(j - 1)] * moments[static_cast<std::size_t>(ell - j - 1)];
    }
    kappa[static_cast<std::size_t>(ell - 1)] = acc;
  }
  return kappa;
}

// Magnitude bound |kappa_l| <= m_l * e^l * l! for mean-zero variables, even l.
inline double cumulant_upper_bound(int ell, double m_ell) {
  if (ell < 2 || ell % 2 != 0) throw DomainError("cumulant bound is stated for even orders >= 2");
  return m_ell * std::exp(static_cast<double>(ell)) * detail::factorial_t<double>(static_cast<unsigned>(ell));
}

}  // namespace sparsetest
