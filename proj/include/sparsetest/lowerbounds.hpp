#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sparsetest/batch.hpp"
#include "sparsetest/errors.hpp"
#include "sparsetest/numeric.hpp"
#include "sparsetest/rng.hpp"

namespace sparsetest {

// Indistinguishability constructions: in each one the yes ensemble hides a
// sparse target and the no ensemble a far-from-sparse target, while the
// marginal law of (x, y) stays (nearly) the same.

// x ~ Poi(1)^{n/2} x Poi(r)^{n/2}, no noise.
// yes: w = e_i for uniform i in the Poi(r) half.
// no:  w = e_{i_1} + ... + e_{i_r} with i_j uniform in the Poi(1) half.
inline SampleBatch gen_poisson_noniid(std::size_t n, std::size_t m, std::uint64_t seed, bool yes,
                                      int spread = 2) {
  if (n % 2 != 0) throw DomainError("poisson non-iid construction needs even n");
  if (spread < 1) throw DomainError("spread must be >= 1");
  const std::size_t half = n / 2;
  SampleBatch batch;
  batch.rows = m;
  batch.cols = n;
  batch.x.resize(m * n);
  batch.y.assign(m, 0.0);
  batch.meta = BatchMeta{"poisson_noniid", "zero", seed, n, m};

  Rng wrng(derive_stream(seed, 0));
  std::vector<std::size_t> support;
  if (yes) {
    support.push_back(half + wrng.index(half));
  } else {
    for (int j = 0; j < spread; ++j) support.push_back(wrng.index(half));
  }
  for (std::size_t i = 0; i < m; ++i) {
    Rng rng(derive_stream(seed, i + 1));
    for (std::size_t j = 0; j < n; ++j)
      batch.at(i, j) = static_cast<double>(rng.poisson(j < half ? 1.0 : static_cast<double>(spread)));
    double label = 0.0;
    for (std::size_t j : support) label += batch.at(i, j);
    batch.y[i] = label;
  }
  return batch;
}

// x ~ Poi(1)^n; yes: w = e_i with Poi(r) noise; no: w = sum of r basis
// vectors with Poi(1) noise.  Both label marginals are Poi(r + 1).
inline SampleBatch gen_poisson_unknown_noise(std::size_t n, std::size_t m, std::uint64_t seed,
                                             bool yes, int r = 2) {
  if (r < 1) throw DomainError("r must be >= 1");
  SampleBatch batch;
  batch.rows = m;
  batch.cols = n;
  batch.x.resize(m * n);
  batch.y.assign(m, 0.0);
  batch.meta = BatchMeta{"poisson_unknown_noise", yes ? "poisson_r" : "poisson_1", seed, n, m};

  Rng wrng(derive_stream(seed, 0));
  std::vector<std::size_t> support;
  if (yes) {
    support.push_back(wrng.index(n));
  } else {
    for (int j = 0; j < r; ++j) support.push_back(wrng.index(n));
  }
  const double noise_rate = yes ? static_cast<double>(r) : 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    Rng rng(derive_stream(seed, i + 1));
    for (std::size_t j = 0; j < n; ++j) batch.at(i, j) = static_cast<double>(rng.poisson(1.0));
    double label = static_cast<double>(rng.poisson(noise_rate));
    for (std::size_t j : support) label += batch.at(i, j);
    batch.y[i] = label;
  }
  return batch;
}

// no: x ~ N(0,1)^{t x n}, y ~ N(0, 1+c^2)^t independent of x.
// yes: hidden uniform block of k coordinates; y_j = (block sum)/sqrt(k) + N(0, c^2).
inline SampleBatch gen_gaussian_hidden(std::size_t n, std::size_t t, double c, std::uint64_t seed,
                                       bool yes, int k = 1) {
  if (c <= 0.0) throw DomainError("noise level c must be positive");
  if (k < 1 || n % static_cast<std::size_t>(k) != 0)
    throw DomainError("block size k must divide n");
  SampleBatch batch;
  batch.rows = t;
  batch.cols = n;
  batch.x.resize(t * n);
  batch.y.assign(t, 0.0);
  batch.meta = BatchMeta{"gaussian_hidden", "gaussian", seed, n, t};

  Rng wrng(derive_stream(seed, 0));
  const std::size_t blocks = n / static_cast<std::size_t>(k);
  const std::size_t block = yes ? wrng.index(blocks) : 0;
  for (std::size_t i = 0; i < t; ++i) {
    Rng rng(derive_stream(seed, i + 1));
    for (std::size_t j = 0; j < n; ++j) batch.at(i, j) = rng.gaussian();
    if (yes) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += batch.at(i, block * static_cast<std::size_t>(k) + static_cast<std::size_t>(j));
      batch.y[i] = acc / std::sqrt(static_cast<double>(k)) + c * rng.gaussian();
    } else {
      batch.y[i] = std::sqrt(1.0 + c * c) * rng.gaussian();
    }
  }
  return batch;
}

// Exact joint log-densities of the two Gaussian ensembles at (x, y); the
// yes-density averages the n column hypotheses by streaming log-sum-exp.
inline std::pair<double, double> gaussian_log_pdfs(const SampleBatch& batch, double c) {
  if (c <= 0.0) throw DomainError("noise level c must be positive");
  const std::size_t t = batch.rows, n = batch.cols;
  const double log2pi = std::log(2.0 * std::numbers::pi);

  CompensatedSum x_part;
  for (double v : batch.x) x_part.add(-0.5 * v * v);
  const double log_x = x_part.value() - 0.5 * static_cast<double>(t * n) * log2pi;

  CompensatedSum y_no;
  for (double v : batch.y) y_no.add(-v * v / (2.0 * (1.0 + c * c)));
  const double log_no =
      log_x + y_no.value() - 0.5 * static_cast<double>(t) * std::log(2.0 * std::numbers::pi * (1.0 + c * c));

  OnlineLogSumExp lse;
  for (std::size_t col = 0; col < n; ++col) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      const double d = batch.y[i] - batch.at(i, col);
      acc += -d * d / (2.0 * c * c);
    }
    lse.add(acc);
  }
  const double log_yes = log_x + lse.value() -
                         0.5 * static_cast<double>(t) * std::log(2.0 * std::numbers::pi * c * c) -
                         std::log(static_cast<double>(n));
  return {log_no, log_yes};
}

// E_{x ~ N(0,1)}[ (1/c) e^{-(z-x)^2 / (2 c^2)} ] in closed form.
inline double expect1_closed_form(double z, double c) {
  if (c <= 0.0) throw DomainError("c must be positive");
  return std::exp(-z * z / (2.0 * (1.0 + c * c))) / std::sqrt(1.0 + c * c);
}

// j-th moment over w ~ N(0,1)^t of R(w, y) = prod_i (2 pi c^2)^{-1/2}
// e^{-(y_i - w_i)^2 / (2 c^2)}.
inline double r_moment_closed_form(int j, int t, double c, double y_norm2) {
  if (j < 1 || t < 1) throw DomainError("j and t must be >= 1");
  if (c <= 0.0) throw DomainError("c must be positive");
  const double jd = static_cast<double>(j), td = static_cast<double>(t);
  return std::pow(2.0 * std::numbers::pi, -jd * td / 2.0) /
         std::pow(std::pow(c, jd - 1.0) * std::sqrt(jd + c * c), td) *
         std::exp(-y_norm2 / (2.0 + 2.0 * c * c / jd));
}

enum class LBConstruction { PoissonNonIID, PoissonUnknownNoise, GaussianHidden };

struct LBParams {
  std::size_t n = 0;
  std::size_t t = 0;  // rows per instance (m for the Poisson constructions)
  double c = 0.1;     // gaussian noise level
  int r = 2;          // poisson spread / noise rate
  int k = 1;          // gaussian block size
};

struct AdvantageResult {
  double advantage = 0.0;
  double stderr_value = 0.0;
  std::uint64_t trials = 0;
  double correct_yes = 0.0;
  double correct_no = 0.0;
  bool low_trials_warning = false;
};

namespace detail {

// Column-profile machinery for the Poisson constructions: with m <= 8 rows
// and small Poisson values, a column is encoded in 6 bits per row.
inline constexpr int kProfileMaxRows = 8;

inline std::uint64_t encode_column(std::span<const std::uint32_t> vals) {
  std::uint64_t key = 0;
  for (std::uint32_t v : vals) {
    if (v >= 64) throw NumericalError("poisson value too large for the profile encoding");
    key = (key << 6) | v;
  }
  return key;
}

using Profile = std::unordered_map<std::uint64_t, double>;

// r-fold convolution of a sparse column-value profile, evaluated at target.
// Sums over all ways to write target as an ordered sum of r profile keys.
inline double profile_convolution_at(const Profile& profile, std::span<const std::uint32_t> target,
                                     int r) {
  const std::size_t rows = target.size();
  std::vector<std::uint32_t> tmp(rows);
  if (r == 1) {
    auto it = profile.find(encode_column(target));
    return it == profile.end() ? 0.0 : it->second;
  }
  double total = 0.0;
  for (const auto& [key, weight] : profile) {
    bool fits = true;
    std::uint64_t k = key;
    for (std::size_t i = rows; i-- > 0;) {
      const auto v = static_cast<std::uint32_t>(k & 63u);
      k >>= 6;
      if (v > target[i]) {
        fits = false;
        break;
      }
      tmp[i] = target[i] - v;
    }
    if (!fits) continue;
    total += weight * profile_convolution_at(profile, tmp, r - 1);
  }
  return total;
}

inline double poisson_pmf(double rate, std::int64_t value) {
  if (value < 0) return 0.0;
  double lg = -rate + static_cast<double>(value) * std::log(rate);
  lg -= std::lgamma(static_cast<double>(value) + 1.0);
  return std::exp(lg);
}

struct PoissonInstance {
  std::vector<std::uint32_t> cols;  // column-major encoded? row-major n * rows
  std::vector<std::uint32_t> label;
  std::size_t n = 0, rows = 0;
};

}  // namespace detail

// Bayes-optimal distinguisher advantage, Pr[correct] - 1/2 under equal
// priors.  GaussianHidden classifies by the sign of log S_no - log S_yes;
// the Poisson constructions use the exact conditional likelihood of the
// label vector given the column-value profile of x.  Ties count half.
inline AdvantageResult distinguisher_advantage(LBConstruction construction, const LBParams& params,
                                               std::uint64_t trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("need at least one trial");
  AdvantageResult result;
  result.trials = trials;
  result.low_trials_warning = trials < 100;

  double correct_yes = 0.0, correct_no = 0.0;

  if (construction == LBConstruction::GaussianHidden) {
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
      for (int label = 0; label < 2; ++label) {
        const bool yes = label == 1;
        const auto batch = gen_gaussian_hidden(params.n, params.t, params.c,
                                               derive_stream(seed, 2 * trial + (yes ? 1 : 0)), yes,
                                               params.k);
        const auto [log_no, log_yes] = gaussian_log_pdfs(batch, params.c);
        double credit;
        if (log_no == log_yes) credit = 0.5;
        else if ((log_no > log_yes) == !yes) credit = 1.0;
        else credit = 0.0;
        (yes ? correct_yes : correct_no) += credit;
      }
    }
  } else {
    if (params.t > static_cast<std::size_t>(detail::kProfileMaxRows))
      throw ResourceLimit("exact likelihood enumeration supports at most " +
                          std::to_string(detail::kProfileMaxRows) + " rows");
    const bool noniid = construction == LBConstruction::PoissonNonIID;
    const std::size_t rows = params.t;
    const std::size_t n = params.n;
    if (noniid && n % 2 != 0) throw DomainError("poisson non-iid construction needs even n");

    std::vector<std::uint32_t> col(rows), target(rows);
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
      for (int label = 0; label < 2; ++label) {
        const bool yes = label == 1;
        const std::uint64_t inst_seed = derive_stream(seed, 2 * trial + (yes ? 1 : 0));
        const auto batch = noniid
                               ? gen_poisson_noniid(n, rows, inst_seed, yes, params.r)
                               : gen_poisson_unknown_noise(n, rows, inst_seed, yes, params.r);

        double like_yes = 0.0, like_no = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
          target[i] = static_cast<std::uint32_t>(batch.y[i]);

        if (noniid) {
          // yes-likelihood: frequency of an exact label match in the Poi(r)
          // half; no-likelihood: r-fold convolution of the Poi(1)-half profile.
          const std::size_t half = n / 2;
          detail::Profile low, high;
          const double w_low = 1.0 / static_cast<double>(half);
          for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < rows; ++i)
              col[i] = static_cast<std::uint32_t>(batch.at(i, j));
            (j < half ? low : high)[detail::encode_column(col)] += w_low;
          }
          auto it = high.find(detail::encode_column(target));
          like_yes = it == high.end() ? 0.0 : it->second;
          like_no = detail::profile_convolution_at(low, target, params.r);
        } else {
          // yes: average over columns of the Poi(r) noise pmf at y - column;
          // no: r-fold column convolution smeared with Poi(1) noise.
          detail::Profile profile;
          const double w = 1.0 / static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j) {
            double acc_yes = 1.0;
            for (std::size_t i = 0; i < rows; ++i) {
              col[i] = static_cast<std::uint32_t>(batch.at(i, j));
              acc_yes *= detail::poisson_pmf(static_cast<double>(params.r),
                                             static_cast<std::int64_t>(target[i]) -
                                                 static_cast<std::int64_t>(col[i]));
            }
            like_yes += w * acc_yes;
            profile[detail::encode_column(col)] += w;
          }
          // enumerate z <= target componentwise via the profile convolution
          std::vector<std::uint32_t> z(rows, 0);
          while (true) {
            const double conv = detail::profile_convolution_at(profile, z, params.r);
            if (conv > 0.0) {
              double noise_prob = 1.0;
              for (std::size_t i = 0; i < rows; ++i)
                noise_prob *= detail::poisson_pmf(1.0, static_cast<std::int64_t>(target[i]) -
                                                           static_cast<std::int64_t>(z[i]));
              like_no += conv * noise_prob;
            }
            std::size_t pos = 0;
            while (pos < rows && z[pos] == target[pos]) {
              z[pos] = 0;
              ++pos;
            }
            if (pos == rows) break;
            ++z[pos];
          }
        }

        double credit;
        if (like_no == like_yes) credit = 0.5;
        else if ((like_no > like_yes) == !yes) credit = 1.0;
        else credit = 0.0;
        (yes ? correct_yes : correct_no) += credit;
      }
    }
  }

  const double total = correct_yes + correct_no;
  const double p = total / (2.0 * static_cast<double>(trials));
  result.correct_yes = correct_yes / static_cast<double>(trials);
  result.correct_no = correct_no / static_cast<double>(trials);
  result.advantage = p - 0.5;
  result.stderr_value = std::sqrt(std::max(p * (1.0 - p), 1e-12) / (2.0 * static_cast<double>(trials)));
  return result;
}

}  // namespace sparsetest
