// Acceptance suite: one statistical or exactness criterion per entry, each
// printed as a PASS/FAIL line with its measured values.  Run with no
// arguments for everything or with a list of criterion numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sparsetest/sparsetest.hpp"

using namespace sparsetest;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

// ---------------------------------------------------------------- helpers

Rational random_rational(Rng& rng, int num_range, int den_range) {
  const int num = static_cast<int>(rng.index(static_cast<std::uint64_t>(2 * num_range + 1))) - num_range;
  const int den = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(den_range)));
  return Rational(num, den);
}

// Direct enumeration of the partial Bell polynomial over its defining index
// sequences; the independent oracle for criterion 1.
Rational bell_enumerated(int ell, int k, const std::vector<Rational>& args) {
  const int len = ell - k + 1;
  std::vector<int> js(static_cast<std::size_t>(len), 0);
  Rational total = 0;
  const BigInt ell_fact = factorial_big(static_cast<unsigned>(ell));
  std::function<void(int, int, int)> rec = [&](int pos, int count_left, int weight_left) {
    if (pos == len) {
      if (count_left == 0 && weight_left == 0) {
        Rational term(ell_fact);
        for (int i = 0; i < len; ++i) {
          const int j = js[static_cast<std::size_t>(i)];
          if (j == 0) continue;
          term /= Rational(factorial_big(static_cast<unsigned>(j)));
          term *= pow_rational(args[static_cast<std::size_t>(i)] /
                                   Rational(factorial_big(static_cast<unsigned>(i + 1))),
                               static_cast<unsigned>(j));
        }
        total += term;
      }
      return;
    }
    const int max_j = std::min(count_left, weight_left / (pos + 1));
    for (int j = 0; j <= max_j; ++j) {
      js[static_cast<std::size_t>(pos)] = j;
      rec(pos + 1, count_left - j, weight_left - (pos + 1) * j);
    }
    js[static_cast<std::size_t>(pos)] = 0;
  };
  rec(0, k, ell);
  return total;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ------------------------------------------------------------- criteria

Outcome criterion_bell_exactness() {
  Outcome out;
  Rng rng(2026);
  int comparisons = 0;
  for (int ell = 1; ell <= 10; ++ell) {
    for (int k = 1; k <= ell; ++k) {
      for (int rep = 0; rep < 100 / ell; ++rep) {
        std::vector<Rational> args;
        for (int i = 0; i < ell - k + 1; ++i) args.push_back(random_rational(rng, 9, 9));
        ++comparisons;
        if (bell_polynomial<Rational>(ell, k, args) != bell_enumerated(ell, k, args)) {
          out.pass = false;
          out.detail = "bell mismatch at ell=" + std::to_string(ell) + " k=" + std::to_string(k);
          return out;
        }
      }
    }
  }
  int round_trips = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const int order = 2 + static_cast<int>(rng.index(11));  // up to 12
    std::vector<Rational> m;
    for (int i = 0; i < order; ++i) m.push_back(random_rational(rng, 1000, 7));
    ++round_trips;
    if (cumulants_to_moments<Rational>(moments_to_cumulants<Rational>(m)) != m) {
      out.pass = false;
      out.detail = "round trip broke at order " + std::to_string(order);
      return out;
    }
  }
  out.detail = std::to_string(comparisons) + " enumerator comparisons exact, " +
               std::to_string(round_trips) + " round trips exact";
  return out;
}

Outcome criterion_known_cumulants() {
  Outcome out;
  std::ostringstream detail;
  const auto gauss = UnivariateModel::gaussian(0, 1).known_cumulants(10);
  double worst_gauss = 0.0;
  for (int ell = 3; ell <= 10; ++ell)
    worst_gauss = std::max(worst_gauss, std::abs(gauss[static_cast<std::size_t>(ell - 1)]));
  const auto rad = UnivariateModel::rademacher().known_cumulants(6);
  const auto poi = UnivariateModel::poisson(1.0).known_cumulants(4);
  double worst_mix = 0.0;
  for (double gamma : {1e-2, 1e-3}) {
    const auto mix = UnivariateModel::gauss_bernoulli(gamma).known_cumulants(4);
    worst_mix = std::max(worst_mix, std::abs(mix[3] + 2.0 * gamma));
  }
  out.pass = worst_gauss <= 1e-9 && rad[3] == -2.0 && rad[5] == 16.0 && poi[0] == 1.0 &&
             poi[1] == 1.0 && poi[2] == 1.0 && poi[3] == 1.0 && worst_mix <= 1e-12;
  detail << "gaussian tail max " << fmt(worst_gauss) << ", rademacher (" << rad[3] << ", "
         << rad[5] << "), poisson(1) all-ones, mixture residual " << fmt(worst_mix);
  out.detail = detail.str();
  return out;
}

Outcome criterion_linf_extraction() {
  Outcome out;
  Rng rng(31337);
  const int ell = 800;
  const double delta = 0.5;
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Rational> w(20);
    Rational norm2 = 0;
    double winf = 0.0;
    for (auto& v : w) {
      v = Rational(static_cast<int>(rng.index(129)) - 64, 64);
      norm2 += v * v;
      winf = std::max(winf, std::abs(to_double(v)));
    }
    if (norm2 > 1) {
      // shrink by an integer factor to stay inside the unit ball exactly
      const auto shrink = Rational(static_cast<int>(std::ceil(std::sqrt(to_double(norm2)))));
      winf = 0.0;
      for (auto& v : w) {
        v /= shrink;
        winf = std::max(winf, std::abs(to_double(v)));
      }
    }
    Rational power_sum = 0;
    for (const auto& v : w) power_sum += pow_rational(v, static_cast<unsigned>(ell));
    const double extracted =
        power_sum == 0 ? 0.0 : linf_extract_log(log_abs_rational(power_sum), ell);
    worst = std::max(worst, std::abs(extracted - winf));
  }
  out.pass = worst <= delta;
  out.detail = "max |M^{1/800} - max|w|| = " + fmt(worst) + " (allowed " + fmt(delta) + ")";
  return out;
}

struct BatteryCell {
  int k;
  bool noisy;
  bool yes_side;
};

// Shared instance battery for criteria 4 and 5: Rademacher coordinates,
// n = 20, noise either exactly zero or Rademacher-scaled at 0.25 (the spec
// fixes the noise family, not its scale), yes-instances k-sparse at the
// bottom of the norm promise, no-instances flat at the top.
WeightVector battery_weights(Rng& rng, const BatteryCell& cell, double C) {
  const std::size_t n = 20;
  std::vector<double> w(n, 0.0);
  if (cell.yes_side) {
    const double mag = (1.0 / C) / std::sqrt(static_cast<double>(cell.k));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (int j = 0; j < cell.k; ++j)
      std::swap(idx[static_cast<std::size_t>(j)],
                idx[static_cast<std::size_t>(j) + rng.index(n - static_cast<std::size_t>(j))]);
    for (int j = 0; j < cell.k; ++j)
      w[idx[static_cast<std::size_t>(j)]] = (rng.coin() ? 1.0 : -1.0) * mag;
  } else {
    for (auto& v : w) v = (rng.coin() ? 1.0 : -1.0) * C / std::sqrt(static_cast<double>(n));
  }
  return WeightVector(w);
}

Outcome criterion_sympoly_battery() {
  Outcome out;
  std::ostringstream detail;
  const double eps = 0.5, C = 2.0;
  const std::uint64_t cap = 10000000;
  const auto marginal = UnivariateModel::rademacher();
  const int seeds = 50;

  for (int k : {1, 2}) {
    // calculator recommendation at the tester's own accuracy target
    double fact = 1.0;
    for (int i = 2; i <= k + 1; ++i) fact *= i;
    const double eps_prime = std::pow(C, -(4.0 * k + 4.0)) * std::pow(eps, 2.0 * k) /
                             (3.0 * (k + 1) * fact);
    const int top = 2 * k + 2;
    const double tau = std::abs(marginal.known_cumulants(top)[static_cast<std::size_t>(top - 1)]);
    const double m2l_x = marginal.exact_moments(2 * top)[static_cast<std::size_t>(2 * top - 1)];
    const auto recommended = sample_size_power_sum(top, eps_prime, 0.1, tau, C, m2l_x, 1.0);
    const auto m = static_cast<std::size_t>(std::min(recommended, cap));

    for (bool noisy : {false, true}) {
      const auto noise = noisy ? UnivariateModel::rademacher(0.25) : UnivariateModel::zero();
      for (bool yes_side : {true, false}) {
        int good = 0;
        for (int s = 0; s < seeds; ++s) {
          Rng wrng(derive_stream(900 + static_cast<std::uint64_t>(k) + (noisy ? 10 : 0),
                                 static_cast<std::uint64_t>(s)));
          const auto w = battery_weights(wrng, {k, noisy, yes_side}, C);
          const auto labels = sample_labels(marginal, noise, w, m,
                                            derive_stream(1400 + static_cast<std::uint64_t>(s),
                                                          static_cast<std::uint64_t>(k + (noisy ? 4 : 0) + (yes_side ? 16 : 0))));
          const auto verdict = sym_poly_tester(labels, false, k, eps, C, marginal, noise);
          const bool correct = (verdict.decision == Decision::Sparse) == yes_side;
          if (correct) ++good;
        }
        const auto ci = clopper_pearson(static_cast<std::uint64_t>(good), seeds);
        const bool cell_ok = good >= 45 || (ci.lo <= 0.9 && 0.9 <= ci.hi);
        detail << "k" << k << (noisy ? "R" : "z") << (yes_side ? "y" : "n") << "=" << good << "/50 ";
        if (!cell_ok) out.pass = false;
      }
    }
  }
  out.detail = detail.str() + "(m = 1e7, rate >= 0.9 or its 95% CI)";
  return out;
}

Outcome criterion_general_battery() {
  Outcome out;
  std::ostringstream detail;
  const double c = 0.1, s = 0.9, C = 2.0;
  const int k = 2;
  const std::uint64_t cap = 10000000;
  const auto marginal = UnivariateModel::rademacher();
  const double sched_eps = (s * s - c * c) / (2.0 * pow_int(C, 4));
  const auto schedule =
      build_schedule(k, sched_eps, C, marginal, ScheduleMode::Practical, {6, 4});
  const auto m = static_cast<std::size_t>(cap);  // paper-rate recommendation far exceeds this
  const int seeds = 50;

  for (bool noisy : {false, true}) {
    const auto noise = noisy ? UnivariateModel::rademacher(0.25) : UnivariateModel::zero();
    for (bool yes_side : {true, false}) {
      int good = 0;
      for (int t = 0; t < seeds; ++t) {
        Rng wrng(derive_stream(2700 + (noisy ? 1 : 0), static_cast<std::uint64_t>(t)));
        const auto w = battery_weights(wrng, {k, noisy, yes_side}, C);
        const double truth = dist_to_k_sparse(w, k);
        const bool expect_sparse = truth <= c;
        const auto labels = sample_labels(marginal, noise, w, m,
                                          derive_stream(3100 + static_cast<std::uint64_t>(t),
                                                        (noisy ? 2 : 0) + (yes_side ? 1 : 0)));
        const auto verdict =
            general_tester(labels, false, k, c, s, C, marginal, noise, schedule);
        if ((verdict.decision == Decision::Sparse) == expect_sparse) ++good;
      }
      detail << (noisy ? "R" : "z") << (yes_side ? "y" : "n") << "=" << good << "/50 ";
      if (good < 45) out.pass = false;
    }
  }
  out.detail = detail.str() + "(orders (6,4), m = 1e7, need >= 45/50)";
  return out;
}

Outcome criterion_gaussian_lowerbound() {
  Outcome out;
  LBParams params;
  params.n = 10000;
  params.t = 2;
  params.c = 0.1;
  const auto flat = distinguisher_advantage(LBConstruction::GaussianHidden, params, 10000, 424242);

  params.n = 16;
  params.t = 40;
  const auto grown = distinguisher_advantage(LBConstruction::GaussianHidden, params, 2000, 90210);

  const bool flat_ok = std::abs(flat.advantage) <= 0.02;
  const bool grown_ok = grown.advantage >= 0.3;
  out.pass = flat_ok && grown_ok;
  out.detail = "n=1e4,t=2: |adv| = " + fmt(std::abs(flat.advantage)) + " +- " +
               fmt(flat.stderr_value) + " (bound 0.02" + (flat_ok ? ", ok" : ", violated") +
               "); n=16,t=40: adv = " + fmt(grown.advantage) + " (need >= 0.3" +
               (grown_ok ? ", ok" : ", violated") + ")";
  return out;
}

Outcome criterion_poisson_lowerbound() {
  Outcome out;
  LBParams params;
  params.n = 10000;
  params.t = 2;
  params.r = 2;
  const auto adv = distinguisher_advantage(LBConstruction::PoissonNonIID, params, 10000, 777);
  const bool adv_ok = adv.advantage <= 0.05;

  // label-marginal two-sample check; labels depend only on the hidden
  // support, so only those columns are drawn here
  std::vector<double> yes_labels, no_labels;
  Rng rng(778);
  const std::size_t half = params.n / 2;
  for (int i = 0; i < 50000; ++i) {
    for (int row = 0; row < 2; ++row)
      yes_labels.push_back(static_cast<double>(rng.poisson(2.0)));
    const bool collide = rng.index(half) == rng.index(half);
    for (int row = 0; row < 2; ++row) {
      const auto a = rng.poisson(1.0);
      const auto b = collide ? a : rng.poisson(1.0);
      no_labels.push_back(static_cast<double>(a + b));
    }
  }
  const bool ks_ok = ks_two_sample_accepts(yes_labels, no_labels, 0.01);
  out.pass = adv_ok && ks_ok;
  out.detail = "advantage = " + fmt(adv.advantage) + " +- " + fmt(adv.stderr_value) +
               " (bound 0.05" + std::string(adv_ok ? ", ok" : ", violated") +
               "); label-marginal two-sample " + (ks_ok ? "accepted" : "rejected");
  return out;
}

Outcome criterion_closed_forms() {
  Outcome out;
  double worst_e1 = 0.0;
  for (int zi = 0; zi < 10; ++zi) {
    for (int ci = 0; ci < 10; ++ci) {
      const double z = -4.5 + zi;
      const double c = 0.15 + 0.2 * ci;
      const auto integrand = [&](double x) {
        return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi) *
               std::exp(-(z - x) * (z - x) / (2 * c * c)) / c;
      };
      // panel-wise so the narrow product bump cannot be stepped over
      CompensatedSum quad;
      for (int panel = 0; panel < 112; ++panel) {
        const double a = -14.0 + 0.25 * panel;
        quad.add(integrate(integrand, a, a + 0.25, 1e-11));
      }
      worst_e1 = std::max(worst_e1, std::abs(expect1_closed_form(z, c) - quad.value()));
    }
  }
  bool moments_ok = true;
  Rng yrng(808);
  double worst_sigma = 0.0;
  for (int t = 1; t <= 3 && moments_ok; ++t) {
    std::vector<double> y(static_cast<std::size_t>(t));
    double norm2 = 0.0;
    for (auto& v : y) {
      v = yrng.uniform(-1.0, 1.0);
      norm2 += v * v;
    }
    for (int j = 1; j <= 4; ++j) {
      Rng rng(derive_stream(808, static_cast<std::uint64_t>(16 * t + j)));
      const std::size_t samples = 1500000;
      CompensatedSum acc, acc2;
      for (std::size_t sidx = 0; sidx < samples; ++sidx) {
        double r = 1.0;
        for (int i = 0; i < t; ++i) {
          const double d = y[static_cast<std::size_t>(i)] - rng.gaussian();
          r *= std::exp(-d * d / (2 * 0.25)) / std::sqrt(2 * std::numbers::pi * 0.25);
        }
        const double rj = pow_int(r, static_cast<std::uint64_t>(j));
        acc.add(rj);
        acc2.add(rj * rj);
      }
      const double mean = acc.value() / static_cast<double>(samples);
      const double var =
          std::max(0.0, acc2.value() / static_cast<double>(samples) - mean * mean);
      const double se = std::sqrt(var / static_cast<double>(samples));
      const double closed = r_moment_closed_form(j, t, 0.5, norm2);
      const double sigmas = std::abs(mean - closed) / std::max(se, 1e-300);
      worst_sigma = std::max(worst_sigma, sigmas);
      if (sigmas > 3.0) moments_ok = false;
    }
  }
  out.pass = worst_e1 <= 1e-6 && moments_ok;
  out.detail = "density-average max quadrature gap " + fmt(worst_e1) +
               "; kernel moments worst deviation " + fmt(worst_sigma) + " sigma";
  return out;
}

Outcome criterion_noiseless_recovery() {
  Outcome out;
  const auto gauss = UnivariateModel::gaussian(0, 1);
  const auto zero = UnivariateModel::zero();
  int exact = 0, rejected = 0;
  Rng rng(909);
  for (int trial = 0; trial < 50; ++trial) {
    // planted 2-sparse target
    std::vector<double> w(10, 0.0);
    const std::size_t a = rng.index(10);
    std::size_t b = rng.index(10);
    while (b == a) b = rng.index(10);
    w[a] = rng.uniform(0.5, 2.0) * (rng.coin() ? 1 : -1);
    w[b] = rng.uniform(0.5, 2.0) * (rng.coin() ? 1 : -1);
    const auto batch = sample_dataset(gauss, zero, WeightVector(w), 3,
                                      static_cast<std::uint64_t>(5000 + trial));
    const auto rec = noiseless_recover(batch, 2);
    std::vector<std::size_t> want = {std::min(a, b), std::max(a, b)};
    if (rec && rec->support == want) ++exact;

    // 3-sparse target must be refused
    std::size_t c = rng.index(10);
    while (c == a || c == b) c = rng.index(10);
    auto w3 = w;
    w3[c] = rng.uniform(0.5, 2.0) * (rng.coin() ? 1 : -1);
    const auto batch3 = sample_dataset(gauss, zero, WeightVector(w3), 3,
                                       static_cast<std::uint64_t>(6000 + trial));
    if (!noiseless_recover(batch3, 2).has_value()) ++rejected;
  }
  out.pass = exact == 50 && rejected == 50;
  out.detail = "support recovered " + std::to_string(exact) + "/50, 3-sparse refused " +
               std::to_string(rejected) + "/50";
  return out;
}

Outcome criterion_gap_and_root() {
  Outcome out;
  const auto rad = UnivariateModel::rademacher();
  const auto order = find_nonzero_cumulant(rad, 2, 20, 1.0);
  const bool gap_ok = order.has_value() && *order == 4;

  const auto root = mgf_root_search(rad);
  const bool root_ok =
      root.root.has_value() && std::abs(std::abs(*root.root) - std::numbers::pi / 2.0) <= 1e-6;
  out.pass = gap_ok && root_ok;
  out.detail = std::string("first usable order = ") + (order ? std::to_string(*order) : "none") +
               "; |z0| = " + (root.root ? fmt(std::abs(*root.root)) : "none") +
               " (pi/2 = " + fmt(std::numbers::pi / 2.0) + ")";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "bell transform exactness", criterion_bell_exactness},
      {2, "known cumulant values", criterion_known_cumulants},
      {3, "high-order power-sum extraction", criterion_linf_extraction},
      {4, "symmetric-polynomial tester battery", criterion_sympoly_battery},
      {5, "general tester battery", criterion_general_battery},
      {6, "gaussian indistinguishability", criterion_gaussian_lowerbound},
      {7, "poisson indistinguishability", criterion_poisson_lowerbound},
      {8, "closed-form density identities", criterion_closed_forms},
      {9, "noise-free recovery", criterion_noiseless_recovery},
      {10, "cumulant gap scan and mgf root", criterion_gap_and_root},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), criterion.number) == selected.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %02d %s: %s (%.1fs)\n", outcome.pass ? "PASS" : "FAIL", criterion.number,
                criterion.name, outcome.detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
