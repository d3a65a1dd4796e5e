#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <vector>

#include "sparsetest/bell.hpp"
#include "sparsetest/rational.hpp"
#include "sparsetest/rng.hpp"

using namespace sparsetest;

namespace {

// Independent oracle: direct enumeration of the defining sum of the partial
// Bell polynomial over nonnegative sequences (j_1, ..., j_{l-k+1}) with
// sum j_i = k and sum i * j_i = l.
Rational bell_bruteforce(int ell, int k, const std::vector<Rational>& args) {
  const int len = ell - k + 1;
  std::vector<int> js(static_cast<std::size_t>(len), 0);
  Rational total = 0;
  const BigInt ell_fact = factorial_big(static_cast<unsigned>(ell));

  // depth-first over j_1..j_len
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

Rational random_rational(Rng& rng, int num_range = 9, int den_range = 9) {
  const int num = static_cast<int>(rng.index(static_cast<std::uint64_t>(2 * num_range + 1))) - num_range;
  const int den = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(den_range)));
  return Rational(num, den);
}

std::vector<double> to_doubles(const std::vector<Rational>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_double(v[i]);
  return out;
}

// Moments of the sum of two independent variables via the binomial formula.
std::vector<Rational> convolve_moments(const std::vector<Rational>& a,
                                       const std::vector<Rational>& b) {
  REQUIRE(a.size() == b.size());
  const int order = static_cast<int>(a.size());
  std::vector<Rational> am(a), bm(b);
  am.insert(am.begin(), Rational(1));
  bm.insert(bm.begin(), Rational(1));
  std::vector<Rational> out(static_cast<std::size_t>(order));
  for (int l = 1; l <= order; ++l) {
    Rational acc = 0;
    for (int j = 0; j <= l; ++j)
      acc += Rational(binomial_u64(static_cast<unsigned>(l), static_cast<unsigned>(j))) *
             am[static_cast<std::size_t>(j)] * bm[static_cast<std::size_t>(l - j)];
    out[static_cast<std::size_t>(l - 1)] = acc;
  }
  return out;
}

const std::vector<Rational> kGaussianMoments = {0, 1, 0, 3, 0, 15, 0, 105};
const std::vector<Rational> kRademacherMoments = {0, 1, 0, 1, 0, 1, 0, 1};

}  // namespace

TEST_CASE("partial bell polynomial matches brute-force enumeration") {
  Rng rng(20240901);
  for (int ell = 1; ell <= 10; ++ell) {
    for (int k = 1; k <= ell; ++k) {
      for (int rep = 0; rep < 4; ++rep) {
        std::vector<Rational> args;
        for (int i = 0; i < ell - k + 1; ++i) args.push_back(random_rational(rng));
        const Rational expected = bell_bruteforce(ell, k, args);
        const Rational got = bell_polynomial<Rational>(ell, k, args);
        REQUIRE(got == expected);
      }
    }
  }
}

TEST_CASE("bell polynomial pinned values") {
  const std::vector<double> a5 = {1, 2, 3, 4, 7};
  CHECK(bell_polynomial(5, 1, a5) == 7.0);
  const std::vector<double> a1 = {3};
  CHECK(bell_polynomial(2, 2, a1) == 9.0);
  const std::vector<double> a3 = {1, 2, 3};
  CHECK(bell_polynomial(4, 2, a3) == 24.0);  // 3*2^2 + 4*1*3
}

TEST_CASE("bell polynomial domain errors") {
  const std::vector<double> args = {1, 2, 3};
  CHECK_THROWS_AS(bell_polynomial(3, 0, args), DomainError);
  CHECK_THROWS_AS(bell_polynomial(3, 4, args), DomainError);
  CHECK_THROWS_AS(bell_polynomial(0, 0, args), DomainError);
  CHECK_THROWS_AS(bell_polynomial(kMaxTransformOrder + 2, 1,
                                  std::vector<double>(kMaxTransformOrder + 2, 1.0)),
                  DomainError);
}

TEST_CASE("moment to cumulant transform on known distributions") {
  SECTION("standard gaussian has only kappa_2") {
    const auto kappa = moments_to_cumulants<Rational>(kGaussianMoments);
    CHECK(kappa[0] == 0);
    CHECK(kappa[1] == 1);
    for (std::size_t i = 2; i < kappa.size(); ++i) CHECK(kappa[i] == 0);
  }
  SECTION("rademacher kappa_4 = -2, kappa_6 = 16") {
    const auto kappa = moments_to_cumulants<Rational>(kRademacherMoments);
    CHECK(kappa[1] == 1);
    CHECK(kappa[3] == -2);
    CHECK(kappa[5] == 16);
  }
  SECTION("poisson(1) cumulants are all 1") {
    const std::vector<Rational> m = {1, 2, 5, 15};
    const auto kappa = moments_to_cumulants<Rational>(m);
    for (const auto& k : kappa) CHECK(k == 1);
  }
}

TEST_CASE("cumulant to moment transform inverts") {
  SECTION("gaussian cumulants") {
    const std::vector<Rational> kappa = {0, 1, 0, 0, 0, 0};
    const auto m = cumulants_to_moments<Rational>(kappa);
    CHECK(m == std::vector<Rational>({0, 1, 0, 3, 0, 15}));
  }
  SECTION("poisson cumulants") {
    const std::vector<Rational> kappa = {1, 1, 1, 1};
    CHECK(cumulants_to_moments<Rational>(kappa) == std::vector<Rational>({1, 2, 5, 15}));
  }
  SECTION("zero cumulants give the point mass at zero") {
    const std::vector<Rational> kappa(8, Rational(0));
    for (const auto& m : cumulants_to_moments<Rational>(kappa)) CHECK(m == 0);
  }
}

TEST_CASE("round trip is the identity") {
  Rng rng(7);
  SECTION("exact arithmetic, moments up to 1e3, orders up to 12") {
    for (int rep = 0; rep < 30; ++rep) {
      const int order = 2 + static_cast<int>(rng.index(11));
      std::vector<Rational> m;
      for (int i = 0; i < order; ++i) m.push_back(random_rational(rng, 1000, 7));
      const auto round = cumulants_to_moments<Rational>(moments_to_cumulants<Rational>(m));
      REQUIRE(round == m);
    }
  }
  SECTION("double arithmetic on distribution-sized moments") {
    const auto check = [](const std::vector<Rational>& mr) {
      const auto m = to_doubles(mr);
      const auto round = cumulants_to_moments<double>(moments_to_cumulants<double>(m));
      for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(std::abs(round[i] - m[i]) <= 1e-9);
    };
    check(kGaussianMoments);
    check(kRademacherMoments);
    check({1, 2, 5, 15, 52, 203});  // poisson(1), bell numbers
  }
}

TEST_CASE("mean-zero recurrence") {
  SECTION("pinned values") {
    const std::vector<double> rad = {0, 1, 0, 1};
    CHECK(cumulant_recurrence<double>(rad)[3] == Catch::Approx(-2.0).margin(1e-12));
    const double s2 = 1.7;
    const std::vector<double> gauss = {0, s2, 0, 3 * s2 * s2};
    CHECK(cumulant_recurrence<double>(gauss)[3] == Catch::Approx(0.0).margin(1e-12));
    const double gamma = 0.001;
    const std::vector<double> mix = {0, 1, 0, 3 - 2 * gamma};
    CHECK(cumulant_recurrence<double>(mix)[3] == Catch::Approx(-0.002).margin(1e-15));
  }
  SECTION("nonzero mean is rejected") {
    const std::vector<double> m = {0.5, 1, 0, 3};
    CHECK_THROWS_AS(cumulant_recurrence<double>(m), PreconditionError);
  }
  SECTION("agrees with the bell transform") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> m(8);
      m[0] = 0.0;
      for (std::size_t i = 1; i < m.size(); ++i) m[i] = rng.uniform(-2.0, 2.0);
      const auto a = cumulant_recurrence<double>(m);
      const auto b = moments_to_cumulants<double>(m);
      for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
    }
  }
}

TEST_CASE("cumulants add over independent sums") {
  const auto sum_moments = convolve_moments(kRademacherMoments, kGaussianMoments);
  const auto ka = moments_to_cumulants<Rational>(kRademacherMoments);
  const auto kb = moments_to_cumulants<Rational>(kGaussianMoments);
  const auto ks = moments_to_cumulants<Rational>(sum_moments);
  for (std::size_t i = 0; i < ks.size(); ++i) REQUIRE(ks[i] == ka[i] + kb[i]);

  // double path stays within 1e-9
  const auto kd = moments_to_cumulants<double>(to_doubles(sum_moments));
  for (std::size_t i = 0; i < kd.size(); ++i)
    CHECK(std::abs(kd[i] - to_double(ks[i])) <= 1e-9);
}

TEST_CASE("cumulants are l-homogeneous") {
  Rng rng(13);
  for (double c : {0.5, 2.0, -1.0}) {
    std::vector<double> m(8);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-1.5, 1.5);
    std::vector<double> scaled(m);
    for (std::size_t i = 0; i < m.size(); ++i)
      scaled[i] *= pow_int(c, static_cast<std::uint64_t>(i + 1));
    const auto k = moments_to_cumulants<double>(m);
    const auto ks = moments_to_cumulants<double>(scaled);
    for (std::size_t i = 0; i < m.size(); ++i)
      CHECK(std::abs(ks[i] - pow_int(c, static_cast<std::uint64_t>(i + 1)) * k[i]) <= 1e-9);
  }
}

TEST_CASE("symmetrized variable doubles even cumulants and kills odd ones") {
  // moments of X - X' via convolution with the reflected sequence
  const std::vector<Rational> poisson = {1, 2, 5, 15, 52, 203, 877, 4140};
  std::vector<Rational> reflected(poisson);
  for (std::size_t i = 0; i < reflected.size(); i += 2) reflected[i] = -reflected[i];
  const auto diff_moments = convolve_moments(poisson, reflected);
  const auto kd = moments_to_cumulants<Rational>(diff_moments);
  const auto k = moments_to_cumulants<Rational>(poisson);
  for (std::size_t i = 0; i < kd.size(); ++i) {
    if (i % 2 == 0) REQUIRE(kd[i] == 0);       // odd order
    else REQUIRE(kd[i] == 2 * k[i]);           // even order
  }
}

TEST_CASE("cumulant magnitude bound") {
  CHECK(cumulant_upper_bound(2, 1.0) == Catch::Approx(std::exp(2.0) * 2.0));
  CHECK(cumulant_upper_bound(4, 1.0) == Catch::Approx(std::exp(4.0) * 24.0));
  CHECK(cumulant_upper_bound(4, 1.0) >= 2.0);   // rademacher |kappa_4|
  CHECK(cumulant_upper_bound(6, 1.0) >= 16.0);  // rademacher |kappa_6|
  CHECK_THROWS_AS(cumulant_upper_bound(3, 1.0), DomainError);

  // battery of mean-zero models, even orders <= 12: the l-th absolute moment
  // equals the raw moment at even orders
  const std::vector<std::vector<Rational>> batteries = {
      kGaussianMoments, kRademacherMoments,
      convolve_moments(kRademacherMoments, kGaussianMoments)};
  for (const auto& m : batteries) {
    std::vector<Rational> m12(m);
    // extend gaussian/rademacher style batteries to order 8 only; they are
    // already length 8
    const auto kappa = moments_to_cumulants<Rational>(m12);
    for (std::size_t ell = 2; ell <= m12.size(); ell += 2) {
      const double bound = cumulant_upper_bound(static_cast<int>(ell),
                                                to_double(m12[ell - 1]));
      CHECK(std::abs(to_double(kappa[ell - 1])) <= bound);
    }
  }
}
