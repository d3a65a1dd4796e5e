#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sparsetest/bell.hpp"
#include "sparsetest/errors.hpp"
#include "sparsetest/numeric.hpp"
#include "sparsetest/rational.hpp"
#include "sparsetest/rng.hpp"

namespace sparsetest {

struct RademacherSpec {
  double scale = 1.0;
};
struct DiscreteUniformSpec {
  std::vector<double> support;
};
struct ContinuousUniformSpec {
  double lo = -1.0;
  double hi = 1.0;
};
struct GaussianSpec {
  double mean = 0.0;
  double variance = 1.0;
};
struct PoissonSpec {
  double rate = 1.0;
};
// Gaussian with probability 1 - gamma, uniform +-1 with probability gamma.
struct GaussBernoulliSpec {
  double gamma = 0.0;
};
// Moment-only model: no sampler, moments given directly as m_1, m_2, ...
struct CustomMomentsSpec {
  std::vector<double> moments;
};
// Point mass at zero (the noiseless noise model).
struct ZeroSpec {};

using ModelSpec = std::variant<RademacherSpec, DiscreteUniformSpec, ContinuousUniformSpec,
                               GaussianSpec, PoissonSpec, GaussBernoulliSpec, CustomMomentsSpec,
                               ZeroSpec>;

// A univariate coordinate or noise distribution with a sampler (where one
// exists) and exact moment oracles.  Standardization is an explicit affine
// transform x -> (x - mean) / sd stored with the model.
class UnivariateModel {
 public:
  explicit UnivariateModel(ModelSpec spec, bool standardized = false)
      : spec_(std::move(spec)), standardized_(standardized) {
    validate();
    raw_mean_ = raw_moment(1);
    raw_var_ = std::numeric_limits<double>::quiet_NaN();
    try {
      raw_var_ = raw_moment(2) - raw_mean_ * raw_mean_;
    } catch (const TruncationError&) {
      // custom_moments with a single entry; fine unless standardization is asked for
    }
    if (standardized_) {
      if (!(raw_var_ > 0.0)) throw DomainError("cannot standardize a zero-variance model");
      raw_sd_ = std::sqrt(raw_var_);
    } else {
      raw_mean_ = 0.0;  // identity affine
      raw_sd_ = 1.0;
    }
  }

  static UnivariateModel rademacher(double scale = 1.0) {
    return UnivariateModel(RademacherSpec{scale});
  }
  static UnivariateModel discrete_uniform(std::vector<double> support, bool standardized = false) {
    return UnivariateModel(DiscreteUniformSpec{std::move(support)}, standardized);
  }
  static UnivariateModel continuous_uniform(double lo, double hi, bool standardized = false) {
    return UnivariateModel(ContinuousUniformSpec{lo, hi}, standardized);
  }
  static UnivariateModel gaussian(double mean, double variance) {
    return UnivariateModel(GaussianSpec{mean, variance});
  }
  static UnivariateModel poisson(double rate, bool standardized = false) {
    return UnivariateModel(PoissonSpec{rate}, standardized);
  }
  static UnivariateModel gauss_bernoulli(double gamma) {
    return UnivariateModel(GaussBernoulliSpec{gamma});
  }
  static UnivariateModel custom_moments(std::vector<double> moments) {
    return UnivariateModel(CustomMomentsSpec{std::move(moments)});
  }
  static UnivariateModel zero() { return UnivariateModel(ZeroSpec{}); }

  const ModelSpec& spec() const { return spec_; }
  bool standardized() const { return standardized_; }

  std::string kind_name() const {
    struct V {
      std::string operator()(const RademacherSpec&) const { return "rademacher"; }
      std::string operator()(const DiscreteUniformSpec&) const { return "discrete_uniform"; }
      std::string operator()(const ContinuousUniformSpec&) const { return "continuous_uniform"; }
      std::string operator()(const GaussianSpec&) const { return "gaussian"; }
      std::string operator()(const PoissonSpec&) const { return "poisson"; }
      std::string operator()(const GaussBernoulliSpec&) const { return "gauss_bernoulli"; }
      std::string operator()(const CustomMomentsSpec&) const { return "custom_moments"; }
      std::string operator()(const ZeroSpec&) const { return "zero"; }
    };
    return std::visit(V{}, spec_);
  }

  double mean() const { return standardized_ ? 0.0 : raw_mean_or(); }
  double variance() const { return standardized_ ? 1.0 : raw_var_; }

  // Largest attainable |sample|, infinity for unbounded kinds.
  double support_bound() const {
    double lo = 0.0, hi = 0.0;
    if (std::holds_alternative<RademacherSpec>(spec_)) {
      const double s = std::abs(std::get<RademacherSpec>(spec_).scale);
      lo = -s;
      hi = s;
    } else if (std::holds_alternative<DiscreteUniformSpec>(spec_)) {
      const auto& sup = std::get<DiscreteUniformSpec>(spec_).support;
      lo = *std::min_element(sup.begin(), sup.end());
      hi = *std::max_element(sup.begin(), sup.end());
    } else if (std::holds_alternative<ContinuousUniformSpec>(spec_)) {
      lo = std::get<ContinuousUniformSpec>(spec_).lo;
      hi = std::get<ContinuousUniformSpec>(spec_).hi;
    } else if (std::holds_alternative<ZeroSpec>(spec_)) {
      return 0.0;
    } else {
      return kInf;
    }
    return std::max(std::abs(lo - raw_mean_), std::abs(hi - raw_mean_)) / raw_sd_;
  }

  bool has_sampler() const { return !std::holds_alternative<CustomMomentsSpec>(spec_); }

  double sample(Rng& rng) const {
    struct V {
      Rng& rng;
      double operator()(const RademacherSpec& s) const { return s.scale * rng.rademacher(); }
      double operator()(const DiscreteUniformSpec& s) const {
        return s.support[static_cast<std::size_t>(rng.index(s.support.size()))];
      }
      double operator()(const ContinuousUniformSpec& s) const { return rng.uniform(s.lo, s.hi); }
      double operator()(const GaussianSpec& s) const {
        return s.mean + std::sqrt(s.variance) * rng.gaussian();
      }
      double operator()(const PoissonSpec& s) const {
        return static_cast<double>(rng.poisson(s.rate));
      }
      double operator()(const GaussBernoulliSpec& s) const {
        const double u = rng.uniform01();
        const double g = rng.gaussian();   // consumed either way: fixed draw count per sample
        const double r = rng.rademacher();
        return u < s.gamma ? r : g;
      }
      double operator()(const CustomMomentsSpec&) const {
        throw UnsupportedSampler("custom_moments models have no sampler");
      }
      double operator()(const ZeroSpec&) const { return 0.0; }
    };
    const double raw = std::visit(V{rng}, spec_);
    return (raw - raw_mean_) / raw_sd_;
  }

  // Raw moments m_1 .. m_max_order of the (possibly standardized) variable.
  // Odd moments of symmetric models are returned as exact zeros.
  std::vector<double> exact_moments(int max_order) const {
    if (max_order < 1) throw DomainError("max_order must be >= 1");
    if (auto r = exact_moments_rational(max_order)) {
      std::vector<double> out(r->size());
      for (std::size_t i = 0; i < r->size(); ++i) out[i] = to_double((*r)[i]);
      return out;
    }
    std::vector<double> raw(static_cast<std::size_t>(max_order) + 1);
    raw[0] = 1.0;
    for (int l = 1; l <= max_order; ++l) raw[static_cast<std::size_t>(l)] = raw_moment(l);
    std::vector<double> out(static_cast<std::size_t>(max_order));
    if (!standardized_) {
      for (int l = 1; l <= max_order; ++l) out[static_cast<std::size_t>(l - 1)] = raw[static_cast<std::size_t>(l)];
    } else {
      for (int l = 1; l <= max_order; ++l) {
        CompensatedSum central;
        for (int j = 0; j <= l; ++j) {
          central.add(static_cast<double>(binomial_u64(static_cast<unsigned>(l), static_cast<unsigned>(j))) *
                      raw[static_cast<std::size_t>(j)] * pow_int(-raw_mean_, static_cast<std::uint64_t>(l - j)));
        }
        out[static_cast<std::size_t>(l - 1)] = central.value() / pow_int(raw_sd_, static_cast<std::uint64_t>(l));
      }
    }
    if (symmetric()) {
      for (int l = 1; l <= max_order; l += 2) out[static_cast<std::size_t>(l - 1)] = 0.0;
    }
    return out;
  }

  // Exact rational moments, available whenever the affine standardization
  // keeps the moment sequence rational (all raw kinds; standardized kinds
  // that are symmetric about their mean).  Model parameters are doubles and
  // hence dyadic rationals, so no additional rounding enters here.
  std::optional<std::vector<Rational>> exact_moments_rational(int max_order) const {
    if (max_order < 1) throw DomainError("max_order must be >= 1");
    auto raw = raw_moments_rational(max_order);
    if (!raw) return std::nullopt;
    if (!standardized_) {
      raw->erase(raw->begin());  // drop m_0
      return raw;
    }
    const Rational mu = (*raw)[1];
    const Rational var = (*raw)[2] - mu * mu;
    if (var <= 0) return std::nullopt;
    const bool sym = symmetric_about_mean();
    std::vector<Rational> out(static_cast<std::size_t>(max_order));
    for (int l = 1; l <= max_order; ++l) {
      if (l % 2 == 1) {
        if (!sym) return std::nullopt;  // odd central moment over sd^odd is irrational
        out[static_cast<std::size_t>(l - 1)] = 0;
        continue;
      }
      Rational central = 0;
      for (int j = 0; j <= l; ++j) {
        central += Rational(binomial_u64(static_cast<unsigned>(l), static_cast<unsigned>(j))) *
                   (*raw)[static_cast<std::size_t>(j)] * pow_rational(-mu, static_cast<unsigned>(l - j));
      }
      out[static_cast<std::size_t>(l - 1)] = central / pow_rational(var, static_cast<unsigned>(l / 2));
    }
    return out;
  }

  // Symmetric as a law on the real line (about 0 after standardization).
  bool symmetric() const {
    if (standardized_) return symmetric_about_mean();
    struct V {
      bool operator()(const RademacherSpec&) const { return true; }
      bool operator()(const DiscreteUniformSpec& s) const {
        auto sorted = s.support;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        for (std::size_t i = 0; i < n; ++i)
          if (std::abs(sorted[i] + sorted[n - 1 - i]) > 1e-12) return false;
        return true;
      }
      bool operator()(const ContinuousUniformSpec& s) const { return std::abs(s.lo + s.hi) <= 1e-12; }
      bool operator()(const GaussianSpec& s) const { return s.mean == 0.0; }
      bool operator()(const PoissonSpec&) const { return false; }
      bool operator()(const GaussBernoulliSpec&) const { return true; }
      bool operator()(const CustomMomentsSpec& s) const {
        for (std::size_t i = 0; i < s.moments.size(); i += 2)
          if (s.moments[i] != 0.0) return false;
        return true;
      }
      bool operator()(const ZeroSpec&) const { return true; }
    };
    return std::visit(V{}, spec_);
  }

  // kappa_1 .. kappa_max_order through the moment -> cumulant transform;
  // exact rational arithmetic whenever the moments allow it.
  std::vector<double> known_cumulants(int max_order) const {
    if (auto r = exact_moments_rational(max_order)) {
      auto kr = moments_to_cumulants<Rational>(*r);
      std::vector<double> out(kr.size());
      for (std::size_t i = 0; i < kr.size(); ++i) out[i] = to_double(kr[i]);
      return out;
    }
    const auto m = exact_moments(max_order);
    return moments_to_cumulants<double>(m);
  }

  bool has_mgf() const {
    return std::holds_alternative<RademacherSpec>(spec_) ||
           std::holds_alternative<DiscreteUniformSpec>(spec_) ||
           std::holds_alternative<ContinuousUniformSpec>(spec_) ||
           std::holds_alternative<ZeroSpec>(spec_);
  }

  // M(z) = E[e^{zX}] on the complex plane, closed form, bounded kinds only.
  std::complex<double> mgf(std::complex<double> z) const {
    const std::complex<double> zr = z / raw_sd_;
    return std::exp(-z * (raw_mean_ / raw_sd_)) * raw_mgf(zr);
  }

  // M'(z) = E[X e^{zX}].
  std::complex<double> mgf_derivative(std::complex<double> z) const {
    const std::complex<double> zr = z / raw_sd_;
    const std::complex<double> shift = std::exp(-z * (raw_mean_ / raw_sd_));
    return shift * (raw_mgf_derivative(zr) / raw_sd_ - (raw_mean_ / raw_sd_) * raw_mgf(zr));
  }

  std::map<std::string, std::string> to_config() const;
  static UnivariateModel from_config(const std::map<std::string, std::string>& kv);
  std::string to_config_text() const;
  static UnivariateModel from_config_text(const std::string& text);

 private:
  void validate() const {
    if (const auto* s = std::get_if<DiscreteUniformSpec>(&spec_)) {
      if (s->support.empty()) throw DomainError("discrete_uniform needs a nonempty support");
    } else if (const auto* u = std::get_if<ContinuousUniformSpec>(&spec_)) {
      if (!(u->lo < u->hi)) throw DomainError("continuous_uniform needs lo < hi");
    } else if (const auto* g = std::get_if<GaussianSpec>(&spec_)) {
      if (g->variance < 0.0) throw DomainError("gaussian variance must be >= 0");
    } else if (const auto* p = std::get_if<PoissonSpec>(&spec_)) {
      if (p->rate < 0.0) throw DomainError("poisson rate must be >= 0");
    } else if (const auto* m = std::get_if<GaussBernoulliSpec>(&spec_)) {
      if (m->gamma < 0.0 || m->gamma > 1.0) throw DomainError("mixture gamma must be in [0, 1]");
    } else if (const auto* c = std::get_if<CustomMomentsSpec>(&spec_)) {
      if (c->moments.empty()) throw DomainError("custom_moments needs at least one moment");
    }
  }

  bool symmetric_about_mean() const {
    struct V {
      bool operator()(const RademacherSpec&) const { return true; }
      bool operator()(const DiscreteUniformSpec& s) const {
        auto sorted = s.support;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        double mean = 0.0;
        for (double v : sorted) mean += v;
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
          if (std::abs(sorted[i] + sorted[n - 1 - i] - 2.0 * mean) > 1e-12) return false;
        return true;
      }
      bool operator()(const ContinuousUniformSpec&) const { return true; }
      bool operator()(const GaussianSpec&) const { return true; }
      bool operator()(const PoissonSpec&) const { return false; }
      bool operator()(const GaussBernoulliSpec&) const { return true; }
      bool operator()(const CustomMomentsSpec& s) const {
        // Symmetric about the mean iff all odd central moments vanish.
        const int order = static_cast<int>(s.moments.size());
        std::vector<double> raw(static_cast<std::size_t>(order) + 1);
        raw[0] = 1.0;
        for (int l = 1; l <= order; ++l) raw[static_cast<std::size_t>(l)] = s.moments[static_cast<std::size_t>(l - 1)];
        const double mu = raw[1];
        for (int l = 3; l <= order; l += 2) {
          CompensatedSum central;
          for (int j = 0; j <= l; ++j)
            central.add(static_cast<double>(binomial_u64(static_cast<unsigned>(l), static_cast<unsigned>(j))) *
                        raw[static_cast<std::size_t>(j)] * pow_int(-mu, static_cast<std::uint64_t>(l - j)));
          if (std::abs(central.value()) > 1e-12) return false;
        }
        return true;
      }
      bool operator()(const ZeroSpec&) const { return true; }
    };
    return std::visit(V{}, spec_);
  }

  double raw_mean_or() const { return raw_moment(1); }

  // Raw moment E[X^l] of the underlying (non-standardized) spec, double path.
  double raw_moment(int l) const {
    if (auto r = raw_moments_rational(l)) return to_double((*r)[static_cast<std::size_t>(l)]);
    // All currently supported kinds have rational raw moments; this fallback
    // integrates densities supplied by future kinds.
    throw NumericalError("no moment oracle for kind " + kind_name());
  }

  std::optional<std::vector<Rational>> raw_moments_rational(int max_order) const {
    std::vector<Rational> m(static_cast<std::size_t>(max_order) + 1);
    m[0] = 1;
    if (const auto* s = std::get_if<RademacherSpec>(&spec_)) {
      const Rational sc = rational_from_double(s->scale);
      for (int l = 1; l <= max_order; ++l)
        m[static_cast<std::size_t>(l)] = (l % 2 == 0) ? pow_rational(sc, static_cast<unsigned>(l)) : Rational(0);
    } else if (const auto* d = std::get_if<DiscreteUniformSpec>(&spec_)) {
      const std::size_t n = d->support.size();
      for (int l = 1; l <= max_order; ++l) {
        Rational acc = 0;
        for (double v : d->support) acc += pow_rational(rational_from_double(v), static_cast<unsigned>(l));
        m[static_cast<std::size_t>(l)] = acc / Rational(static_cast<unsigned>(n));
      }
    } else if (const auto* u = std::get_if<ContinuousUniformSpec>(&spec_)) {
      const Rational a = rational_from_double(u->lo), b = rational_from_double(u->hi);
      for (int l = 1; l <= max_order; ++l) {
        m[static_cast<std::size_t>(l)] = (pow_rational(b, static_cast<unsigned>(l + 1)) - pow_rational(a, static_cast<unsigned>(l + 1))) /
                                         (Rational(l + 1) * (b - a));
      }
    } else if (const auto* g = std::get_if<GaussianSpec>(&spec_)) {
      const Rational mu = rational_from_double(g->mean), v = rational_from_double(g->variance);
      for (int l = 1; l <= max_order; ++l) {
        Rational prev2 = (l >= 2) ? m[static_cast<std::size_t>(l - 2)] : Rational(0);
        m[static_cast<std::size_t>(l)] = mu * m[static_cast<std::size_t>(l - 1)] + Rational(l - 1) * v * prev2;
      }
    } else if (const auto* p = std::get_if<PoissonSpec>(&spec_)) {
      const Rational lam = rational_from_double(p->rate);
      // m_{l+1} = lambda * sum_i C(l, i) m_i
      for (int l = 0; l < max_order; ++l) {
        Rational acc = 0;
        for (int i = 0; i <= l; ++i)
          acc += Rational(binomial_u64(static_cast<unsigned>(l), static_cast<unsigned>(i))) * m[static_cast<std::size_t>(i)];
        m[static_cast<std::size_t>(l + 1)] = lam * acc;
      }
    } else if (const auto* mx = std::get_if<GaussBernoulliSpec>(&spec_)) {
      const Rational g = rational_from_double(mx->gamma);
      std::vector<Rational> gauss(static_cast<std::size_t>(max_order) + 1);
      gauss[0] = 1;
      for (int l = 1; l <= max_order; ++l)
        gauss[static_cast<std::size_t>(l)] = (l >= 2) ? Rational(l - 1) * gauss[static_cast<std::size_t>(l - 2)] : Rational(0);
      for (int l = 1; l <= max_order; ++l) {
        const Rational rad = (l % 2 == 0) ? Rational(1) : Rational(0);
        m[static_cast<std::size_t>(l)] = (Rational(1) - g) * gauss[static_cast<std::size_t>(l)] + g * rad;
      }
    } else if (const auto* c = std::get_if<CustomMomentsSpec>(&spec_)) {
      if (static_cast<int>(c->moments.size()) < max_order)
        throw TruncationError("custom_moments defined through order " + std::to_string(c->moments.size()) +
                              ", requested " + std::to_string(max_order));
      for (int l = 1; l <= max_order; ++l)
        m[static_cast<std::size_t>(l)] = rational_from_double(c->moments[static_cast<std::size_t>(l - 1)]);
    } else if (std::holds_alternative<ZeroSpec>(spec_)) {
      for (int l = 1; l <= max_order; ++l) m[static_cast<std::size_t>(l)] = 0;
    } else {
      return std::nullopt;
    }
    return m;
  }

  std::complex<double> raw_mgf(std::complex<double> z) const {
    if (const auto* s = std::get_if<RademacherSpec>(&spec_)) return std::cosh(s->scale * z);
    if (const auto* d = std::get_if<DiscreteUniformSpec>(&spec_)) {
      std::complex<double> acc = 0.0;
      for (double v : d->support) acc += std::exp(z * v);
      return acc / static_cast<double>(d->support.size());
    }
    if (const auto* u = std::get_if<ContinuousUniformSpec>(&spec_)) {
      if (std::abs(z) < 1e-8) {
        const double m1 = 0.5 * (u->lo + u->hi);
        const double m2 = (u->hi * u->hi + u->hi * u->lo + u->lo * u->lo) / 3.0;
        return 1.0 + z * m1 + 0.5 * z * z * m2;
      }
      return (std::exp(z * u->hi) - std::exp(z * u->lo)) / (z * (u->hi - u->lo));
    }
    if (std::holds_alternative<ZeroSpec>(spec_)) return 1.0;
    throw PreconditionError("closed-form mgf requires a bounded-support kind");
  }

  std::complex<double> raw_mgf_derivative(std::complex<double> z) const {
    if (const auto* s = std::get_if<RademacherSpec>(&spec_)) return s->scale * std::sinh(s->scale * z);
    if (const auto* d = std::get_if<DiscreteUniformSpec>(&spec_)) {
      std::complex<double> acc = 0.0;
      for (double v : d->support) acc += v * std::exp(z * v);
      return acc / static_cast<double>(d->support.size());
    }
    if (const auto* u = std::get_if<ContinuousUniformSpec>(&spec_)) {
      if (std::abs(z) < 1e-6) {
        const double m1 = 0.5 * (u->lo + u->hi);
        const double m2 = (u->hi * u->hi + u->hi * u->lo + u->lo * u->lo) / 3.0;
        const double m3 = (u->hi + u->lo) * (u->hi * u->hi + u->lo * u->lo) / 4.0;
        return m1 + z * m2 + 0.5 * z * z * m3;
      }
      const double w = u->hi - u->lo;
      return ((u->hi * std::exp(z * u->hi) - u->lo * std::exp(z * u->lo)) * z -
              (std::exp(z * u->hi) - std::exp(z * u->lo))) /
             (z * z * w);
    }
    if (std::holds_alternative<ZeroSpec>(spec_)) return 0.0;
    throw PreconditionError("closed-form mgf requires a bounded-support kind");
  }

  ModelSpec spec_;
  bool standardized_;
  double raw_mean_ = 0.0;
  double raw_var_ = 0.0;
  double raw_sd_ = 1.0;
};

using MarginalModel = UnivariateModel;
using NoiseModel = UnivariateModel;

// count iid draws; deterministic in (model, count, seed).
inline std::vector<double> sample_marginal(const UnivariateModel& model, std::size_t count,
                                           std::uint64_t seed) {
  if (count < 1) throw DomainError("need count >= 1");
  Rng rng(derive_stream(seed, 0));
  std::vector<double> out(count);
  for (double& v : out) v = model.sample(rng);
  return out;
}

// ---- config text (key = value lines) ----

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string join_doubles(const std::vector<double>& vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ",";
    out += format_double(vs[i]);
  }
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse number for key '" + key + "': " + s);
  }
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item, key));
  }
  if (out.empty()) throw ValidationError("empty list for key '" + key + "'");
  return out;
}

}  // namespace detail

inline std::map<std::string, std::string> UnivariateModel::to_config() const {
  std::map<std::string, std::string> kv;
  kv["kind"] = kind_name();
  if (standardized_) kv["standardized"] = "true";
  if (const auto* s = std::get_if<RademacherSpec>(&spec_)) {
    if (s->scale != 1.0) kv["scale"] = detail::format_double(s->scale);
  } else if (const auto* d = std::get_if<DiscreteUniformSpec>(&spec_)) {
    kv["support"] = detail::join_doubles(d->support);
  } else if (const auto* u = std::get_if<ContinuousUniformSpec>(&spec_)) {
    kv["lo"] = detail::format_double(u->lo);
    kv["hi"] = detail::format_double(u->hi);
  } else if (const auto* g = std::get_if<GaussianSpec>(&spec_)) {
    kv["mean"] = detail::format_double(g->mean);
    kv["variance"] = detail::format_double(g->variance);
  } else if (const auto* p = std::get_if<PoissonSpec>(&spec_)) {
    kv["rate"] = detail::format_double(p->rate);
  } else if (const auto* m = std::get_if<GaussBernoulliSpec>(&spec_)) {
    kv["gamma"] = detail::format_double(m->gamma);
  } else if (const auto* c = std::get_if<CustomMomentsSpec>(&spec_)) {
    kv["moments"] = detail::join_doubles(c->moments);
  }
  return kv;
}

inline UnivariateModel UnivariateModel::from_config(const std::map<std::string, std::string>& kv) {
  auto rest = kv;
  const auto take = [&rest](const std::string& key) -> std::optional<std::string> {
    auto it = rest.find(key);
    if (it == rest.end()) return std::nullopt;
    std::string v = it->second;
    rest.erase(it);
    return v;
  };
  const auto kind = take("kind");
  if (!kind) throw ValidationError("model config is missing 'kind'");
  bool standardized = false;
  if (auto s = take("standardized")) {
    if (*s == "true" || *s == "1") standardized = true;
    else if (*s == "false" || *s == "0") standardized = false;
    else throw ValidationError("standardized must be true or false");
  }
  ModelSpec spec;
  if (*kind == "rademacher") {
    RademacherSpec s;
    if (auto v = take("scale")) s.scale = detail::parse_double(*v, "scale");
    spec = s;
  } else if (*kind == "discrete_uniform") {
    auto v = take("support");
    if (!v) throw ValidationError("discrete_uniform needs 'support'");
    spec = DiscreteUniformSpec{detail::parse_double_list(*v, "support")};
  } else if (*kind == "continuous_uniform") {
    auto lo = take("lo"), hi = take("hi");
    if (!lo || !hi) throw ValidationError("continuous_uniform needs 'lo' and 'hi'");
    spec = ContinuousUniformSpec{detail::parse_double(*lo, "lo"), detail::parse_double(*hi, "hi")};
  } else if (*kind == "gaussian") {
    GaussianSpec s;
    if (auto v = take("mean")) s.mean = detail::parse_double(*v, "mean");
    if (auto v = take("variance")) s.variance = detail::parse_double(*v, "variance");
    spec = s;
  } else if (*kind == "poisson") {
    PoissonSpec s;
    if (auto v = take("rate")) s.rate = detail::parse_double(*v, "rate");
    spec = s;
  } else if (*kind == "gauss_bernoulli") {
    auto v = take("gamma");
    if (!v) throw ValidationError("gauss_bernoulli needs 'gamma'");
    spec = GaussBernoulliSpec{detail::parse_double(*v, "gamma")};
  } else if (*kind == "custom_moments") {
    auto v = take("moments");
    if (!v) throw ValidationError("custom_moments needs 'moments'");
    spec = CustomMomentsSpec{detail::parse_double_list(*v, "moments")};
  } else if (*kind == "zero") {
    spec = ZeroSpec{};
  } else {
    throw ValidationError("unknown model kind: " + *kind);
  }
  if (!rest.empty()) throw ValidationError("unknown model config key: " + rest.begin()->first);
  return UnivariateModel(std::move(spec), standardized);
}

inline std::string UnivariateModel::to_config_text() const {
  std::string out;
  for (const auto& [k, v] : to_config()) out += k + " = " + v + "\n";
  return out;
}

inline UnivariateModel UnivariateModel::from_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    // inline form uses ';' separators, file form one key per line
    std::stringstream parts(line);
    std::string part;
    while (std::getline(parts, part, ';')) {
      part = detail::trim(part);
      if (part.empty() || part[0] == '#') continue;
      const auto eq = part.find('=');
      if (eq == std::string::npos) throw ValidationError("expected 'key = value', got: " + part);
      const std::string key = detail::trim(part.substr(0, eq));
      const std::string val = detail::trim(part.substr(eq + 1));
      if (kv.count(key)) throw ValidationError("duplicate model config key: " + key);
      kv[key] = val;
    }
  }
  return from_config(kv);
}

}  // namespace sparsetest
