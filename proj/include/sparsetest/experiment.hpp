#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sparsetest/batch.hpp"
#include "sparsetest/config.hpp"
#include "sparsetest/errors.hpp"
#include "sparsetest/estimation.hpp"
#include "sparsetest/lowerbounds.hpp"
#include "sparsetest/models.hpp"
#include "sparsetest/testers.hpp"

namespace sparsetest {

struct ExperimentRecord {
  std::string timestamp;
  std::string config_hash;
  std::vector<nlohmann::json> rows;
  nlohmann::json summary;
  std::filesystem::path jsonl_path;
  std::filesystem::path summary_path;
};

struct RunOptions {
  std::filesystem::path output_dir;  // empty: $SPARSETEST_OUTDIR or "."
  std::ostream* echo = nullptr;      // when set, JSONL rows are mirrored here
};

namespace detail {

class ParamReader {
 public:
  explicit ParamReader(const std::map<std::string, std::string>& kv) : rest_(kv) {}

  std::optional<std::string> take(const std::string& key) {
    auto it = rest_.find(key);
    if (it == rest_.end()) return std::nullopt;
    std::string v = it->second;
    rest_.erase(it);
    return v;
  }
  std::string require(const std::string& key) {
    auto v = take(key);
    if (!v) throw ValidationError("missing required parameter '" + key + "'");
    return *v;
  }
  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    auto v = take(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ValidationError("missing required parameter '" + key + "'");
    }
    return parse_double(*v, key);
  }
  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
    const double v = number(key, fallback ? std::optional<double>(static_cast<double>(*fallback))
                                          : std::nullopt);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v) throw ValidationError("parameter '" + key + "' must be an integer");
    return i;
  }
  void finish() const {
    if (!rest_.empty()) throw ValidationError("unknown parameter: " + rest_.begin()->first);
  }

 private:
  std::map<std::string, std::string> rest_;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::vector<std::int64_t> parse_order_list(const std::string& text) {
  std::vector<std::int64_t> out;
  for (double v : parse_double_list(text, "orders")) {
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v) throw ValidationError("orders must be integers");
    out.push_back(i);
  }
  return out;
}

inline const char* decision_name(Decision d) {
  return d == Decision::Sparse ? "sparse" : "far_from_sparse";
}

}  // namespace detail

// Executes one configured experiment: derives a seed per trial, appends one
// JSONL row per trial (written in trial order), and writes a CSV summary.
// On an error mid-run, rows collected so far are flushed with a truncation
// marker before the error propagates.
inline ExperimentRecord run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
  ExperimentRecord record;
  record.timestamp = detail::utc_timestamp();
  record.config_hash = config_hash(config);

  std::filesystem::path outdir = options.output_dir;
  if (outdir.empty()) {
    if (const char* env = std::getenv("SPARSETEST_OUTDIR")) outdir = env;
    else outdir = ".";
  }
  std::filesystem::create_directories(outdir);
  record.jsonl_path = outdir / (config.command + "_" + record.config_hash + ".jsonl");
  record.summary_path = outdir / (config.command + "_" + record.config_hash + "_summary.csv");

  const auto emit = [&](nlohmann::json row) {
    if (options.echo) *options.echo << row.dump() << "\n";
    record.rows.push_back(std::move(row));
  };
  const auto flush_rows = [&record]() {
    std::ofstream os(record.jsonl_path);
    if (!os) throw Error("cannot write " + record.jsonl_path.string());
    for (const auto& row : record.rows) os << row.dump() << "\n";
  };

  try {
    detail::ParamReader params(config.params);

    if (config.command == "simulate") {
      const auto model = UnivariateModel::from_config(config.model);
      const auto noise = UnivariateModel::from_config(config.noise);
      const WeightVector w(detail::parse_double_list(params.require("weights"), "weights"));
      const auto m = static_cast<std::size_t>(params.integer("samples"));
      const auto seed = static_cast<std::uint64_t>(params.integer("seed", 0));
      std::string file = params.take("file").value_or("batch_" + record.config_hash + ".csv");
      params.finish();
      const auto batch = sample_dataset(model, noise, w, m, seed);
      const auto path = outdir / file;
      std::ofstream os(path);
      if (!os) throw Error("cannot write " + path.string());
      write_batch_csv(os, batch);
      emit({{"rows", batch.rows}, {"cols", batch.cols}, {"seed", seed}});
      record.summary = {{"rows", batch.rows}, {"cols", batch.cols}, {"path", path.string()}};
    }

    else if (config.command == "cumulants") {
      const auto model = UnivariateModel::from_config(config.model);
      const auto max_order = static_cast<int>(params.integer("max_order", 12));
      params.finish();
      if (!config.noise.empty()) throw ValidationError("cumulants takes no [noise] section");
      const auto moments = model.exact_moments(max_order);
      const auto kappas = model.known_cumulants(max_order);
      for (int ell = 1; ell <= max_order; ++ell) {
        nlohmann::json row = {{"order", ell},
                              {"moment", moments[static_cast<std::size_t>(ell - 1)]},
                              {"cumulant", kappas[static_cast<std::size_t>(ell - 1)]}};
        if (ell % 2 == 0)
          row["upper_bound"] = cumulant_upper_bound(ell, moments[static_cast<std::size_t>(ell - 1)]);
        emit(std::move(row));
      }
      record.summary = {{"max_order", max_order}};
    }

    else if (config.command == "estimate") {
      const auto model = UnivariateModel::from_config(config.model);
      const auto noise = UnivariateModel::from_config(config.noise);
      const std::string batch_path = params.require("batch");
      const auto orders = detail::parse_order_list(params.take("orders").value_or("2,4"));
      params.finish();
      std::ifstream is(batch_path);
      if (!is) throw ValidationError("cannot read batch csv: " + batch_path);
      const auto batch = read_batch_csv(is);
      const auto y = batch.symmetrized ? batch.y : symmetrize_labels(batch.y);
      const double noise_m2 = noise.exact_moments(2)[1];
      const auto s2 = estimate_norm2(y, noise_m2);
      int max_order = 2;
      for (auto ell : orders) max_order = std::max(max_order, static_cast<int>(ell));
      const auto kx = model.known_cumulants(max_order);
      const auto keta = noise.known_cumulants(max_order);
      for (auto ell : orders) {
        const auto i = static_cast<std::size_t>(ell - 1);
        const double kxs = std::pow(2.0, 1.0 - static_cast<double>(ell) / 2.0) * kx[i];
        const double ketas = std::pow(2.0, 1.0 - static_cast<double>(ell) / 2.0) * keta[i];
        const auto est = estimate_power_sum(y, static_cast<int>(ell), kxs, ketas);
        emit({{"order", ell}, {"M", est.value}, {"s2", s2.value}});
      }
      record.summary = {{"rows", batch.rows}, {"s2", s2.value}};
    }

    else if (config.command == "test") {
      const auto model = UnivariateModel::from_config(config.model);
      const auto noise = UnivariateModel::from_config(config.noise);
      const WeightVector w(detail::parse_double_list(params.require("weights"), "weights"));
      const auto tester = params.take("tester").value_or("general");
      const auto k = static_cast<int>(params.integer("k"));
      const double C = params.number("C", 2.0);
      const auto samples = static_cast<std::size_t>(params.integer("samples"));
      const auto trials = static_cast<std::uint64_t>(params.integer("trials", 1));
      const auto master_seed = static_cast<std::uint64_t>(params.integer("seed", 0));

      double c = 0.0, s = 0.0, eps = 0.0;
      if (auto e = params.take("eps")) {
        eps = detail::parse_double(*e, "eps");
        c = 0.0;
        s = eps;  // plain eps-tester as the (c, s) = (0, eps) tolerant instance
      }
      if (auto cv = params.take("c")) c = detail::parse_double(*cv, "c");
      if (auto sv = params.take("s")) s = detail::parse_double(*sv, "s");
      if (eps == 0.0) eps = s;

      std::optional<Schedule> schedule;
      if (tester == "general") {
        const auto sched_text = params.take("schedule").value_or("paper");
        const double sched_eps = (s * s - c * c) / (2.0 * pow_int(C, 4));
        if (sched_text == "paper") {
          schedule = build_schedule(k, sched_eps, C, model, ScheduleMode::PaperExact);
        } else if (sched_text.rfind("practical:", 0) == 0) {
          schedule = build_schedule(k, sched_eps, C, model, ScheduleMode::Practical,
                                    detail::parse_order_list(sched_text.substr(10)));
        } else {
          throw ValidationError("schedule must be 'paper' or 'practical:<orders>'");
        }
      }
      params.finish();

      const double true_distance = dist_to_k_sparse(w, k);
      std::uint64_t successes = 0, evaluated = 0;
      CompensatedSum stat_sum;
      for (std::uint64_t trial = 0; trial < trials; ++trial) {
        const std::uint64_t seed = derive_stream(master_seed, trial);
        nlohmann::json row;
        if (tester == "noiseless") {
          if (noise.kind_name() != "zero")
            throw ValidationError("the noiseless tester needs [noise] kind = zero");
          const auto batch = sample_dataset(model, noise, w, samples, seed);
          const auto rec = noiseless_recover(batch, k);
          const bool sparse = rec.has_value();
          row = {{"seed", seed},
                 {"decision", sparse ? "sparse" : "far_from_sparse"},
                 {"true_distance", true_distance}};
          if (rec) {
            row["support"] = rec->support;
            row["weights"] = rec->weights;
          }
          if (true_distance == 0.0) {
            ++evaluated;
            if (sparse) ++successes;
          } else {
            ++evaluated;
            if (!sparse) ++successes;
          }
        } else {
          const auto labels = sample_labels(model, noise, w, samples, seed);
          TestVerdict verdict;
          if (tester == "general") {
            verdict = general_tester(labels, false, k, c, s, C, model, noise, *schedule);
          } else if (tester == "sympoly") {
            verdict = sym_poly_tester(labels, false, k, eps, C, model, noise);
          } else {
            throw ValidationError("tester must be general, sympoly, or noiseless");
          }
          row = {{"seed", seed},
                 {"decision", detail::decision_name(verdict.decision)},
                 {"statistic", verdict.statistic},
                 {"threshold", verdict.threshold},
                 {"w_tilde", verdict.w_tilde},
                 {"s2", verdict.s2},
                 {"true_distance", true_distance}};
          if (verdict.distance_estimate) row["distance_estimate"] = *verdict.distance_estimate;
          stat_sum.add(verdict.statistic);
          const bool expect_sparse = true_distance <= c;
          const bool expect_far = true_distance >= s;
          if (expect_sparse || expect_far) {
            ++evaluated;
            const bool said_sparse = verdict.decision == Decision::Sparse;
            if (said_sparse == expect_sparse) ++successes;
          }
        }
        emit(std::move(row));
      }
      record.summary = {{"trials", trials},
                        {"evaluated", evaluated},
                        {"successes", successes},
                        {"mean_statistic", trials ? stat_sum.value() / static_cast<double>(trials) : 0.0}};
      if (evaluated > 0) {
        const auto ci = clopper_pearson(successes, evaluated);
        record.summary["success_rate"] = static_cast<double>(successes) / static_cast<double>(evaluated);
        record.summary["ci_lo"] = ci.lo;
        record.summary["ci_hi"] = ci.hi;
      }
    }

    else if (config.command == "lowerbound") {
      const auto name = params.require("construction");
      LBConstruction construction;
      if (name == "poisson-noniid") construction = LBConstruction::PoissonNonIID;
      else if (name == "poisson-unknown-noise") construction = LBConstruction::PoissonUnknownNoise;
      else if (name == "gaussian-hidden") construction = LBConstruction::GaussianHidden;
      else throw ValidationError("unknown construction: " + name);
      LBParams lb;
      lb.n = static_cast<std::size_t>(params.integer("n"));
      lb.t = static_cast<std::size_t>(params.integer("t"));
      lb.c = params.number("c", 0.1);
      lb.r = static_cast<int>(params.integer("r", 2));
      lb.k = static_cast<int>(params.integer("k", 1));
      const auto trials = static_cast<std::uint64_t>(params.integer("trials"));
      const auto seed = static_cast<std::uint64_t>(params.integer("seed", 0));
      params.finish();
      if (!config.model.empty() || !config.noise.empty())
        throw ValidationError("lowerbound constructions fix their own distributions");
      const auto adv = distinguisher_advantage(construction, lb, trials, seed);
      emit({{"construction", name},
            {"params", {{"n", lb.n}, {"t", lb.t}, {"c", lb.c}, {"r", lb.r}, {"k", lb.k}}},
            {"advantage", adv.advantage},
            {"stderr", adv.stderr_value},
            {"trials", adv.trials}});
      record.summary = {{"advantage", adv.advantage}, {"stderr", adv.stderr_value}};
    }

    else {
      throw ValidationError("unknown command: " + config.command);
    }
  } catch (...) {
    record.rows.push_back({{"truncated", true}});
    flush_rows();
    throw;
  }

  flush_rows();
  {
    std::ofstream os(record.summary_path);
    if (!os) throw Error("cannot write " + record.summary_path.string());
    std::string header, values;
    for (auto it = record.summary.begin(); it != record.summary.end(); ++it) {
      if (!header.empty()) {
        header += ",";
        values += ",";
      }
      header += it.key();
      values += it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    }
    os << header << "\n" << values << "\n";
  }
  return record;
}

}  // namespace sparsetest
