// Command-line front end: builds an experiment config from flags (or loads
// one from a file), runs it, and emits JSON-lines rows on stdout.  Exit
// codes: 0 success, 2 validation error, 3 numerical error.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "sparsetest/sparsetest.hpp"

namespace {

using sparsetest::ExperimentConfig;

std::map<std::string, std::string> model_section(const std::string& text) {
  // accepts a path to a key = value file or an inline "k = v; k = v" string
  std::string content = text;
  if (text.find('=') == std::string::npos) {
    std::ifstream is(text);
    if (!is) throw sparsetest::ValidationError("cannot read model config: " + text);
    content.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  }
  return sparsetest::UnivariateModel::from_config_text(content).to_config();
}

void add_if(std::map<std::string, std::string>& params, const std::string& key,
            const std::string& value) {
  if (!value.empty()) params[key] = value;
}

int run(const ExperimentConfig& config, const std::string& outdir) {
  sparsetest::RunOptions options;
  if (!outdir.empty()) options.output_dir = outdir;
  options.echo = &std::cout;
  sparsetest::run_experiment(config, options);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsity testing for noisy linear measurements"};
  app.require_subcommand(0, 1);

  std::string outdir;
  app.add_option("--outdir", outdir,
                 "output directory for JSONL/CSV records (default: $SPARSETEST_OUTDIR or .)");

  ExperimentConfig config;
  std::string model_text, noise_text;

  auto* from_file = app.add_subcommand("run", "run an experiment from a config file");
  std::string config_path;
  from_file->add_option("config", config_path, "experiment config file")->required();

  auto* simulate = app.add_subcommand("simulate", "generate a measurement batch CSV");
  {
    static std::string weights, samples, seed, file;
    simulate->add_option("--model", model_text, "marginal config (file or inline)")->required();
    simulate->add_option("--noise", noise_text, "noise config (file or inline)")->required();
    simulate->add_option("--weights", weights, "comma-separated target vector")->required();
    simulate->add_option("--samples", samples, "number of rows")->required();
    simulate->add_option("--seed", seed, "master seed");
    simulate->add_option("--file", file, "output CSV file name");
    simulate->callback([&, p = simulate] {
      config.command = "simulate";
      add_if(config.params, "weights", weights);
      add_if(config.params, "samples", samples);
      add_if(config.params, "seed", seed);
      add_if(config.params, "file", file);
    });
  }

  auto* estimate = app.add_subcommand("estimate", "power sums and norm from a batch CSV");
  {
    static std::string batch, orders;
    estimate->add_option("--model", model_text, "marginal config")->required();
    estimate->add_option("--noise", noise_text, "noise config")->required();
    estimate->add_option("--batch", batch, "batch CSV path")->required();
    estimate->add_option("--orders", orders, "comma-separated even orders (default 2,4)");
    estimate->callback([&] {
      config.command = "estimate";
      add_if(config.params, "batch", batch);
      add_if(config.params, "orders", orders);
    });
  }

  auto* test = app.add_subcommand("test", "run a sparsity tester over trials");
  {
    static std::string k, c, s, eps, C, tester, schedule, samples, seed, trials, weights;
    test->add_option("--model", model_text, "marginal config")->required();
    test->add_option("--noise", noise_text, "noise config")->required();
    test->add_option("--k", k, "sparsity")->required();
    test->add_option("--eps", eps, "plain tester distance parameter");
    test->add_option("--c", c, "tolerant tester completeness distance");
    test->add_option("--s", s, "tolerant tester soundness distance");
    test->add_option("--C", C, "norm promise 1/C <= ||w||_2 <= C (default 2)");
    test->add_option("--tester", tester, "general | sympoly | noiseless (default general)");
    test->add_option("--schedule", schedule, "paper | practical:<orders> (general tester)");
    test->add_option("--samples", samples, "rows per trial")->required();
    test->add_option("--seed", seed, "master seed");
    test->add_option("--trials", trials, "number of trials (default 1)");
    test->add_option("--weights", weights, "true target vector (ground truth for rows)")
        ->required();
    test->callback([&] {
      config.command = "test";
      add_if(config.params, "k", k);
      add_if(config.params, "c", c);
      add_if(config.params, "s", s);
      add_if(config.params, "eps", eps);
      add_if(config.params, "C", C);
      add_if(config.params, "tester", tester);
      add_if(config.params, "schedule", schedule);
      add_if(config.params, "samples", samples);
      add_if(config.params, "seed", seed);
      add_if(config.params, "trials", trials);
      add_if(config.params, "weights", weights);
    });
  }

  auto* lowerbound = app.add_subcommand("lowerbound", "distinguisher advantage experiments");
  {
    static std::string construction, n, t, c, r, k, trials, seed;
    lowerbound
        ->add_option("--construction", construction,
                     "poisson-noniid | poisson-unknown-noise | gaussian-hidden")
        ->required();
    lowerbound->add_option("--n", n, "ambient dimension")->required();
    lowerbound->add_option("--t,--m", t, "rows per instance")->required();
    lowerbound->add_option("--c", c, "gaussian noise level (default 0.1)");
    lowerbound->add_option("--r", r, "poisson spread / rate (default 2)");
    lowerbound->add_option("--k", k, "hidden block size (default 1)");
    lowerbound->add_option("--trials", trials, "trials per label")->required();
    lowerbound->add_option("--seed", seed, "master seed");
    lowerbound->callback([&] {
      config.command = "lowerbound";
      add_if(config.params, "construction", construction);
      add_if(config.params, "n", n);
      add_if(config.params, "t", t);
      add_if(config.params, "c", c);
      add_if(config.params, "r", r);
      add_if(config.params, "k", k);
      add_if(config.params, "trials", trials);
      add_if(config.params, "seed", seed);
    });
  }

  auto* cumulants = app.add_subcommand("cumulants", "moment/cumulant/bound table for a model");
  {
    static std::string max_order;
    cumulants->add_option("--model", model_text, "model config")->required();
    cumulants->add_option("--max-order", max_order, "largest order (default 12)");
    cumulants->callback([&] {
      config.command = "cumulants";
      add_if(config.params, "max_order", max_order);
    });
  }

  CLI11_PARSE(app, argc, argv);
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 0;
  }

  try {
    if (from_file->parsed()) {
      std::ifstream is(config_path);
      if (!is) throw sparsetest::ValidationError("cannot read config file: " + config_path);
      const std::string text((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
      return run(sparsetest::parse_config(text), outdir);
    }
    if (!model_text.empty()) config.model = model_section(model_text);
    if (!noise_text.empty()) config.noise = model_section(noise_text);
    return run(config, outdir);
  } catch (const sparsetest::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const sparsetest::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
