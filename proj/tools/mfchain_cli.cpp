// Command-line front end for the experiment harness.
//
//   mfchain <command> [--config FILE] [--section.key VALUE ...]
//           [--seed S] [--out DIR] [--threads T] [--force]
//
// Exit codes: 0 pass, 1 error, 2 inconclusive, 3 certified failure.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mfchain/harness.hpp"
#include "mfchain/models.hpp"
#include "mfchain/simplex.hpp"

namespace h = mfchain::harness;

int main(int argc, char** argv) {
  CLI::App app{"Finite-state mean-field particle systems: flows, simulation and certificates"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_file;
  std::optional<std::string> seed, out;
  unsigned threads = 1;
  bool force = false;
  bool list_models = false;
  app.add_option("--config", config_file, "flat 'section.key = value' config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (run.seed)");
  app.add_option("--out", out, "output directory (run.out)");
  app.add_option("--threads", threads, "worker threads for replications")
      ->check(CLI::Range(1u, 1024u));
  app.add_flag("--force", force, "run experiments on models without a passing certificate");
  app.add_flag("--list-models", list_models, "print registered models and exit");

  std::map<std::string, std::optional<std::string>> overrides;
  for (const auto& key : h::config_keys()) {
    std::string help = key.help;
    if (!key.default_value.empty()) help += " [default: " + key.default_value + "]";
    app.add_option("--" + key.name, overrides[key.name], help);
  }

  const std::map<std::string, std::string> descriptions = {
      {"solve", "integrate the Kolmogorov flow on the grid"},
      {"simulate", "simulate one particle path and a Monte Carlo estimate of phi"},
      {"weak-error", "weak error of the particle system against the flow, per N"},
      {"stationary-gap", "long-run E|mu^N - nu_inf|_2^2 per N"},
      {"certify", "ergodicity certificates and decay fit"},
      {"master-check", "master equation residual scan"},
      {"decay-fit", "linearized decay and nonlinear contraction rates"},
  };
  std::string chosen;
  for (const auto& name : h::command_names()) {
    app.add_subcommand(name, descriptions.at(name))->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::kExitError;
  }

  if (list_models) {
    auto& reg = mfchain::ModelRegistry::instance();
    for (const auto& name : reg.names()) std::cout << name << "  " << reg.usage(name) << '\n';
    return 0;
  }
  if (chosen.empty()) {
    std::cerr << app.help();
    return h::kExitError;
  }

  try {
    h::Config config = config_file.empty() ? h::Config() : h::Config::load(config_file);
    for (const auto& [key, value] : overrides) {
      if (value) config.set(key, *value);
    }
    if (seed) config.set("run.seed", *seed);
    if (out) config.set("run.out", *out);
    config.threads = threads;
    config.force = force;

    const h::RunResult result = h::run_command(chosen, config);
    h::write_outputs(result, config.get("run.out"));
    std::cout << chosen << ": " << result.report.at("status").get<std::string>() << " ("
              << config.get("run.out") << ")\n";
    return result.exit_code;
  } catch (const mfchain::DomainError& e) {
    std::cerr << "domain error";
    if (e.time() >= 0.0) std::cerr << " at t = " << e.time();
    std::cerr << ": " << e.what() << '\n';
  } catch (const mfchain::IntegrationError& e) {
    std::cerr << "integration error";
    if (e.time() >= 0.0) std::cerr << " at t = " << e.time();
    std::cerr << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return h::kExitError;
}
