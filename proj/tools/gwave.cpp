#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gwave/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin weak-error experiments for the stochastic wave equation"};
  app.set_version_flag("--version", gwave::cli::kVersion);
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool plot = false;
  } args;

  const auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "JSON config file or a previous run manifest")
        ->required();
    sub->add_option("--out", args.out, "output directory")->capture_default_str();
    sub->add_option("--seed", args.seed, "overrides the config seed");
    sub->add_option("--threads", args.threads, "worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u))
        ->capture_default_str();
    sub->add_flag("--plot", args.plot, "also write an SVG figure where available");
    return sub;
  };
  add("exact", "exact moments, gaps and analytic lower bounds");
  add("mc", "coupled Monte Carlo weak errors");
  add("rates", "convergence order fit and rate sandwich");
  add("oracle", "Ito quadrature against the closed-form mode moments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : gwave::cli::kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  gwave::cli::CommandOptions opt;
  opt.out_dir = args.out;
  opt.threads = args.threads;
  opt.plot = args.plot;
  return gwave::cli::run(command, args.config, args.seed, opt);
}
