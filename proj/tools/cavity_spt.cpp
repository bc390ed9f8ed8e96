#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "cavity/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cavity superradiance criteria, phase diagrams and transmission maps"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  std::string config;
  std::string out;
  int threads = 0;
  std::uint64_t seed = 0;
  bool overwrite = false;
  run->add_option("config,--config", config, "experiment config file")->required();
  CLI::Option* out_opt = run->add_option("--out", out, "output path prefix");
  CLI::Option* threads_opt =
      run->add_option("--threads", threads, "worker threads (default: CAVITY_SPT_THREADS or 1)")
          ->check(CLI::PositiveNumber);
  CLI::Option* seed_opt = run->add_option("--seed", seed, "random seed for Krylov start vectors");
  run->add_flag("--overwrite", overwrite, "replace existing output files");

  CLI::App* list = app.add_subcommand("list", "list experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (list->parsed()) {
    for (const auto& name : cavity::experiment_names()) std::cout << name << '\n';
    return 0;
  }

  try {
    cavity::RunOptions options;
    if (*out_opt) options.out_prefix = out;
    if (*threads_opt) options.threads = threads;
    if (*seed_opt) options.seed = seed;
    options.overwrite = overwrite;
    const auto written = cavity::run(config, options);
    for (const auto& f : written.files) std::cout << f << '\n';
    std::cout << written.manifest_path << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << cavity::error_record(e).dump() << '\n';
    return cavity::exit_code_for(e);
  }
}
