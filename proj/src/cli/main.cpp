// Command-line front end: run experiments from a JSON config, manage cached
// ground-truth sample sets, tabulate error bounds, and validate configs.
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace {

std::string default_output_root() {
  if (const char* env = std::getenv("GPMH_OUTPUT_ROOT")) return env;
  return "runs";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP-emulated Metropolis-Hastings experiment driver"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  std::string output_root = default_output_root();
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run an experiment from a config");
  run->add_option("config", config_path, "path to a JSON experiment config")
      ->required();
  run->add_option("--output-root", output_root,
                  "root directory for artifacts (env GPMH_OUTPUT_ROOT)");
  run->add_option("--jobs", jobs, "seeds to run in parallel")
      ->check(CLI::PositiveNumber);

  // ground-truth
  std::string gt_problem;
  bool gt_high_noise = false;
  long gt_budget = -1;
  std::uint64_t gt_seed = 99991;
  std::string gt_data_dir;
  bool gt_refresh = false;
  auto* gt = app.add_subcommand(
      "ground-truth", "build or refresh the cached reference sample set");
  gt->add_option("--problem", gt_problem, "preset name")->required();
  gt->add_flag("--high-noise", gt_high_noise, "high-noise toy variant");
  gt->add_option("--budget", gt_budget,
                 "samples (toys) or chain length (simulator presets); "
                 "-1 = default");
  gt->add_option("--seed", gt_seed, "sampler seed");
  gt->add_option("--output-root", output_root,
                 "root directory for the cache (env GPMH_OUTPUT_ROOT)");
  gt->add_option("--data-dir", gt_data_dir, "fixture directory override");
  gt->add_flag("--refresh", gt_refresh, "rebuild even if a cache exists");

  // bounds
  double b_sigma_s = 1.0;
  double b_sigma_n = 1.0;
  int b_dim = 3;
  double b_s2 = 0.01;
  std::vector<long> b_n = {10, 50, 100, 500, 1000};
  std::vector<double> b_eps = {0.05, 0.1, 0.2};
  int b_n_mc = 10000;
  std::uint64_t b_seed = 1;
  std::string b_out = "bounds.csv";
  auto* bounds = app.add_subcommand(
      "bounds", "tabulate worst-case and Monte Carlo error bounds");
  bounds->add_option("--signal-sd", b_sigma_s, "GP signal SD");
  bounds->add_option("--noise-sd-bar", b_sigma_n, "mean evaluation noise SD");
  bounds->add_option("--dim", b_dim, "parameter dimension");
  bounds->add_option("--proposal-s2", b_s2,
                     "squared proposal scale for the MC variants");
  bounds->add_option("--n-values", b_n, "evaluation counts to tabulate");
  bounds->add_option("--epsilons", b_eps, "error tolerances to tabulate");
  bounds->add_option("--n-mc", b_n_mc, "Monte Carlo draws per cell");
  bounds->add_option("--seed", b_seed, "Monte Carlo seed");
  bounds->add_option("--out", b_out, "output CSV path");

  // validate-config
  std::string validate_path;
  auto* validate = app.add_subcommand(
      "validate-config", "check a config without running anything");
  validate->add_option("config", validate_path, "path to a JSON config")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return gpmh::cli::run_experiment(config_path, output_root, jobs);
    if (gt->parsed())
      return gpmh::cli::cmd_ground_truth(gt_problem, gt_high_noise, gt_budget,
                                         gt_seed, output_root, gt_data_dir,
                                         gt_refresh);
    if (bounds->parsed())
      return gpmh::cli::cmd_bounds(b_sigma_s, b_sigma_n, b_dim, b_s2, b_n,
                                   b_eps, b_n_mc, b_seed, b_out);
    if (validate->parsed())
      return gpmh::cli::cmd_validate(validate_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
