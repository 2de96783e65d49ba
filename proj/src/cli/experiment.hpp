#pragma once

// Declarative experiment runner behind the command-line verbs: config
// parsing, ground-truth management, seed dispatch, and CSV/JSON artifact
// output.

#include <cstdint>
#include <string>
#include <vector>

#include "gpmh/likelihoods.hpp"
#include "gpmh/sampler.hpp"

namespace gpmh::cli {

struct ExperimentConfig {
  std::string problem;  // preset name
  bool high_noise = false;
  std::string method = "gp_mh";  // gp_mh | mh_blfi | reference_mcmc
  std::string strategy = "epoe";  // epoe | epoer | naive
  double epsilon = 0.2;
  std::string error_kind = "unconditional";  // or "conditional"
  long iterations = -1;  // chain length; -1 uses the preset default
  int t_init = -1;       // -1 uses the preset default
  long t_max = -1;       // mh_blfi evaluation budget; -1: t_init + 200
  long s_mcmc = 100000;  // mh_blfi final surrogate-chain length
  long snapshot_s_mcmc = 20000;  // surrogate-chain length per snapshot
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir;  // run directory, relative to the output root
  std::vector<long> snapshot_schedule;  // empty: 10 evenly spaced points
  int max_evals_per_iteration = 1000;
  long max_total_evals = -1;
  double burn_in_fraction = 0.25;
  long ground_truth_budget = -1;  // -1: method-appropriate default
  std::uint64_t ground_truth_seed = 99991;
  std::string data_dir;  // fixture directory override
};

// Parses + validates the JSON config; throws std::runtime_error with a
// pointer to the offending field.
ExperimentConfig parse_config(const std::string& json_text);

// One-paragraph schema description (printed on validation failure).
std::string config_schema_note();

// Loads or computes the cached ground-truth samples for a problem under
// <output_root>/ground_truth/<problem>/. A cached set whose recorded fixture
// hash mismatches the current fixture is refused unless `refresh` is set.
std::vector<Vec> ensure_ground_truth(const ProblemSpec& spec, long budget,
                                     std::uint64_t seed,
                                     const std::string& output_root,
                                     bool refresh,
                                     std::string* path_out = nullptr);

int run_experiment(const std::string& config_path,
                   const std::string& output_root, int jobs);
int cmd_ground_truth(const std::string& preset, bool high_noise, long budget,
                     std::uint64_t seed, const std::string& output_root,
                     const std::string& data_dir, bool refresh);
int cmd_bounds(double sigma_s, double sigma_n_bar, int p, double s2,
               const std::vector<long>& n_values,
               const std::vector<double>& eps_values, int n_mc,
               std::uint64_t seed, const std::string& out_path);
int cmd_validate(const std::string& config_path);

}  // namespace gpmh::cli
