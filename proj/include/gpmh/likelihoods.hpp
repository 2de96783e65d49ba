#pragma once

// Noisy log-likelihood sources: the three 6D toy log-densities with additive
// Gaussian noise, the Ricker / theta-Ricker simulators with the 13 summary
// statistics, and synthetic-likelihood estimation with bootstrap noise SDs.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gpmh/math_util.hpp"

namespace gpmh {

struct EvalResult {
  double y = 0.0;
  double noise_sd = 0.0;
  bool valid = true;
};

// A log-likelihood evaluator. `evaluate` is stochastic but reproducible: the
// evaluator owns its RNG stream, so identical construction seeds give
// identical draw sequences.
struct NoisyLogLikelihood {
  int dim = 0;
  Box support;
  std::function<EvalResult(const Vec&)> evaluate;
};

// ---------------------------------------------------------------------------
// Toy log-densities. Each 6D density is a sum of three independent 2D blocks
// f_2d evaluated on consecutive coordinate pairs.

enum class ToyName { Simple, Banana, Multimodal };

ToyName toy_name_from_string(const std::string& s);
std::string to_string(ToyName name);

double toy_logdensity_2d(ToyName name, double th1, double th2);
double toy_logdensity_noiseless(ToyName name, const Vec& theta6);

// Adds N(0, noise_sd^2) observation noise per evaluation.
EvalResult toy_logdensity(ToyName name, const Vec& theta6, double noise_sd,
                          Rng& rng);

Box toy_prior_box(ToyName name);

NoisyLogLikelihood make_toy_loglik(ToyName name, double noise_sd,
                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Population-dynamics simulators with Poisson observations of the latent
// population size (N_0 = 1).

struct RickerParams {
  double log_r = 3.8;
  double phi = 10.0;
  double sigma_eps = 0.3;
};

struct ThetaRickerParams {
  double log_r = 3.5;
  double theta_exp = 1.0;
  double K = 3.5;
  double phi = 10.0;
  double sigma_eps = 0.3;
};

struct SimResult {
  std::vector<double> x;  // observed counts x_1..x_T
  bool valid = true;      // false on latent overflow / invalid parameters
};

SimResult ricker_simulate(const RickerParams& params, int T, Rng& rng);
SimResult theta_ricker_simulate(const ThetaRickerParams& params, int T,
                                Rng& rng);

// ---------------------------------------------------------------------------
// The 13 summary statistics used for both simulator models, in order:
//   [0]     sample mean
//   [1..6]  autocovariances at lags 0..5 (mean-centered, divisor T)
//   [7..9]  coefficients of the no-intercept cubic regression of the sorted
//           first differences on standard normal order scores z_(i)
//           (regressors z, z^2, z^3)
//   [10,11] slopes b1, b2 of the no-intercept regression
//           x_{t+1}^0.3 ~ b1 x_t^0.3 + b2 x_t^0.6
//   [12]    number of zero observations
// Requires length >= 7; an all-zero (or otherwise regression-degenerate)
// series is returned with valid = false.
struct SummaryResult {
  Vec s;
  bool valid = true;
};

SummaryResult wood_summaries(const std::vector<double>& series);

// ---------------------------------------------------------------------------
// Synthetic likelihood: Gaussian density of the observed summary vector
// under the sample mean/covariance (divisor N-1) of N simulated summary
// vectors; evaluation noise SD estimated by bootstrap over the N vectors.

struct SlConfig {
  int n_reps = 100;       // N; must be >= s + 2
  int n_bootstrap = 2000;  // 0 disables the bootstrap (noise_sd = 0)
  double abs_y_max = 1e5;  // validity screen thresholds
  double noise_sd_max = 1e3;
};

EvalResult synthetic_loglik(
    const std::function<SimResult(Rng&)>& simulate,
    const std::function<SummaryResult(const std::vector<double>&)>& summary,
    const Vec& observed_summary, const SlConfig& config, Rng& rng);

// ---------------------------------------------------------------------------
// Problem presets: everything a run needs to know about a target.

struct ProblemSpec {
  std::string name;
  int dim = 0;
  Box prior_box;  // uniform prior support
  Vec theta0;     // chain initial point
  Vec sigma0_sd;  // initial proposal SDs (Sigma_0 = diag(sigma0_sd)^2)
  int t_init = 10;
  long default_iterations = 100000;
  bool is_sl = false;
  // Toys: the GP treats the (constant) evaluation noise as an unknown
  // hyperparameter estimated with the rest.
  bool estimate_gp_noise = false;
  double known_noise_sd = 0.0;  // toys: the true sigma_n
  // Assumed noise SD at unvisited candidate points for the box strategy.
  double design_candidate_noise_sd = 0.1;
  // Builds a fresh evaluator with its own stream.
  std::function<NoisyLogLikelihood(std::uint64_t seed)> make_target;
  // Ground-truth-grade evaluator: the noiseless density for toys, the
  // bootstrap-free estimator for simulator models (noise_sd reported as 0).
  std::function<NoisyLogLikelihood(std::uint64_t seed)> make_reference_target;
  // Toys only: the exact log-density (used by reference MCMC / exact
  // ground-truth samplers).
  std::function<double(const Vec&)> exact_logdensity;
  // SL models only: observed series and its fixture provenance.
  std::vector<double> observed_series;
  Vec observed_summary;
  std::string fixture_path;
  std::string fixture_hash;
  Vec theta_true;  // parameters the fixture was generated from
  SlConfig sl;

  double log_prior(const Vec& th) const {
    return prior_box.contains(th)
               ? 0.0
               : -std::numeric_limits<double>::infinity();
  }
};

// Known preset names: simple6d, banana6d, multimodal6d (optionally with
// high_noise), ricker, theta_ricker. Fixture CSVs are looked up under
// `data_dir` (empty: searched via GPMH_DATA_DIR, ./data, and the source
// tree).
ProblemSpec make_problem(const std::string& preset, bool high_noise = false,
                         const std::string& data_dir = "");

// Resolves the data directory (see make_problem).
std::string find_data_dir(const std::string& override_dir = "");

}  // namespace gpmh
