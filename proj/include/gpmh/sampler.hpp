#pragma once

// The two inference loops (surrogate-emulated MH and the acquisition-then-
// surrogate-sampling variant), the adaptive Gaussian proposal, a reference
// MH sampler for ground truth, and the Markov path approximation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpmh/accept.hpp"
#include "gpmh/design.hpp"
#include "gpmh/gp.hpp"
#include "gpmh/likelihoods.hpp"
#include "gpmh/math_util.hpp"

namespace gpmh {

// Substream ids derived from the master seed. The chain stream consumes
// exactly dim normals + 1 uniform per outer iteration, in that order, for
// every sampler here — which is what makes a surrogate run and a classical
// run with the same seed comparable draw for draw.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kChain = 2;
inline constexpr std::uint64_t kDesign = 3;
inline constexpr std::uint64_t kFit = 4;
inline constexpr std::uint64_t kSurrogateChain = 5;
}  // namespace stream

enum class TerminationReason {
  completed,
  invalid_current_point,  // evaluation at the chain's current point invalid
  recursion_cap,          // no decision-relevant transition found (MH-BLFI)
};

struct ValidityPolicy {
  double abs_y_max = 1e5;
  double noise_sd_max = 1e3;
  int init_try_multiplier = 2;  // initialization gets this * t_init tries

  bool is_valid(const EvalResult& e) const {
    return e.valid && std::isfinite(e.y) && std::isfinite(e.noise_sd) &&
           std::abs(e.y) <= abs_y_max && e.noise_sd <= noise_sd_max;
  }
};

// Streaming mean/scatter of the recorded (accepted) samples.
struct AdaptationState {
  long n = 0;
  Vec mean;
  Mat scatter;  // sum of (x - mean)(x - mean)'
};

struct ChainState {
  Vec current;
  long iteration = 0;  // completed outer iterations
  Mat initial_proposal_cov;
  Mat proposal_cov;
  Mat proposal_chol;  // lower factor of proposal_cov
  int n_adapt_start = 200;
  double adapt_jitter = 1e-8;
  AdaptationState adaptation;
  long eval_count = 0;  // target evaluations during the loop (incl. invalid)
  std::vector<int> per_iteration_eval_counts;
};

// Records `new_sample` into the adaptation state and refreshes the proposal;
// after n_adapt_start iterations (and >= 2 recorded samples) the proposal is
// s_d^2 (cov + jitter I) with s_d^2 = 2.4^2 / dim, else the initial one.
const Mat& adapt_proposal(ChainState& state, const Vec& new_sample);

// Recomputes proposal_cov/proposal_chol from the current state without
// recording anything (used at iteration boundaries, e.g. when the adaptation
// warm-up ends on a rejected iteration).
void refresh_proposal(ChainState& state);

struct RunConfig {
  double epsilon = 0.2;           // decision-error tolerance, in (0, 1/2]
  long i_mh = 10000;              // chain iterations
  int t_init = 10;                // initial design size
  long max_total_evals = -1;      // hard cap; < 0 means unlimited
  int max_evals_per_iteration = 1000;
  double burn_in_fraction = 0.25;
  DesignStrategy strategy;
  ErrorKind error_kind = ErrorKind::unconditional;
  Vec initial_point;
  Mat initial_proposal_cov;
  int n_adapt_start = 200;
  double adapt_jitter = 1e-8;
  HyperpriorSpec hyperprior;
  // When set, hyperparameters are never fitted (no MAP step at all).
  std::optional<GpHyperparams> fixed_hyperparams;
  // When non-empty, used verbatim instead of drawing the initial design.
  std::vector<Evaluation> init_evaluations;
  // MH-BLFI only.
  long t_max = 0;        // total evaluation budget (>= t_init)
  long s_mcmc = 100000;  // surrogate-chain length
  long transition_search_cap = 100000;  // attempts per evaluation slot
  // GP snapshot points: chain iterations for run_gp_mh, evaluation counts
  // for run_mh_blfi. Must be strictly increasing.
  std::vector<long> snapshot_schedule;
  std::uint64_t seed = 1;
};

struct GpSnapshot {
  long iteration = 0;   // outer iterations completed (emulated for MH-BLFI)
  long eval_count = 0;  // |D| at the snapshot
  GpPosterior gp;
};

struct Diagnostics {
  long forced_decisions = 0;      // iterations decided at an evaluation cap
  long invalid_evals = 0;         // evaluations discarded as invalid
  long invalid_proposals = 0;     // rejections caused by invalid y(theta')
  long invalid_design_points = 0;  // interior candidates retried as naive
  long refits = 0;
  long init_attempts = 0;
  long emulated_transitions = 0;  // MH-BLFI transition attempts
  TerminationReason termination = TerminationReason::completed;
  std::string message;
};

struct RunResult {
  // Chain samples (run_gp_mh) or surrogate-posterior draws (run_mh_blfi).
  std::vector<Vec> samples;
  // Cumulative |D| after each chain iteration (run_gp_mh; parallel to
  // samples).
  std::vector<long> eval_count_by_iteration;
  std::vector<int> per_iteration_eval_counts;
  std::vector<Evaluation> evaluations;  // D, initial design included
  int t_init_used = 0;
  std::optional<GpPosterior> gp;  // final surrogate
  std::vector<GpSnapshot> snapshots;
  Diagnostics diagnostics;
};

// Surrogate-emulated MH: each accept/reject decision is made from the GP
// within tolerance epsilon, acquiring evaluations only when the decision
// error is too large. Mid-run invalidity at the current point ends the run
// early with partial results (termination reason set); initialization
// failure throws.
RunResult run_gp_mh(const NoisyLogLikelihood& target, const Prior& prior,
                    const RunConfig& config, const ValidityPolicy& policy = {});

// Acquisition-first variant: emulates the chain only to find
// decision-relevant transitions, spends the evaluation budget there, then
// draws s_mcmc samples from the surrogate posterior (mode estimator).
RunResult run_mh_blfi(const NoisyLogLikelihood& target, const Prior& prior,
                      const RunConfig& config,
                      const ValidityPolicy& policy = {});

// Wraps a deterministic log-density as a zero-noise evaluator.
NoisyLogLikelihood deterministic_loglik(
    int dim, const Box& support, std::function<double(const Vec&)> logdensity);

// Classical MH with the same stream discipline and adaptation as run_gp_mh.
// Noisy targets are handled pseudo-marginally: the realisation at the
// current point is stored and reused, never redrawn. Invalid evaluations at
// proposals are rejections; an invalid initial evaluation throws.
std::vector<Vec> run_reference_mh(const NoisyLogLikelihood& target,
                                  const Prior& prior, const Vec& theta0,
                                  const Mat& initial_proposal_cov, long n,
                                  std::uint64_t seed, bool adapt = true,
                                  int n_adapt_start = 200,
                                  const ValidityPolicy& policy = {});

// One draw of the inhomogeneous-Markov approximation of the emulated chain:
// given fixed uniform and proposal-increment streams, each transition
// accepts with probability Phi((mu_t - log u)/sigma_t) under the GP. Returns
// the path theta_(0..n) and its log-probability given the streams.
struct MarkovPathResult {
  std::vector<Vec> path;
  double log_probability = 0.0;
};
MarkovPathResult markov_path_sampler(
    const GpPosterior& gp, const Vec& theta0,
    const std::vector<double>& u_stream, const std::vector<Vec>& r_stream,
    int n, Rng& rng,
    const std::function<double(const Vec&)>& log_prior = {});

}  // namespace gpmh
