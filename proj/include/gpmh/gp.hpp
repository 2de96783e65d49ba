#pragma once

// Hierarchical GP regression on noisy scalar observations with the basis
// coefficients integrated out, plus the one-step lookahead quantities used by
// the evaluation-selection criteria.
//
// Model: y_i = f(theta_i) + e_i,  e_i ~ N(0, noise_sd_i^2), with
//   f ~ GP(h(.)' beta, k(.,.)),  beta ~ N(b, B),
// an anisotropic squared-exponential kernel, and per-dimension quadratic
// basis functions h(theta) = [1, theta_1..theta_p, theta_1^2..theta_p^2]
// (q = 2p+1). A basis of size q = 0 disables the mean model entirely and
// gives the pure-kernel prior used by the stationary analyses.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpmh/math_util.hpp"

namespace gpmh {

// One training atom: a location, a noisy log-likelihood value, and the
// standard deviation of the evaluation noise at that location.
struct Evaluation {
  Vec theta;
  double y = 0.0;
  double noise_sd = 0.0;
};

struct GpHyperparams {
  double signal_sd = 1.0;  // kernel amplitude
  Vec lengthscales;        // one per input dimension, all > 0
  // When set, a single noise SD replaces the per-evaluation ones in the Gram
  // diagonal (the jointly-estimated-noise mode).
  std::optional<double> noise_sd_global;
  Vec basis_prior_mean;  // b, size q (q == 0: no basis)
  Mat basis_prior_cov;   // B, q x q SPD

  int dim() const { return static_cast<int>(lengthscales.size()); }
  int basis_size() const { return static_cast<int>(basis_prior_mean.size()); }
};

// Quadratic-basis default: b = 0, B = 30^2 I, q = 2p+1.
GpHyperparams default_hyperparams(int p, double signal_sd = 1.0,
                                  double lengthscale = 1.0);
// Pure-kernel prior (no basis).
GpHyperparams kernel_only_hyperparams(int p, double signal_sd = 1.0,
                                      double lengthscale = 1.0);

// Basis vector h(theta) for the fixed quadratic family; q chooses between
// the empty basis (q = 0) and 2p+1.
Vec basis_vector(const Vec& theta, int q);

struct DegenerateDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateCandidateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FitFailureError : std::runtime_error {
  FitFailureError(const std::string& what, GpHyperparams last)
      : std::runtime_error(what), last_valid(std::move(last)) {}
  GpHyperparams last_valid;
};

struct PairGaussian {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};

// Immutable posterior: hyperparameters + data + cached factorizations.
// Queries are O(t^2) worst case (one triangular solve) and thread-safe.
class GpPosterior {
 public:
  GpPosterior(GpHyperparams hp, std::vector<Evaluation> data);

  const GpHyperparams& hyperparams() const { return hp_; }
  const std::vector<Evaluation>& data() const { return data_; }
  int t() const { return static_cast<int>(data_.size()); }
  int dim() const { return hp_.dim(); }
  double jitter_used() const { return jitter_; }

  double kernel(const Vec& a, const Vec& b) const;
  // Kernel vector k_t(theta) against the training points.
  Vec kernel_vec(const Vec& theta) const;

  double mean(const Vec& theta) const;              // m_t
  double cov(const Vec& a, const Vec& b) const;     // c_t
  double var(const Vec& theta) const;               // s_t^2, clamped >= 0
  PairGaussian predict_pair(const Vec& theta, const Vec& theta_prime) const;

  // Internal caches exposed to the pair-context fast path below.
  const Mat& points() const { return X_; }
  const Eigen::LLT<Mat>& gram_llt() const { return llt_; }
  const Mat& basis_matrix() const { return H_; }          // q x t
  const Mat& gram_inv_basis() const { return W_; }        // t x q, K^-1 H'
  const Eigen::LLT<Mat>& basis_gram_llt() const { return allt_; }
  const Vec& beta_bar() const { return beta_bar_; }

 private:
  GpHyperparams hp_;
  std::vector<Evaluation> data_;
  Mat X_;              // t x p training inputs
  Eigen::LLT<Mat> llt_;  // Cholesky of K_t (+ jitter if needed)
  Mat H_;              // q x t basis values at the training inputs
  Mat W_;              // K^-1 H'
  Eigen::LLT<Mat> allt_;  // Cholesky of A = B^-1 + H K^-1 H'
  Vec beta_bar_;       // posterior basis-coefficient mean
  Vec alpha_;          // K^-1 (y - H' beta_bar)
  double jitter_ = 0.0;
};

// Variance of f(theta') - f(theta) under the posterior, clamped at 0.
double sigma_t2(const GpPosterior& gp, const Vec& theta,
                const Vec& theta_prime);

// Reduction in sigma_t2 achievable by evaluating at the candidate batch
// (columns of `candidates`, p x b) with the given evaluation-noise SDs:
// the quadratic form d' (C** + diag(noise^2))^-1 d with
// d_j = c_t(theta, cand_j) - c_t(theta', cand_j).
double lookahead_xi2(const GpPosterior& gp, const Vec& theta,
                     const Vec& theta_prime, const Mat& candidates,
                     const Vec& candidate_noise_sds);

// Cached per-(theta, theta') context for the b = 1 acquisition fast path:
// xi^2 and its gradient with respect to the candidate.
class PairContext {
 public:
  PairContext(const GpPosterior& gp, const Vec& theta, const Vec& theta_prime);

  double sigma_t2() const { return sigma_t2_; }
  double xi2(const Vec& theta_star, double star_noise_sd) const;
  // Returns xi^2 and writes d(xi^2)/d(theta_star) into grad.
  double xi2_grad(const Vec& theta_star, double star_noise_sd,
                  Vec& grad) const;

 private:
  // c_t(x, theta_star) for x = theta (ix = 0) or theta' (ix = 1), plus the
  // candidate-side pieces shared by value and gradient.
  struct StarWork;
  void star_work(const Vec& theta_star, StarWork& w) const;

  const GpPosterior& gp_;
  Vec theta_, theta_prime_;
  Vec u_[2];   // K^-1 k_t(x)
  Vec r_[2];   // A^-1 R(x)
  Vec wr_[2];  // W r_[i] (t-vector), for gradient assembly
  double sigma_t2_ = 0.0;
};

struct HyperpriorSpec {
  // Log-uniform box for signal_sd.
  double signal_sd_lo = 1e-3;
  double signal_sd_hi = 1e3;
  // Lengthscale box is [lo_factor * range_i, hi_factor * range_i] where
  // range_i is the per-dimension span of the training inputs.
  double lengthscale_lo_factor = 1e-3;
  double lengthscale_hi_factor = 10.0;
  // Global noise SD box; only active when estimate_noise_sd is set.
  double noise_sd_lo = 1e-2;
  double noise_sd_hi = 1e2;
  bool estimate_noise_sd = false;
  int multistarts = 3;
  int max_iterations = 200;
  std::uint64_t seed = 0;
};

// MAP hyperparameter fit: maximizes log marginal likelihood (+ constant
// log-hyperprior inside the box) by multistart projected gradient ascent in
// log-hyperparameter space. Deterministic given (data, spec, init).
// `warm_start_only` restricts to a single start at `init` (used on refits).
GpPosterior fit_map(std::vector<Evaluation> data, const HyperpriorSpec& spec,
                    const GpHyperparams& init, bool warm_start_only = false);

// Log marginal likelihood of the data under the given hyperparameters (basis
// coefficients integrated out). Exposed for tests.
double log_marginal_likelihood(const std::vector<Evaluation>& data,
                               const GpHyperparams& hp,
                               bool use_global_noise);

// JSON round-trip of (hyperparameters, data); caches are rebuilt on load.
std::string gp_to_json(const GpPosterior& gp);
GpPosterior gp_from_json(const std::string& text);

}  // namespace gpmh
