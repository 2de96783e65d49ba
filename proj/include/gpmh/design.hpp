#pragma once

// One-step-optimal selection of the next evaluation location. The three
// expected-error criteria all decrease monotonically in the variance
// reduction xi^2, so the box strategy maximizes xi^2 directly and the
// restricted strategy compares xi^2 at the two chain points.

#include "gpmh/accept.hpp"
#include "gpmh/gp.hpp"
#include "gpmh/math_util.hpp"

namespace gpmh {

enum class StrategyKind { EPoE, EPoEr, Naive };

struct DesignStrategy {
  StrategyKind kind = StrategyKind::EPoE;
  double box_scale_c = 0.75;       // lengthscale multiple for the search box
  double candidate_noise_sd = 0.1;  // assumed noise SD at unvisited candidates
  int restarts = 5;                // multistart count (EPoE)
  int max_iterations = 100;        // optimizer iteration cap (EPoE)
};

struct CandidateScore {
  Vec theta_star;
  double xi2 = 0.0;
  double expected_conditional = 0.0;
  double expected_unconditional = 0.0;
  double expected_kappa_var = 0.0;
};

// Raw-formula variants in terms of (mu_t, sigma_t, xi^2, u). xi^2 is clamped
// into [0, sigma_t^2]; the xi^2 -> 0 and xi^2 -> sigma_t^2 limits reduce to
// the current error / zero respectively.
double expected_conditional_error_from(const PairStats& stats, double xi2,
                                       double u);
double expected_unconditional_error_from(const PairStats& stats, double xi2);
double expected_kappa_variance_from(const PairStats& stats, double xi2,
                                    double u);

// GP-level wrappers: compute (mu_t, sigma_t) from the surrogate (with an
// optional additive log-ratio correction for prior/proposal terms) and xi^2
// for the single candidate, then apply the closed forms.
double expected_conditional_error(const GpPosterior& gp, const Vec& theta,
                                  const Vec& theta_prime, double u,
                                  const Vec& theta_star, double star_noise_sd,
                                  double log_ratio_correction = 0.0);
double expected_unconditional_error(const GpPosterior& gp, const Vec& theta,
                                    const Vec& theta_prime,
                                    const Vec& theta_star,
                                    double star_noise_sd,
                                    double log_ratio_correction = 0.0);
double expected_kappa_variance(const GpPosterior& gp, const Vec& theta,
                               const Vec& theta_prime, double u,
                               const Vec& theta_star, double star_noise_sd,
                               double log_ratio_correction = 0.0);

// The EPoE search box: per dimension
//   [max(min(th_i, th'_i) - c l_i, lo_i), min(max(th_i, th'_i) + c l_i, hi_i)]
Box epoe_box(const GpPosterior& gp, const Vec& theta, const Vec& theta_prime,
             double box_scale_c, const Box& domain_bounds);

// Next evaluation location under the given strategy. EPoE runs a multistart
// projected-BFGS ascent of xi^2 over the box (falling back to the best of
// {theta, theta', box center} if every start fails); EPoEr picks the better
// of {theta, theta'} with ties (within 1e-12) going to theta'; Naive picks
// theta with probability 1/2 (consuming one uniform draw).
Vec select_evaluation(const GpPosterior& gp, const Vec& theta,
                      const Vec& theta_prime, const DesignStrategy& strategy,
                      const Box& domain_bounds, Rng& rng);

}  // namespace gpmh
