#pragma once

// Closed-form uncertainty quantities for one MH accept/reject decision under
// the surrogate. The acceptance ratio is log-Normal(mu_t, sigma_t^2) given
// the data; everything here is a pure function of (mu_t, sigma_t) and the
// uniform variate u.

#include <functional>
#include <variant>
#include <vector>

#include "gpmh/gp.hpp"
#include "gpmh/math_util.hpp"

namespace gpmh {

struct PairStats {
  double mu_t = 0.0;
  double sigma_t = 0.0;  // >= 0
};

enum class ErrorKind { conditional, unconditional };

struct Decision {
  bool accepted = false;
  double gamma_hat = 1.0;  // exp(mu_t), the ratio's posterior median
  double error_value = 0.0;
  ErrorKind error_kind = ErrorKind::unconditional;
};

struct NeedsEvaluation {
  double error_value = 0.0;
  ErrorKind error_kind = ErrorKind::unconditional;
};

using DecideResult = std::variant<Decision, NeedsEvaluation>;

// sigma_t below this is treated as exactly zero (guards 0/0 in the
// conditional-error formula).
inline constexpr double kSigmaFloor = 1e-12;

// Log-Normal parameters of the acceptance ratio for (theta -> theta_prime):
// mu_t = m_t(theta') - m_t(theta) + log_prior(theta') - log_prior(theta)
//        + log_proposal_ratio,  sigma_t = sqrt(sigma_t2).
// Requires prior mass at theta; zero prior mass at theta_prime must be
// handled upstream (auto-reject) and is a contract violation here.
PairStats pair_stats(const GpPosterior& gp, const Vec& theta,
                     const Vec& theta_prime,
                     const std::function<double(const Vec&)>& log_prior,
                     double log_proposal_ratio = 0.0);

// Owen's T function T(h, a); a may be +-infinity (limit identities).
double owen_t(double h, double a);

// P(wrong decision | u): Phi(-|mu_t - log u| / sigma_t), in [0, 1/2].
double conditional_error(const PairStats& stats, double u);

// The u-averaged error, closed form (piecewise in the sign of mu_t);
// 0 when sigma_t = 0.
double unconditional_error(const PairStats& stats);

// Mean/variance of the accept indicator kappa given u:
// mean = Phi((mu_t - log u)/sigma_t), variance = mean (1 - mean).
struct KappaMoments {
  double mean = 0.0;
  double variance = 0.0;
};
KappaMoments kappa_mean_var(const PairStats& stats, double u);

// Decide if the current error (conditional at u, or unconditional) is within
// epsilon; otherwise report that an evaluation is needed.
DecideResult decide(const PairStats& stats, double u, double epsilon,
                    ErrorKind kind);

// Test-support: empirical u-averaged decision error of each candidate
// estimator against a sampled ratio distribution. For a fixed ratio g and
// estimate ghat the u-average of the disagreement indicator is
// |min(g,1) - min(ghat,1)|.
struct MedianCheckReport {
  std::vector<double> errors;  // one per grid entry
  int argmin = -1;
};
MedianCheckReport median_optimality_check(
    const std::vector<double>& gamma_samples,
    const std::vector<double>& estimator_grid);

}  // namespace gpmh
