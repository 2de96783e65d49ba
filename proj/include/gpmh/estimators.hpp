#pragma once

// Surrogate-posterior point estimators, total-variation metrics between
// sample sets, and the theoretical bound calculators for the decision-error
// guarantees (worst-case and Monte Carlo variants, plus the acceptance-ratio
// IQR bound).

#include <optional>
#include <vector>

#include "gpmh/accept.hpp"
#include "gpmh/gp.hpp"
#include "gpmh/math_util.hpp"

namespace gpmh {

enum class EstimatorKind { marginal_median, marginal_mode };

// Unnormalized surrogate posterior: prior x exp(m_t) (median) or
// prior x exp(m_t - s_t^2) (mode; shrinks toward zero where the surrogate
// is uncertain).
struct SurrogatePosterior {
  GpPosterior gp;
  Prior prior;
  EstimatorKind kind = EstimatorKind::marginal_mode;
};

double log_unnormalized_estimate(const SurrogatePosterior& sp,
                                 const Vec& theta);

struct TvReport {
  std::vector<double> per_dimension_tv;  // each in [0, 1]
  double mean_tv = 0.0;
  std::optional<double> joint_tv_2d;  // only for 2D inputs on request
};

// Histogram total-variation distance between the coordinate-wise marginals
// of two sample sets: `bins` equal-width bins spanning the union of the two
// supports per dimension. Deterministic given the binning.
TvReport marginal_tv(const std::vector<Vec>& samples_a,
                     const std::vector<Vec>& samples_b, int bins = 100,
                     bool compute_joint_2d = false);

// Scale constant of the decision-error guarantees: 2 min{sigma_s,
// sigma_n_bar / sqrt(floor(n/2))} (the floor(n/2) = 0 case degenerates to
// 2 sigma_s).
double noise_scale_c_n(double sigma_s, double sigma_n_bar, long n);

// Worst-case bounds after n optimally split evaluations of the pair:
// conditional: 1 - exp(2 Phi^-1(epsilon) c_n); unconditional: the maximum
// over mu in [-20, 0] of the u-averaged error at sigma = c_n.
double bound_conditional(double epsilon, double sigma_s, double sigma_n_bar,
                         long n);
double bound_unconditional(double sigma_s, double sigma_n_bar, long n);

// Draws of mu_n under the Gaussian-target scenario: sum over p coordinates
// of (psi^2 - psi'^2)/2 with (psi, psi') jointly normal, covariance
// [[1, 1], [1, s2 + 1]]. Mean -p s2 / 2, variance p s2 (s2 + 2) / 2.
std::vector<double> sample_mu_n(int p, double s2, int n_mc, Rng& rng);

// Monte Carlo refinements of the bounds: average the per-mu integrands over
// mu_n draws instead of taking the worst case (never larger than the
// worst-case bounds).
double bound_conditional_mc(double epsilon, double sigma_s,
                            double sigma_n_bar, long n, int p, double s2,
                            int n_mc, Rng& rng);
double bound_unconditional_mc(double sigma_s, double sigma_n_bar, long n,
                              int p, double s2, int n_mc, Rng& rng);

// Inverse of sigma -> u-averaged error at fixed mu_t (strictly increasing);
// throws when epsilon is not attainable.
double inverse_unconditional_error(double mu_t, double epsilon);

// Upper bound on the interquartile range of the acceptance-ratio estimate
// when the pair's u-averaged error is within epsilon:
// 2 exp(mu_t) sinh(Phi^-1(3/4) * E^-1_mu(epsilon)).
// Precondition: unconditional error at (theta, theta') <= epsilon.
double iqr_ratio_bound(const GpPosterior& gp, const Vec& theta,
                       const Vec& theta_prime, const Prior& prior,
                       double epsilon);

}  // namespace gpmh
