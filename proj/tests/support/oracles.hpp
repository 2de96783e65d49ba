// Independent reference implementations used to cross-check the library.
// Everything here favors the most literal route available — full
// joint-covariance conditioning, defining integrals evaluated by quadrature,
// naive loops — over the optimized algebra used in src/.
#pragma once

#include <functional>
#include <vector>

#include "gpmh/gp.hpp"

namespace oracle {

using gpmh::Evaluation;
using gpmh::GpHyperparams;
using gpmh::Mat;
using gpmh::Vec;

// Freshly coded adaptive Simpson rule, deliberately separate from the
// library's integrator.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-11, int max_depth = 32);

double norm_cdf(double x);
double norm_pdf(double x);

// Owen's T from its defining integral.
double owen_t(double h, double a);

// Posterior of the basis-plus-kernel GP computed the slow way: assemble the
// full joint covariance over observed and test points and condition once.
class DenseGp {
 public:
  DenseGp(GpHyperparams hp, std::vector<Evaluation> data);

  double mean(const Vec& x) const;
  double cov(const Vec& a, const Vec& b) const;
  double var(const Vec& x) const { return cov(x, x); }

  // Var(f(theta') - f(theta) | data).
  double pair_diff_var(const Vec& theta, const Vec& theta_prime) const;
  // Same variance after additionally observing the columns of `extra` with
  // the given noise SDs (independent of the values observed there).
  double pair_diff_var_after(const Vec& theta, const Vec& theta_prime,
                             const Mat& extra, const Vec& extra_noise) const;

 private:
  double prior_mean(const Vec& x) const;
  double prior_cov(const Vec& a, const Vec& b) const;
  double observation_noise(std::size_t i) const;
  // Conditional covariance of (f(a), f(b)) given noisy observations at pts.
  double cov_given(const std::vector<Vec>& pts,
                   const std::vector<double>& noise_sds, const Vec& a,
                   const Vec& b) const;

  GpHyperparams hp_;
  std::vector<Evaluation> data_;
};

// Quadrature versions of the decision-error quantities, as expectations over
// log u and/or the refreshed surrogate log-ratio mean.
double unconditional_error(double mu, double sigma);
double expected_conditional_error(double mu, double sigma, double xi2,
                                  double u);
double expected_unconditional_error(double mu, double sigma, double xi2);
double expected_kappa_variance(double mu, double sigma, double xi2, double u);

// Naive 13-statistic time-series summary; the regressions use SVD least
// squares on the raw design matrices.
std::vector<double> wood_reference(const std::vector<double>& x);

// Gaussian log-density of obs under the sample mean / covariance (divisor
// n - 1) of the given replicate summaries, via plain inverse and determinant.
double sl_logpdf_reference(const std::vector<std::vector<double>>& rows,
                           const std::vector<double>& obs);

}  // namespace oracle
