#include "gpmh/accept.hpp"

#include <boost/math/special_functions/owens_t.hpp>

#include <algorithm>
#include <cmath>

namespace gpmh {

PairStats pair_stats(const GpPosterior& gp, const Vec& theta,
                     const Vec& theta_prime,
                     const std::function<double(const Vec&)>& log_prior,
                     double log_proposal_ratio) {
  PairStats s;
  const double lp = log_prior ? log_prior(theta) : 0.0;
  const double lpp = log_prior ? log_prior(theta_prime) : 0.0;
  if (!std::isfinite(lp))
    throw std::invalid_argument("pair_stats: zero prior mass at theta");
  s.mu_t = gp.mean(theta_prime) - gp.mean(theta) + lpp - lp +
           log_proposal_ratio;
  s.sigma_t = std::sqrt(sigma_t2(gp, theta, theta_prime));
  return s;
}

double owen_t(double h, double a) {
  if (std::isinf(a)) {
    // T(h, +inf) = Phi(-|h|)/2, odd in a.
    const double lim = 0.5 * norm_cdf(-std::abs(h));
    return a > 0 ? lim : -lim;
  }
  return boost::math::owens_t(h, a);
}

double conditional_error(const PairStats& stats, double u) {
  if (!(u > 0.0 && u <= 1.0))
    throw std::invalid_argument("conditional_error: u must be in (0,1]");
  if (stats.sigma_t <= kSigmaFloor) return 0.0;
  return norm_cdf(-std::abs(stats.mu_t - std::log(u)) / stats.sigma_t);
}

double unconditional_error(const PairStats& stats) {
  const double mu = stats.mu_t;
  const double s = stats.sigma_t;
  if (s <= kSigmaFloor) return 0.0;
  // Both branches share exp(mu + s^2/2) * Phi(-(mu + s^2)/s), computed in a
  // cancellation-safe form.
  const double shared = exp_times_norm_cdf_neg(mu + 0.5 * s * s, (mu + s * s) / s);
  double e;
  if (mu >= 0.0) {
    e = norm_cdf(-mu / s) - shared;
  } else {
    // exp(mu + s^2/2) * 2 Phi(-s) = exp(mu) * erfcx(s / sqrt(2))
    e = norm_cdf(mu / s) + shared - std::exp(mu) * erfcx(s * kInvSqrt2);
  }
  return std::min(0.5, std::max(0.0, e));
}

KappaMoments kappa_mean_var(const PairStats& stats, double u) {
  if (!(u > 0.0 && u <= 1.0))
    throw std::invalid_argument("kappa_mean_var: u must be in (0,1]");
  KappaMoments out;
  const double lu = std::log(u);
  if (stats.sigma_t <= kSigmaFloor) {
    out.mean = stats.mu_t >= lu ? 1.0 : 0.0;
    out.variance = 0.0;
    return out;
  }
  out.mean = norm_cdf((stats.mu_t - lu) / stats.sigma_t);
  out.variance = out.mean * (1.0 - out.mean);
  return out;
}

DecideResult decide(const PairStats& stats, double u, double epsilon,
                    ErrorKind kind) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("decide: epsilon must be > 0");
  const double err = kind == ErrorKind::conditional
                         ? conditional_error(stats, u)
                         : unconditional_error(stats);
  if (err <= epsilon) {
    Decision d;
    d.gamma_hat = std::exp(stats.mu_t);
    d.accepted = stats.mu_t >= std::log(u);
    d.error_value = err;
    d.error_kind = kind;
    return d;
  }
  return NeedsEvaluation{err, kind};
}

MedianCheckReport median_optimality_check(
    const std::vector<double>& gamma_samples,
    const std::vector<double>& estimator_grid) {
  MedianCheckReport rep;
  rep.errors.reserve(estimator_grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < estimator_grid.size(); ++i) {
    const double ghat = std::min(estimator_grid[i], 1.0);
    double sum = 0.0;
    for (double g : gamma_samples) sum += std::abs(std::min(g, 1.0) - ghat);
    const double err = sum / static_cast<double>(gamma_samples.size());
    rep.errors.push_back(err);
    if (err < best) {
      best = err;
      rep.argmin = static_cast<int>(i);
    }
  }
  return rep;
}

}  // namespace gpmh
