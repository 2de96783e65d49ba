#include "gpmh/design.hpp"

#include <algorithm>
#include <cmath>

namespace gpmh {

namespace {

// Clamp xi^2 into [0, sigma^2]; tiny negatives and overshoots are roundoff.
double clamp_xi2(double xi2, double sigma2) {
  return std::min(std::max(xi2, 0.0), sigma2);
}

}  // namespace

double expected_conditional_error_from(const PairStats& stats, double xi2,
                                       double u) {
  if (!(u > 0.0 && u <= 1.0))
    throw std::invalid_argument("expected_conditional_error: u in (0,1]");
  const double s2 = stats.sigma_t * stats.sigma_t;
  if (stats.sigma_t <= kSigmaFloor) return 0.0;
  xi2 = clamp_xi2(xi2, s2);
  const double z = (std::log(u) - stats.mu_t) / stats.sigma_t;
  if (xi2 <= 0.0) return conditional_error(stats, u);  // 2T(z, inf) limit
  const double rest = s2 - xi2;
  if (rest <= 0.0) return 0.0;  // 2T(z, 0) = 0
  return 2.0 * owen_t(z, std::sqrt(rest / xi2));
}

double expected_unconditional_error_from(const PairStats& stats, double xi2) {
  const double s2 = stats.sigma_t * stats.sigma_t;
  if (stats.sigma_t <= kSigmaFloor) return 0.0;
  xi2 = clamp_xi2(xi2, s2);
  if (xi2 <= 0.0) return unconditional_error(stats);
  if (xi2 >= s2) return 0.0;
  const double a = std::sqrt((s2 - xi2) / xi2);
  const double result = integrate(
      [&](double u) {
        const double z = (std::log(u) - stats.mu_t) / stats.sigma_t;
        return 2.0 * owen_t(z, a);
      },
      0.0, 1.0, 1e-11);
  return std::min(0.5, std::max(0.0, result));
}

double expected_kappa_variance_from(const PairStats& stats, double xi2,
                                    double u) {
  if (!(u > 0.0 && u <= 1.0))
    throw std::invalid_argument("expected_kappa_variance: u in (0,1]");
  const double s2 = stats.sigma_t * stats.sigma_t;
  if (stats.sigma_t <= kSigmaFloor) return 0.0;
  xi2 = clamp_xi2(xi2, s2);
  const double z = (std::log(u) - stats.mu_t) / stats.sigma_t;
  if (xi2 >= s2) return 0.0;
  // xi^2 = 0 gives 2T(z, 1) = Phi(z)(1 - Phi(z)), the current variance.
  return 2.0 * owen_t(z, std::sqrt((s2 - xi2) / (s2 + xi2)));
}

namespace {

PairStats stats_for(const GpPosterior& gp, const Vec& theta,
                    const Vec& theta_prime, double correction) {
  PairStats s;
  s.mu_t = gp.mean(theta_prime) - gp.mean(theta) + correction;
  s.sigma_t = std::sqrt(sigma_t2(gp, theta, theta_prime));
  return s;
}

double xi2_for(const GpPosterior& gp, const Vec& theta, const Vec& theta_prime,
               const Vec& theta_star, double star_noise_sd) {
  Mat cand(theta_star.size(), 1);
  cand.col(0) = theta_star;
  Vec noise(1);
  noise[0] = star_noise_sd;
  return lookahead_xi2(gp, theta, theta_prime, cand, noise);
}

}  // namespace

double expected_conditional_error(const GpPosterior& gp, const Vec& theta,
                                  const Vec& theta_prime, double u,
                                  const Vec& theta_star, double star_noise_sd,
                                  double log_ratio_correction) {
  return expected_conditional_error_from(
      stats_for(gp, theta, theta_prime, log_ratio_correction),
      xi2_for(gp, theta, theta_prime, theta_star, star_noise_sd), u);
}

double expected_unconditional_error(const GpPosterior& gp, const Vec& theta,
                                    const Vec& theta_prime,
                                    const Vec& theta_star, double star_noise_sd,
                                    double log_ratio_correction) {
  return expected_unconditional_error_from(
      stats_for(gp, theta, theta_prime, log_ratio_correction),
      xi2_for(gp, theta, theta_prime, theta_star, star_noise_sd));
}

double expected_kappa_variance(const GpPosterior& gp, const Vec& theta,
                               const Vec& theta_prime, double u,
                               const Vec& theta_star, double star_noise_sd,
                               double log_ratio_correction) {
  return expected_kappa_variance_from(
      stats_for(gp, theta, theta_prime, log_ratio_correction),
      xi2_for(gp, theta, theta_prime, theta_star, star_noise_sd), u);
}

Box epoe_box(const GpPosterior& gp, const Vec& theta, const Vec& theta_prime,
             double box_scale_c, const Box& domain_bounds) {
  const int p = gp.dim();
  Box box;
  box.lo.resize(p);
  box.hi.resize(p);
  const Vec& l = gp.hyperparams().lengthscales;
  for (int i = 0; i < p; ++i) {
    double lo = std::min(theta[i], theta_prime[i]) - box_scale_c * l[i];
    double hi = std::max(theta[i], theta_prime[i]) + box_scale_c * l[i];
    if (domain_bounds.lo.size() == p) lo = std::max(lo, domain_bounds.lo[i]);
    if (domain_bounds.hi.size() == p) hi = std::min(hi, domain_bounds.hi[i]);
    if (lo > hi) lo = hi = 0.5 * (lo + hi);
    box.lo[i] = lo;
    box.hi[i] = hi;
  }
  return box;
}

namespace {

// Projected BFGS ascent of xi^2 over a box. The inverse-Hessian estimate is
// refreshed to identity whenever curvature information is unusable (box face
// active or non-positive s'y).
struct BoxAscentResult {
  Vec x;
  double value = -1.0;
  bool ok = false;
};

BoxAscentResult maximize_xi2_in_box(const PairContext& ctx, const Box& box,
                                    double star_noise_sd, Vec start,
                                    int max_iterations) {
  const int p = static_cast<int>(start.size());
  BoxAscentResult res;
  Vec x = box.clamp(std::move(start));
  Vec g(p);
  double f = ctx.xi2_grad(x, star_noise_sd, g);
  if (!std::isfinite(f)) return res;
  Mat Hinv = Mat::Identity(p, p);
  for (int iter = 0; iter < max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;
    Vec dir = Hinv * g;
    if (dir.dot(g) <= 0.0) {
      Hinv = Mat::Identity(p, p);
      dir = g;
    }
    double step = 1.0;
    bool moved = false;
    Vec xn, gn;
    double fn = 0.0;
    while (step >= 1e-12) {
      xn = box.clamp(x + step * dir);
      const Vec dx = xn - x;
      if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
      gn.resize(p);
      fn = ctx.xi2_grad(xn, star_noise_sd, gn);
      if (std::isfinite(fn) && fn >= f + 1e-4 * std::max(0.0, g.dot(dx))) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    const Vec s = xn - x;
    const Vec yv = gn - g;  // gradient change (ascent: curvature is -s'y)
    const double sy = -s.dot(yv);
    bool on_face = false;
    for (int i = 0; i < p; ++i)
      if (xn[i] == box.lo[i] || xn[i] == box.hi[i]) on_face = true;
    if (!on_face && sy > 1e-12) {
      // BFGS update on the minimization problem of -xi^2 (gradient -g).
      const Vec ym = -yv;
      const double rho = 1.0 / ym.dot(s);
      const Mat I = Mat::Identity(p, p);
      Hinv = (I - rho * s * ym.transpose()) * Hinv *
                 (I - rho * ym * s.transpose()) +
             rho * s * s.transpose();
    } else {
      Hinv = Mat::Identity(p, p);
    }
    const double move = s.lpNorm<Eigen::Infinity>();
    x = xn;
    f = fn;
    g = gn;
    if (move < 1e-11) break;
  }
  res.x = x;
  res.value = f;
  res.ok = std::isfinite(f);
  return res;
}

}  // namespace

Vec select_evaluation(const GpPosterior& gp, const Vec& theta,
                      const Vec& theta_prime, const DesignStrategy& strategy,
                      const Box& domain_bounds, Rng& rng) {
  switch (strategy.kind) {
    case StrategyKind::Naive:
      return rng.uniform01() < 0.5 ? theta : theta_prime;
    case StrategyKind::EPoEr: {
      PairContext ctx(gp, theta, theta_prime);
      const double at_theta = ctx.xi2(theta, strategy.candidate_noise_sd);
      const double at_prime = ctx.xi2(theta_prime, strategy.candidate_noise_sd);
      // Ties go to the proposed point.
      return at_theta > at_prime + 1e-12 ? theta : theta_prime;
    }
    case StrategyKind::EPoE:
      break;
  }
  PairContext ctx(gp, theta, theta_prime);
  const Box box =
      epoe_box(gp, theta, theta_prime, strategy.box_scale_c, domain_bounds);
  std::vector<Vec> starts;
  starts.push_back(theta);
  starts.push_back(theta_prime);
  starts.push_back(0.5 * (theta + theta_prime));
  const int extra = std::max(0, strategy.restarts - 3);
  for (int s = 0; s < extra; ++s) {
    Vec u(box.lo.size());
    for (int i = 0; i < u.size(); ++i)
      u[i] = rng.uniform(box.lo[i], box.hi[i]);
    starts.push_back(u);
  }
  Vec best_x;
  double best_val = -1.0;
  for (const Vec& start : starts) {
    BoxAscentResult r = maximize_xi2_in_box(ctx, box, strategy.candidate_noise_sd,
                                            start, strategy.max_iterations);
    if (r.ok && r.value > best_val) {
      best_val = r.value;
      best_x = r.x;
    }
  }
  if (best_val >= 0.0 && best_x.size() > 0) return best_x;
  // Optimizer failure: best of {theta, theta', box center} by direct score.
  Vec fallback[3] = {theta, theta_prime, box.center()};
  Vec best_fb = fallback[0];
  double best_fb_val = -1.0;
  for (const Vec& c : fallback) {
    const double v = ctx.xi2(c, strategy.candidate_noise_sd);
    if (std::isfinite(v) && v > best_fb_val) {
      best_fb_val = v;
      best_fb = c;
    }
  }
  return best_fb;
}

}  // namespace gpmh
