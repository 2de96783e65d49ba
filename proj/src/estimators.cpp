#include "gpmh/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gpmh {

double log_unnormalized_estimate(const SurrogatePosterior& sp,
                                 const Vec& theta) {
  const double lp = sp.prior.log(theta);
  if (lp == -std::numeric_limits<double>::infinity()) return lp;
  const double m = sp.gp.mean(theta);
  return sp.kind == EstimatorKind::marginal_mode ? lp + m - sp.gp.var(theta)
                                                 : lp + m;
}

namespace {

// Normalized histogram over [lo, hi) with `bins` cells; the top edge closes
// the last cell.
std::vector<double> histogram(const std::vector<double>& xs, double lo,
                              double hi, int bins) {
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  const double width = hi - lo;
  for (double x : xs) {
    int idx = width > 0.0
                  ? static_cast<int>((x - lo) / width * bins)
                  : 0;
    idx = std::clamp(idx, 0, bins - 1);
    h[static_cast<std::size_t>(idx)] += 1.0;
  }
  const double n = static_cast<double>(xs.size());
  for (double& v : h) v /= n;
  return h;
}

}  // namespace

TvReport marginal_tv(const std::vector<Vec>& samples_a,
                     const std::vector<Vec>& samples_b, int bins,
                     bool compute_joint_2d) {
  if (samples_a.empty() || samples_b.empty())
    throw std::invalid_argument("marginal_tv needs non-empty sample sets");
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  const int p = static_cast<int>(samples_a.front().size());
  if (static_cast<int>(samples_b.front().size()) != p)
    throw std::invalid_argument("sample dimension mismatch");

  TvReport report;
  report.per_dimension_tv.resize(static_cast<std::size_t>(p));
  std::vector<double> lo(static_cast<std::size_t>(p));
  std::vector<double> hi(static_cast<std::size_t>(p));
  for (int d = 0; d < p; ++d) {
    double mn = samples_a.front()[d];
    double mx = mn;
    for (const auto& s : samples_a) {
      mn = std::min(mn, s[d]);
      mx = std::max(mx, s[d]);
    }
    for (const auto& s : samples_b) {
      mn = std::min(mn, s[d]);
      mx = std::max(mx, s[d]);
    }
    lo[static_cast<std::size_t>(d)] = mn;
    hi[static_cast<std::size_t>(d)] = mx;

    std::vector<double> xa, xb;
    xa.reserve(samples_a.size());
    xb.reserve(samples_b.size());
    for (const auto& s : samples_a) xa.push_back(s[d]);
    for (const auto& s : samples_b) xb.push_back(s[d]);
    const auto ha = histogram(xa, mn, mx, bins);
    const auto hb = histogram(xb, mn, mx, bins);
    double tv = 0.0;
    for (int i = 0; i < bins; ++i)
      tv += std::abs(ha[static_cast<std::size_t>(i)] -
                     hb[static_cast<std::size_t>(i)]);
    report.per_dimension_tv[static_cast<std::size_t>(d)] = 0.5 * tv;
  }
  double acc = 0.0;
  for (double v : report.per_dimension_tv) acc += v;
  report.mean_tv = acc / p;

  if (compute_joint_2d && p == 2) {
    const int b = bins;
    std::vector<double> ha(static_cast<std::size_t>(b) * b, 0.0);
    std::vector<double> hb(static_cast<std::size_t>(b) * b, 0.0);
    auto cell = [&](const Vec& s) {
      int ix = 0;
      int iy = 0;
      if (hi[0] > lo[0])
        ix = std::clamp(
            static_cast<int>((s[0] - lo[0]) / (hi[0] - lo[0]) * b), 0, b - 1);
      if (hi[1] > lo[1])
        iy = std::clamp(
            static_cast<int>((s[1] - lo[1]) / (hi[1] - lo[1]) * b), 0, b - 1);
      return static_cast<std::size_t>(ix) * b + iy;
    };
    for (const auto& s : samples_a) ha[cell(s)] += 1.0;
    for (const auto& s : samples_b) hb[cell(s)] += 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < ha.size(); ++i)
      tv += std::abs(ha[i] / samples_a.size() - hb[i] / samples_b.size());
    report.joint_tv_2d = 0.5 * tv;
  }
  return report;
}

double noise_scale_c_n(double sigma_s, double sigma_n_bar, long n) {
  const long half = n / 2;
  if (half <= 0) return 2.0 * sigma_s;
  return 2.0 * std::min(sigma_s, sigma_n_bar / std::sqrt(
                                     static_cast<double>(half)));
}

double bound_conditional(double epsilon, double sigma_s, double sigma_n_bar,
                         long n) {
  if (!(epsilon > 0.0 && epsilon <= 0.5))
    throw std::invalid_argument("epsilon must be in (0, 1/2]");
  const double c = noise_scale_c_n(sigma_s, sigma_n_bar, n);
  return 1.0 - std::exp(2.0 * norm_quantile(epsilon) * c);
}

double bound_unconditional(double sigma_s, double sigma_n_bar, long n) {
  const double c = noise_scale_c_n(sigma_s, sigma_n_bar, n);
  if (c <= 0.0) return 0.0;
  const auto f = [c](double mu) {
    return unconditional_error({mu, c});
  };
  const double mu_star = golden_section_max(f, -20.0, 0.0);
  return std::max({f(mu_star), f(-20.0), f(0.0)});
}

std::vector<double> sample_mu_n(int p, double s2, int n_mc, Rng& rng) {
  if (p < 1 || n_mc < 1 || s2 < 0.0)
    throw std::invalid_argument("sample_mu_n: bad arguments");
  const double s = std::sqrt(s2);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_mc));
  for (int i = 0; i < n_mc; ++i) {
    double mu = 0.0;
    for (int j = 0; j < p; ++j) {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      const double psi = z1;
      const double psi_prime = z1 + s * z2;
      mu += 0.5 * (psi * psi - psi_prime * psi_prime);
    }
    out.push_back(mu);
  }
  return out;
}

double bound_conditional_mc(double epsilon, double sigma_s,
                            double sigma_n_bar, long n, int p, double s2,
                            int n_mc, Rng& rng) {
  if (!(epsilon > 0.0 && epsilon <= 0.5))
    throw std::invalid_argument("epsilon must be in (0, 1/2]");
  const double c = noise_scale_c_n(sigma_s, sigma_n_bar, n);
  const double lambda = -norm_quantile(epsilon) * c;  // >= 0
  const auto draws = sample_mu_n(p, s2, n_mc, rng);
  double acc = 0.0;
  for (double mu : draws) {
    // P(conditional error >= epsilon | mu): the u-measure of the interval
    // where |mu - log u| < lambda.
    const double upper = std::min(std::exp(mu + lambda), 1.0);
    const double lower = std::min(std::exp(mu - lambda), 1.0);
    acc += upper - lower;
  }
  return acc / n_mc;
}

double bound_unconditional_mc(double sigma_s, double sigma_n_bar, long n,
                              int p, double s2, int n_mc, Rng& rng) {
  const double c = noise_scale_c_n(sigma_s, sigma_n_bar, n);
  const auto draws = sample_mu_n(p, s2, n_mc, rng);
  double acc = 0.0;
  for (double mu : draws) acc += unconditional_error({mu, c});
  return acc / n_mc;
}

double inverse_unconditional_error(double mu_t, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw std::invalid_argument("epsilon must be in (0, 1/2)");
  const auto f = [mu_t](double sigma) {
    return unconditional_error({mu_t, sigma});
  };
  double hi = 1.0;
  while (f(hi) < epsilon) {
    hi *= 2.0;
    if (hi > 1e8)
      throw std::runtime_error(
          "inverse_unconditional_error: epsilon not attainable");
  }
  return bisect_increasing(f, epsilon, 0.0, hi);
}

double iqr_ratio_bound(const GpPosterior& gp, const Vec& theta,
                       const Vec& theta_prime, const Prior& prior,
                       double epsilon) {
  const auto log_prior = [&prior](const Vec& th) { return prior.log(th); };
  const PairStats stats = pair_stats(gp, theta, theta_prime, log_prior);
  const double err = unconditional_error(stats);
  if (err > epsilon)
    throw std::invalid_argument(
        "iqr_ratio_bound requires the pair's error to be within epsilon");
  const double sigma_eps = inverse_unconditional_error(stats.mu_t, epsilon);
  return 2.0 * std::exp(stats.mu_t) *
         std::sinh(norm_quantile(0.75) * sigma_eps);
}

}  // namespace gpmh
