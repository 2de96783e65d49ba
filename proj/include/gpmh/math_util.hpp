#pragma once

// Shared numerical utilities: normal distribution helpers, a deterministic
// RNG wrapper with named streams, adaptive Gauss-Kronrod quadrature, and a
// couple of tiny 1D solvers. Everything here is deliberately free of global
// state so that whole runs are reproducible from a single seed.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>

namespace gpmh {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

// Standard normal CDF via erfc (accurate in both tails).
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

// Standard normal quantile (inverse CDF).
double norm_quantile(double p);

// Scaled complementary error function exp(x^2) * erfc(x); remains finite for
// large positive x where the direct product would overflow/underflow.
double erfcx(double x);

// exp(m) * norm_cdf(-z), evaluated without overflow when m is large positive
// and z is large positive (the two factors nearly cancel).
double exp_times_norm_cdf_neg(double m, double z);

// Deterministic RNG stream. A (seed, stream) pair fully determines the draw
// sequence; distinct streams derived from one seed are independent for our
// purposes. Normal draws use the inverse-CDF method (exactly one uniform per
// normal) so that consumers can rely on a fixed draw count per operation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Uniform on the open interval (0,1).
  double uniform01();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  double normal() { return norm_quantile(uniform01()); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Poisson draw; mean must be >= 0 (mean 0 returns 0).
  long poisson(double mean);
  // Draw from N(mean, cov) given the lower Cholesky factor of cov.
  Vec normal_vec(const Vec& mean, const Mat& chol_lower);
  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

// Mixes a seed with a stream id (splitmix64-style) for substream derivation.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Adaptive Gauss-Kronrod (15,7) quadrature of f over [a, b] to an absolute
// tolerance. Bisects intervals whose local error estimate exceeds their
// share of the budget; max_depth bounds the recursion.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, int max_depth = 30);

// Golden-section search for the maximizer of a unimodal f on [a, b].
double golden_section_max(const std::function<double(double)>& f, double a,
                          double b, double tol = 1e-10);

// Finds x in [lo, hi] with f(x) = target for strictly increasing f, by
// bisection; requires f(lo) <= target <= f(hi).
double bisect_increasing(const std::function<double(double)>& f, double target,
                         double lo, double hi, double x_tol = 1e-13);

// Axis-aligned box (used for prior supports and optimizer bounds).
struct Box {
  Vec lo;
  Vec hi;
  bool contains(const Vec& x) const {
    for (int i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  Vec clamp(Vec x) const {
    for (int i = 0; i < x.size(); ++i)
      x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
    return x;
  }
  Vec center() const { return 0.5 * (lo + hi); }
};

// Parameter prior: uniform over `support` unless a log-density is supplied
// (which is still truncated to the support box). log() returns an
// unnormalized value; -inf outside the support.
struct Prior {
  Box support;
  std::function<double(const Vec&)> log_density;

  double log(const Vec& x) const {
    if (!support.contains(x)) return -std::numeric_limits<double>::infinity();
    return log_density ? log_density(x) : 0.0;
  }
};

}  // namespace gpmh
