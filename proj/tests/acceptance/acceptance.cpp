// End-to-end acceptance gates for the surrogate-assisted MH engine. Each
// criterion prints exactly one PASS/FAIL line with its pinned tolerance and
// measured runtime; the process exit code is the number of failures.
//
// Flags:
//   --only N        run a single criterion (repeatable)
//   --paper-scale   switch the population-model run to its long form
//                   (10^5 chain iterations, tighter distance gate); off by
//                   default and not part of CI
//   --cache-root D  directory for cached ground-truth samples
//                   (default: ./acceptance_cache, reused across runs)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cli/experiment.hpp"
#include "gpmh/accept.hpp"
#include "gpmh/design.hpp"
#include "gpmh/estimators.hpp"
#include "gpmh/gp.hpp"
#include "gpmh/likelihoods.hpp"
#include "gpmh/math_util.hpp"
#include "gpmh/sampler.hpp"
#include "support/oracles.hpp"

using namespace gpmh;
using clock_type = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string cache_root = "acceptance_cache";
bool paper_scale = false;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return std::string(buf);
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<Vec> drop_prefix(const std::vector<Vec>& xs, double fraction) {
  const auto skip = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(xs.size())));
  return std::vector<Vec>(xs.begin() + static_cast<std::ptrdiff_t>(skip),
                          xs.end());
}

double zero_prior(const Vec&) { return 0.0; }

// ---------------------------------------------------------------------------
// 1. Closed-form decision error and Owen's T against quadrature oracles.

Outcome criterion1() {
  const auto t0 = clock_type::now();
  double max_grid_err = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double mu = -10.0 + 15.0 * i / 49.0;
    for (int j = 0; j < 50; ++j) {
      const double sigma = 0.05 * std::pow(10.0 / 0.05, j / 49.0);
      const double closed = unconditional_error({mu, sigma});
      const double quad = oracle::unconditional_error(mu, sigma);
      max_grid_err = std::max(max_grid_err, std::abs(closed - quad));
    }
  }
  double max_owen_err = 0.0;
  Rng rng(20260825, 1);
  for (int k = 0; k < 1000; ++k) {
    const double h = rng.uniform(-5.0, 5.0);
    const double a = rng.uniform(-8.0, 8.0);
    max_owen_err =
        std::max(max_owen_err, std::abs(owen_t(h, a) - oracle::owen_t(h, a)));
  }
  const double secs = seconds_since(t0);
  const bool pass = max_grid_err < 1e-8 && max_owen_err < 1e-12 && secs < 10.0;
  return {pass, fmt("u-averaged error max|closed-quad|=%.2e (<1e-8) on 2500 "
                    "cells; OwenT max err=%.2e (<1e-12) on 1000 pairs; %.1f s "
                    "(<10)",
                    max_grid_err, max_owen_err, secs)};
}

// ---------------------------------------------------------------------------
// 2. One-step lookahead closed forms against a Monte Carlo refresh oracle.

Outcome criterion2() {
  const auto t0 = clock_type::now();
  const int n_mc = 100000;
  int checked = 0;
  double worst_pull = 0.0;  // |closed - mc| in units of the MC standard error
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(3000 + inst, 0);
    const int p = 1 + inst % 2;
    GpHyperparams hp = default_hyperparams(p, rng.uniform(0.8, 1.5), 1.0);
    for (int d = 0; d < p; ++d) hp.lengthscales[d] = rng.uniform(0.8, 2.0);
    std::vector<Evaluation> data;
    for (int i = 0; i < 8; ++i) {
      Vec th(p);
      for (int d = 0; d < p; ++d) th[d] = rng.uniform(-2.0, 2.0);
      const double y = std::sin(th[0]) - 0.3 * th.squaredNorm() +
                       rng.normal(0.0, 0.3);
      data.push_back({th, y, rng.uniform(0.2, 0.6)});
    }
    const GpPosterior gp(hp, data);
    Vec a(p), b(p), star(p);
    for (int d = 0; d < p; ++d) {
      a[d] = rng.uniform(-1.5, 1.5);
      b[d] = rng.uniform(-1.5, 1.5);
      star[d] = 0.5 * (a[d] + b[d]) + rng.uniform(-0.3, 0.3);
    }
    const double star_sd = rng.uniform(0.1, 0.4);
    const double u = rng.uniform(0.1, 0.9);

    const double closed_cond =
        expected_conditional_error(gp, a, b, u, star, star_sd);
    const double closed_uncond =
        expected_unconditional_error(gp, a, b, star, star_sd);
    const double closed_kvar =
        expected_kappa_variance(gp, a, b, u, star, star_sd);

    const double m_star = gp.mean(star);
    const double draw_sd = std::sqrt(gp.var(star) + star_sd * star_sd);
    std::vector<Evaluation> work = data;
    work.push_back({star, 0.0, star_sd});
    double s_c = 0.0, s2_c = 0.0, s_u = 0.0, s2_u = 0.0, s_k = 0.0,
           s2_k = 0.0;
    for (int d = 0; d < n_mc; ++d) {
      work.back().y = m_star + draw_sd * rng.normal();
      const GpPosterior refreshed(hp, work);
      const PairStats st = pair_stats(refreshed, a, b, zero_prior);
      const double c = conditional_error(st, u);
      const double uu = unconditional_error(st);
      const double k = kappa_mean_var(st, u).variance;
      s_c += c;
      s2_c += c * c;
      s_u += uu;
      s2_u += uu * uu;
      s_k += k;
      s2_k += k * k;
    }
    const auto pull = [n_mc](double closed, double sum, double sum2) {
      const double mean = sum / n_mc;
      const double var = std::max(0.0, sum2 / n_mc - mean * mean);
      const double se = std::sqrt(var / n_mc) + 1e-12;
      return std::abs(closed - mean) / se;
    };
    worst_pull = std::max({worst_pull, pull(closed_cond, s_c, s2_c),
                           pull(closed_uncond, s_u, s2_u),
                           pull(closed_kvar, s_k, s2_k)});
    checked += 3;
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_pull <= 3.0 && secs < 120.0;
  return {pass, fmt("%d closed-form lookahead values vs 1e5-draw refresh "
                    "oracle; worst |closed-mc| = %.2f SE (<=3); %.1f s (<120)",
                    checked, worst_pull, secs)};
}

// ---------------------------------------------------------------------------
// 3. The three selection criteria share their minimizer with argmax xi^2.

Outcome criterion3() {
  const auto t0 = clock_type::now();
  int instances_ok = 0;
  std::string first_fail;
  for (int inst = 0; inst < 10; ++inst) {
    Rng rng(4100 + inst, 0);
    const int p = inst < 5 ? 1 : 2;
    GpHyperparams hp = default_hyperparams(p, 1.0, 1.2);
    std::vector<Evaluation> data;
    for (int i = 0; i < 10; ++i) {
      Vec th(p);
      for (int d = 0; d < p; ++d) th[d] = rng.uniform(-2.5, 2.5);
      data.push_back({th, -0.3 * th.squaredNorm() + rng.normal(0.0, 0.3),
                      rng.uniform(0.6, 1.0)});
    }
    const GpPosterior gp(hp, data);
    // Pick a transition whose decision stays numerically resolvable for all
    // three u levels: |(log u - mu_t) / sigma_t| <= 5 keeps the error
    // criteria away from their double-precision saturation plateaus, where
    // the argmin would be a tie.
    Vec a(p), b(p);
    PairStats stats;
    for (int attempt = 0; attempt < 500; ++attempt) {
      for (int d = 0; d < p; ++d) {
        a[d] = rng.uniform(-1.5, 0.0);
        b[d] = rng.uniform(0.0, 1.5);
      }
      stats = pair_stats(gp, a, b, zero_prior);
      bool resolvable = stats.sigma_t >= 0.15;
      for (double u : {0.1, 0.5, 0.9})
        resolvable = resolvable &&
                     std::abs((std::log(u) - stats.mu_t) / stats.sigma_t) <=
                         5.0;
      if (resolvable) break;
    }
    Box domain;
    domain.lo = Vec::Constant(p, -4.0);
    domain.hi = Vec::Constant(p, 4.0);
    const Box box = epoe_box(gp, a, b, 0.75, domain);
    const PairContext ctx(gp, a, b);
    const double star_sd = 0.2;

    // 10^4 candidate cells.
    std::vector<Vec> cells;
    if (p == 1) {
      cells.reserve(10000);
      for (int i = 0; i < 10000; ++i) {
        const double x =
            box.lo[0] + (box.hi[0] - box.lo[0]) * (i + 0.5) / 10000.0;
        cells.push_back(Vec::Constant(1, x));
      }
    } else {
      cells.reserve(10000);
      for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
          Vec c(2);
          c << box.lo[0] + (box.hi[0] - box.lo[0]) * (i + 0.5) / 100.0,
              box.lo[1] + (box.hi[1] - box.lo[1]) * (j + 0.5) / 100.0;
          cells.push_back(c);
        }
    }
    std::vector<double> xi2(cells.size());
    std::size_t best_xi = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      xi2[i] = ctx.xi2(cells[i], star_sd);
      if (xi2[i] > xi2[best_xi]) best_xi = i;
    }
    // Agreement check: the xi^2-argmax cell must attain the exact minimum of
    // the criterion. Distinct cells with bitwise-equal minimal values count
    // as agreement (the minimizer set is shared); a criterion that is flat
    // across the whole grid never counts.
    bool ok = true;
    const auto agrees = [&](const std::vector<double>& vals,
                            const char* label, double u) {
      std::size_t best = 0, worst = 0;
      for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i] < vals[best]) best = i;
        if (vals[i] > vals[worst]) worst = i;
      }
      const bool shared =
          vals[best_xi] == vals[best] && vals[worst] > vals[best];
      if (!shared && first_fail.empty())
        first_fail = fmt(" (instance %d %s u=%.1f: xi cell %zu val %.17g vs "
                         "min cell %zu val %.17g, range %.3g)",
                         inst, label, u, best_xi, vals[best_xi], best,
                         vals[best], vals[worst] - vals[best]);
      return shared;
    };
    std::vector<double> vals(cells.size());
    for (double u : {0.1, 0.5, 0.9}) {
      for (std::size_t i = 0; i < cells.size(); ++i)
        vals[i] = expected_conditional_error_from(stats, xi2[i], u);
      ok = agrees(vals, "cond", u) && ok;
      for (std::size_t i = 0; i < cells.size(); ++i)
        vals[i] = expected_kappa_variance_from(stats, xi2[i], u);
      ok = agrees(vals, "kvar", u) && ok;
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
      vals[i] = expected_unconditional_error_from(stats, xi2[i]);
    ok = agrees(vals, "uncond", 0.0) && ok;
    if (ok) ++instances_ok;
  }
  const double secs = seconds_since(t0);
  const bool pass = instances_ok == 10 && secs < 60.0;
  return {pass, fmt("argmax xi^2 cell = argmin cell of all three criteria at "
                    "u in {0.1,0.5,0.9} on %d/10 instances (1e4-cell grids); "
                    "%.1f s (<60)%s",
                    instances_ok, secs, first_fail.c_str())};
}

// ---------------------------------------------------------------------------
// 4. Surrogate predictions against dense joint-Gaussian conditioning.

Outcome criterion4() {
  const auto t0 = clock_type::now();
  double worst_rel = 0.0;
  int combos = 0;
  for (int p : {1, 2}) {
    for (bool with_basis : {true, false}) {
      for (bool global_noise : {false, true}) {
        Rng rng(5200 + combos, 0);
        GpHyperparams hp = with_basis
                               ? default_hyperparams(p, 1.3, 1.0)
                               : kernel_only_hyperparams(p, 1.3, 1.0);
        for (int d = 0; d < p; ++d) hp.lengthscales[d] = rng.uniform(0.7, 1.8);
        if (global_noise) hp.noise_sd_global = 0.35;
        std::vector<Evaluation> data;
        for (int i = 0; i < 12; ++i) {
          Vec th(p);
          for (int d = 0; d < p; ++d) th[d] = rng.uniform(-2.0, 2.0);
          data.push_back({th, rng.normal(0.0, 1.2), rng.uniform(0.2, 0.5)});
        }
        const GpPosterior gp(hp, data);
        const oracle::DenseGp dense(hp, data);
        const auto rel = [&](double got, double want) {
          worst_rel = std::max(
              worst_rel, std::abs(got - want) /
                             std::max({1.0, std::abs(got), std::abs(want)}));
        };
        std::vector<Vec> probes;
        for (int k = 0; k < 5; ++k) {
          Vec th(p);
          for (int d = 0; d < p; ++d) th[d] = rng.uniform(-2.5, 2.5);
          probes.push_back(th);
        }
        for (const auto& th : probes) {
          rel(gp.mean(th), dense.mean(th));
          rel(gp.var(th), dense.cov(th, th));
        }
        for (std::size_t i = 0; i + 1 < probes.size(); ++i) {
          const Vec& x = probes[i];
          const Vec& y = probes[i + 1];
          rel(gp.cov(x, y), dense.cov(x, y));
          rel(sigma_t2(gp, x, y), dense.pair_diff_var(x, y));
          // One- and two-point lookahead variance reductions.
          for (int bsize : {1, 2}) {
            Mat cand(p, bsize);
            Vec csd(bsize);
            for (int c = 0; c < bsize; ++c) {
              for (int d = 0; d < p; ++d) cand(d, c) = rng.uniform(-2.0, 2.0);
              csd[c] = rng.uniform(0.15, 0.4);
            }
            const double after = dense.pair_diff_var_after(x, y, cand, csd);
            rel(lookahead_xi2(gp, x, y, cand, csd),
                dense.pair_diff_var(x, y) - after);
          }
        }
        ++combos;
      }
    }
  }

  // Repeated evaluations of one point: the posterior sd follows the
  // 1/sqrt(1 + t sd_s^2 / sd_n^2) contraction exactly.
  const double sd_s = 1.3;
  const double sd_n = 0.4;
  double worst_rep = 0.0;
  bool jitter_free = true;
  const Vec x0 = Vec::Constant(1, 0.7);
  std::vector<Evaluation> rep;
  for (int t = 1; t <= 20; ++t) {
    rep.push_back({x0, 0.3, sd_n});
    const GpPosterior gp(kernel_only_hyperparams(1, sd_s, 1.0), rep);
    const double want = sd_s / std::sqrt(1.0 + t * sd_s * sd_s /
                                                   (sd_n * sd_n));
    worst_rep =
        std::max(worst_rep, std::abs(std::sqrt(gp.var(x0)) - want));
    if (gp.jitter_used() != 0.0) jitter_free = false;
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_rel < 1e-8 && worst_rep < 1e-10 && jitter_free;
  return {pass, fmt("dense-conditioning max rel err=%.2e (<1e-8) over %d "
                    "configs at t=12; repeated-point sd max err=%.2e (<1e-10, "
                    "no jitter) for t=1..20; %.1f s",
                    worst_rel, combos, worst_rep, secs)};
}

// ---------------------------------------------------------------------------
// 5. Zero-noise pre-trained surrogate = classical MH, decision for decision.

Outcome criterion5() {
  const auto t0 = clock_type::now();
  const auto f = [](const Vec& th) {
    return -0.5 * th[0] * th[0] - th[1] * th[1] / 8.0;
  };
  Prior prior;
  prior.support.lo = Vec::Constant(2, -10.0);
  prior.support.hi = Vec::Constant(2, 10.0);
  const NoisyLogLikelihood target = deterministic_loglik(2, prior.support, f);

  RunConfig config;
  config.epsilon = 0.05;
  config.error_kind = ErrorKind::conditional;
  config.i_mh = 1000;
  config.seed = 612;
  config.initial_point = Vec::Zero(2);
  config.initial_proposal_cov = Mat::Zero(2, 2);
  config.initial_proposal_cov(0, 0) = 1.0;
  config.initial_proposal_cov(1, 1) = 4.0;
  config.strategy.kind = StrategyKind::EPoEr;
  GpHyperparams hp = default_hyperparams(2, 0.01, 2.0);
  config.fixed_hyperparams = hp;
  for (double x : {-4.0, 0.0, 4.0})
    for (double y : {-4.0, 0.0, 4.0}) {
      Vec th(2);
      th << x, y;
      config.init_evaluations.push_back({th, f(th), 0.0});
    }

  const RunResult emulated = run_gp_mh(target, prior, config);
  const std::vector<Vec> classical = run_reference_mh(
      target, prior, config.initial_point, config.initial_proposal_cov,
      config.i_mh, config.seed);
  std::size_t mismatches = 0;
  if (emulated.samples.size() != classical.size()) {
    mismatches = 1 + classical.size();
  } else {
    for (std::size_t k = 0; k < classical.size(); ++k)
      if (emulated.samples[k] != classical[k]) ++mismatches;
  }
  const double secs = seconds_since(t0);
  const long acquired =
      static_cast<long>(emulated.evaluations.size()) - 9;
  const bool pass = mismatches == 0 && acquired > 0;
  return {pass, fmt("emulated vs classical chains identical on %zu/%zu "
                    "iterations (bit-for-bit), %ld evaluations acquired "
                    "beyond the 9-point design; %.1f s",
                    classical.size() - mismatches, classical.size(), acquired,
                    secs)};
}

// ---------------------------------------------------------------------------
// 6. Decision-error rate bounds and the scenario sampler's moments.

Outcome criterion6() {
  const auto t0 = clock_type::now();
  bool bounded = true;
  double worst_gap = -1.0;
  Rng rng(20260825, 6);
  for (long n : {1L, 2L, 5L, 10L, 50L, 100L, 1000L}) {
    for (double eps : {0.05, 0.1, 0.2, 0.3}) {
      const double wc = bound_conditional(eps, 1.0, 1.0, n);
      const double mc =
          bound_conditional_mc(eps, 1.0, 1.0, n, 5, 1.152, 10000, rng);
      if (mc > wc + 1e-12) bounded = false;
      worst_gap = std::max(worst_gap, mc - wc);
    }
    const double wcu = bound_unconditional(1.0, 1.0, n);
    const double mcu =
        bound_unconditional_mc(1.0, 1.0, n, 5, 1.152, 10000, rng);
    if (mcu > wcu + 1e-12) bounded = false;
    worst_gap = std::max(worst_gap, mcu - wcu);
  }

  // Scenario sampler moments: p = 5, s^2 = 2.4^2 / 5.
  const int p = 5;
  const double s2 = 2.4 * 2.4 / p;
  const int n_mc = 100000;
  const auto draws = sample_mu_n(p, s2, n_mc, rng);
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= n_mc;
  double m2 = 0.0, m4 = 0.0;
  for (double v : draws) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n_mc;
  m4 /= n_mc;
  const double want_mean = -p * s2 / 2.0;  // -2.88
  const double want_var = p * s2 * (s2 + 2.0) / 2.0;
  const double se_mean = std::sqrt(want_var / n_mc);
  const double se_var = std::sqrt(std::max(0.0, m4 - m2 * m2) / n_mc);
  const double mean_pull = std::abs(mean - want_mean) / se_mean;
  const double var_pull = std::abs(m2 - want_var) / se_var;
  const double secs = seconds_since(t0);
  const bool pass = bounded && mean_pull <= 3.0 && var_pull <= 3.0;
  return {pass, fmt("MC violation rate <= closed-form bound on all 35 grid "
                    "cells (worst gap %.1e); scenario mean %.4f vs %.2f "
                    "(%.1f SE), variance %.4f vs %.5f (%.1f SE); %.1f s",
                    worst_gap, mean, want_mean, mean_pull, m2, want_var,
                    var_pull, secs)};
}

// ---------------------------------------------------------------------------
// 7. Desk-scale end-to-end on the 6-D additive toy with noisy evaluations.

struct EndToEndRun {
  double tv = 1.0;
  long evals = 0;
  bool ok = false;
};

EndToEndRun one_toy_run(const ProblemSpec& spec,
                        const std::vector<Vec>& ground_truth,
                        StrategyKind kind, long i_mh, std::uint64_t seed,
                        long max_total_evals = -1) {
  const auto t0 = clock_type::now();
  RunConfig rc;
  rc.epsilon = 0.2;
  rc.error_kind = ErrorKind::unconditional;
  rc.i_mh = i_mh;
  rc.t_init = spec.t_init;
  rc.seed = seed;
  rc.initial_point = spec.theta0;
  rc.initial_proposal_cov =
      spec.sigma0_sd.array().square().matrix().asDiagonal();
  rc.strategy.kind = kind;
  rc.strategy.candidate_noise_sd = spec.design_candidate_noise_sd;
  rc.hyperprior.estimate_noise_sd = spec.estimate_gp_noise;
  rc.max_total_evals = max_total_evals;
  const Prior prior{spec.prior_box, {}};
  const NoisyLogLikelihood target = spec.make_target(seed);
  EndToEndRun out;
  const RunResult result = run_gp_mh(target, prior, rc);
  out.ok = result.diagnostics.termination == TerminationReason::completed;
  out.evals = static_cast<long>(result.evaluations.size());
  const auto kept = drop_prefix(result.samples, 0.25);
  if (!kept.empty()) out.tv = marginal_tv(kept, ground_truth).mean_tv;
  std::fprintf(stderr,
               "  [%s strategy=%d seed=%llu] evals=%ld tv=%.3f %.0fs\n",
               spec.name.c_str(), static_cast<int>(kind),
               static_cast<unsigned long long>(seed), out.evals, out.tv,
               seconds_since(t0));
  return out;
}

Outcome criterion7() {
  const auto t0 = clock_type::now();
  const ProblemSpec spec = make_problem("simple6d");
  const auto ground_truth =
      cli::ensure_ground_truth(spec, 200000, 99991, cache_root, false);

  std::vector<double> tv_epoe, ev_epoe, ev_naive;
  bool all_ok = true;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const EndToEndRun r =
        one_toy_run(spec, ground_truth, StrategyKind::EPoE, 10000, seed);
    all_ok = all_ok && r.ok;
    tv_epoe.push_back(r.tv);
    ev_epoe.push_back(static_cast<double>(r.evals));
  }
  // The naive arm only feeds the evaluation-count comparison, and runs with
  // a hard evaluation cap: a capped count never overstates what naive
  // placement would use, so "median(epoe) <= median(naive, capped)" implies
  // the uncapped comparison whenever it holds. The cap and the smaller arm
  // (3 seeds) keep the single-core runtime bounded — naive placement stacks
  // near-duplicate evaluations, which makes its refits far slower.
  const long naive_cap = 500;
  for (std::uint64_t seed : {1, 2, 3}) {
    const EndToEndRun r = one_toy_run(spec, ground_truth, StrategyKind::Naive,
                                      10000, seed, naive_cap);
    all_ok = all_ok && r.ok;
    ev_naive.push_back(static_cast<double>(r.evals));
  }
  const double tv_med = median(tv_epoe);
  const double ev_med = median(ev_epoe);
  const double ev_naive_med = median(ev_naive);
  const double secs = seconds_since(t0);
  const bool pass = all_ok && tv_med <= 0.25 && ev_med <= 1000.0 &&
                    ev_med <= ev_naive_med && secs < 900.0;
  return {pass, fmt("6-D toy, 5 seeds, 1e4 iterations: median TV=%.3f "
                    "(<=0.25), median evals=%.0f (<=1000; 3-seed naive "
                    "median %.0f >= it at cap %ld); %.0f s (<900)",
                    tv_med, ev_med, ev_naive_med, naive_cap, secs)};
}

// ---------------------------------------------------------------------------
// 8. End-to-end on the population model driven by simulator batches.

Outcome criterion8() {
  const auto t0 = clock_type::now();
  const ProblemSpec spec = make_problem("ricker");
  const auto ground_truth =
      cli::ensure_ground_truth(spec, 100000, 99991, cache_root, false);
  const long i_mh = paper_scale ? 100000 : 10000;
  const double gate = paper_scale ? 0.1 : 0.3;

  std::vector<double> tvs, evals;
  bool all_ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    const EndToEndRun r =
        one_toy_run(spec, ground_truth, StrategyKind::EPoE, i_mh, seed);
    all_ok = all_ok && r.ok;
    tvs.push_back(r.tv);
    evals.push_back(static_cast<double>(r.evals));
  }
  const double tv_med = median(tvs);
  const double secs = seconds_since(t0);
  const bool pass = all_ok && tv_med <= gate;
  return {pass, fmt("population model, 3 seeds, %s iterations: median "
                    "TV=%.3f (<=%.1f) vs self-computed ground truth, median "
                    "evals=%.0f; %.0f s%s",
                    paper_scale ? "1e5" : "1e4", tv_med, gate, median(evals),
                    secs,
                    paper_scale ? "" : " [long form via --paper-scale]")};
}

// ---------------------------------------------------------------------------
// 9. Spread bound on the acceptance-ratio estimate under the error budget.

Outcome criterion9() {
  const auto t0 = clock_type::now();
  Rng rng(20260825, 9);
  double worst_roundtrip = 0.0;
  int violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const double mu = rng.uniform(-4.0, 0.5);
    const double eps = rng.uniform(0.02, 0.45);
    const double sigma_eps = inverse_unconditional_error(mu, eps);
    worst_roundtrip = std::max(
        worst_roundtrip,
        std::abs(unconditional_error({mu, sigma_eps}) - eps));
    // Any pair within the error budget has a smaller log-scale spread.
    const double eps_actual = rng.uniform(0.001, eps * 0.999);
    const double sigma_actual = inverse_unconditional_error(mu, eps_actual);
    const double q3 = norm_quantile(0.75);
    const double actual_iqr = 2.0 * std::exp(mu) * std::sinh(q3 *
                                                             sigma_actual);
    const double bound = 2.0 * std::exp(mu) * std::sinh(q3 * sigma_eps);
    if (!(actual_iqr <= bound * (1.0 + 1e-12))) ++violations;
  }

  // The surrogate-backed wrapper agrees with the raw formula.
  GpHyperparams hp = default_hyperparams(1, 1.0, 1.0);
  std::vector<Evaluation> evals;
  for (double x : {-1.5, -0.5, 0.5, 1.5})
    evals.push_back({Vec::Constant(1, x), -0.5 * x * x, 0.4});
  const GpPosterior gp(hp, evals);
  Prior prior;
  prior.support.lo = Vec::Constant(1, -4.0);
  prior.support.hi = Vec::Constant(1, 4.0);
  double worst_wrapper = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Vec a = Vec::Constant(1, rng.uniform(-1.5, 1.5));
    const Vec b = Vec::Constant(1, rng.uniform(-1.5, 1.5));
    const PairStats stats =
        pair_stats(gp, a, b, [&prior](const Vec& th) { return prior.log(th); });
    const double err = unconditional_error(stats);
    const double eps = std::min(0.49, err + rng.uniform(0.01, 0.1));
    const double got = iqr_ratio_bound(gp, a, b, prior, eps);
    const double want =
        2.0 * std::exp(stats.mu_t) *
        std::sinh(norm_quantile(0.75) *
                  inverse_unconditional_error(stats.mu_t, eps));
    worst_wrapper = std::max(worst_wrapper, std::abs(got - want));
  }
  const double secs = seconds_since(t0);
  const bool pass =
      worst_roundtrip < 1e-9 && violations == 0 && worst_wrapper < 1e-12;
  return {pass, fmt("1000 instances: spread bound violated %d times (=0), "
                    "invert/apply roundtrip max err=%.2e (<1e-9), wrapper "
                    "max err=%.2e; %.1f s",
                    violations, worst_roundtrip, worst_wrapper, secs)};
}

// ---------------------------------------------------------------------------
// 10. Path mass of the inhomogeneous-Markov approximation at n = 3.

Outcome criterion10() {
  const auto t0 = clock_type::now();
  GpHyperparams hp = default_hyperparams(1, 1.0, 1.0);
  std::vector<Evaluation> evals;
  // Shallow target and loose evaluations keep every per-step acceptance
  // probability moderate, so all 8 paths carry observable mass.
  for (double x : {-1.6, -0.8, 0.0, 0.8, 1.6})
    evals.push_back({Vec::Constant(1, x), -0.05 * x * x, 0.8});
  const GpPosterior gp(hp, evals);
  const oracle::DenseGp dense(hp, evals);
  const Vec theta0 = Vec::Constant(1, 0.1);
  const int n = 3;
  const std::vector<double> u_stream = {0.35, 0.55, 0.75};
  const std::vector<Vec> r_stream = {Vec::Constant(1, 0.9),
                                     Vec::Constant(1, -1.2),
                                     Vec::Constant(1, 0.6)};

  // Exhaustive oracle: walk all 2^3 accept/reject patterns with dense-GP
  // acceptance probabilities.
  std::map<std::string, double> oracle_prob;
  double mass = 0.0;
  for (int bits = 0; bits < 8; ++bits) {
    Vec cur = theta0;
    double prob = 1.0;
    std::string key;
    for (int i = 0; i < n; ++i) {
      const Vec prop = cur + r_stream[static_cast<std::size_t>(i)];
      const double mu = dense.mean(prop) - dense.mean(cur);
      const double sd = std::sqrt(dense.pair_diff_var(cur, prop));
      const double p_acc = oracle::norm_cdf(
          (mu - std::log(u_stream[static_cast<std::size_t>(i)])) / sd);
      const bool move = (bits >> i) & 1;
      prob *= move ? p_acc : 1.0 - p_acc;
      if (move) cur = prop;
      key += move ? '1' : '0';
    }
    oracle_prob[key] = prob;
    mass += prob;
  }

  // The sampler's own reported probabilities match the oracle path for path.
  double min_path_prob = 1.0;
  for (const auto& [key, prob] : oracle_prob)
    min_path_prob = std::min(min_path_prob, prob);

  Rng rng(20260825, 10);
  std::set<std::string> seen;
  double worst_path_err = 0.0;
  for (int d = 0; d < 6000; ++d) {
    const MarkovPathResult r =
        markov_path_sampler(gp, theta0, u_stream, r_stream, n, rng);
    std::string key;
    for (int i = 0; i < n; ++i)
      key += r.path[static_cast<std::size_t>(i + 1)] !=
                     r.path[static_cast<std::size_t>(i)]
                 ? '1'
                 : '0';
    seen.insert(key);
    worst_path_err = std::max(
        worst_path_err,
        std::abs(std::exp(r.log_probability) - oracle_prob.at(key)));
  }
  const double secs = seconds_since(t0);
  const bool pass = std::abs(mass - 1.0) <= 1e-10 && seen.size() == 8 &&
                    worst_path_err < 1e-10;
  return {pass, fmt("8-path mass = 1%+.1e (tol 1e-10); %zu/8 paths realized "
                    "in 6000 draws (min path prob %.3f); sampler vs oracle "
                    "path probability max err=%.1e (<1e-10); %.1f s",
                    mass - 1.0, seen.size(), min_path_prob, worst_path_err,
                    secs)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--paper-scale") == 0) {
      paper_scale = true;
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else if (std::strcmp(argv[i], "--cache-root") == 0 && i + 1 < argc) {
      cache_root = argv[++i];
    } else {
      std::fprintf(stderr,
                   "usage: %s [--only N]... [--paper-scale] "
                   "[--cache-root DIR]\n",
                   argv[0]);
      return 64;
    }
  }
  if (const char* env = std::getenv("GPMH_ACCEPTANCE_CACHE"))
    cache_root = env;

  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"closed-form decision error vs quadrature", criterion1},
      {"lookahead closed forms vs Monte Carlo refresh", criterion2},
      {"selection criteria share the xi^2 maximizer", criterion3},
      {"surrogate predictions vs dense conditioning", criterion4},
      {"zero-noise surrogate reduces to classical MH", criterion5},
      {"error-rate bounds and scenario sampler", criterion6},
      {"6-D toy end-to-end at desk scale", criterion7},
      {"population-model end-to-end", criterion8},
      {"acceptance-ratio spread bound", criterion9},
      {"Markov path mass enumeration", criterion10},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int idx = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(idx)) continue;
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d [%s]: %s — %s\n", idx, criteria[k].first,
                out.pass ? "PASS" : "FAIL", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures;
}
