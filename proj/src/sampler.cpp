#include "gpmh/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

namespace gpmh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Mat chol_lower_spd(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("proposal covariance is not positive definite");
  return llt.matrixL();
}

Vec draw_normals(Rng& rng, int p) {
  Vec z(p);
  for (int i = 0; i < p; ++i) z[i] = rng.normal();
  return z;
}

bool same_point(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

void validate_config(const RunConfig& config, int p) {
  if (!(config.epsilon > 0.0))
    throw std::invalid_argument("epsilon must be positive");
  if (config.t_init < 1 && config.init_evaluations.empty())
    throw std::invalid_argument("t_init must be >= 1");
  if (config.i_mh < 0) throw std::invalid_argument("i_mh must be >= 0");
  if (config.max_evals_per_iteration < 1)
    throw std::invalid_argument("max_evals_per_iteration must be >= 1");
  if (config.initial_point.size() != p)
    throw std::invalid_argument("initial point dimension mismatch");
  if (config.initial_proposal_cov.rows() != p ||
      config.initial_proposal_cov.cols() != p)
    throw std::invalid_argument("initial proposal covariance must be p x p");
  for (std::size_t k = 1; k < config.snapshot_schedule.size(); ++k)
    if (config.snapshot_schedule[k] <= config.snapshot_schedule[k - 1])
      throw std::invalid_argument(
          "snapshot schedule must be strictly increasing");
}

// Owns the evaluation set, current hyperparameters, and the refit schedule:
// refit after every evaluation while t <= 300, then after every 10th.
struct GpRuntime {
  std::vector<Evaluation> data;
  GpHyperparams hp;
  bool fixed = false;
  HyperpriorSpec hspec;
  std::optional<GpPosterior> gp;
  long refits = 0;

  void rebuild() { gp.emplace(hp, data); }

  void add(const Evaluation& e) {
    data.push_back(e);
    const int t = static_cast<int>(data.size());
    if (!fixed && (t <= 300 || t % 10 == 0)) {
      GpPosterior fitted = fit_map(data, hspec, hp, /*warm_start_only=*/true);
      hp = fitted.hyperparams();
      gp = std::move(fitted);
      ++refits;
    } else {
      rebuild();
    }
  }
};

std::vector<Evaluation> draw_initial_design(const NoisyLogLikelihood& target,
                                            const RunConfig& config,
                                            const ValidityPolicy& policy,
                                            Rng& init_rng, Diagnostics* diag) {
  if (!config.init_evaluations.empty()) return config.init_evaluations;
  const int p = static_cast<int>(config.initial_point.size());
  const Mat chol0 = chol_lower_spd(config.initial_proposal_cov);
  std::vector<Evaluation> out;
  out.reserve(static_cast<std::size_t>(config.t_init));
  const long max_attempts =
      static_cast<long>(policy.init_try_multiplier) * config.t_init;
  long attempts = 0;
  while (static_cast<int>(out.size()) < config.t_init &&
         attempts < max_attempts) {
    ++attempts;
    const Vec theta = config.initial_point + chol0 * draw_normals(init_rng, p);
    const EvalResult ev = target.evaluate(theta);
    if (policy.is_valid(ev)) out.push_back({theta, ev.y, ev.noise_sd});
  }
  diag->init_attempts = attempts;
  if (static_cast<int>(out.size()) < config.t_init)
    throw std::runtime_error(
        "initialization failed: only " + std::to_string(out.size()) +
        " valid evaluations in " + std::to_string(attempts) +
        " attempts (need " + std::to_string(config.t_init) + ")");
  return out;
}

GpHyperparams initial_guess(const std::vector<Evaluation>& data,
                            const HyperpriorSpec& hspec) {
  const int p = static_cast<int>(data[0].theta.size());
  const int t = static_cast<int>(data.size());
  double ymean = 0.0;
  for (const auto& e : data) ymean += e.y;
  ymean /= t;
  double yvar = 0.0;
  for (const auto& e : data) yvar += (e.y - ymean) * (e.y - ymean);
  yvar = t > 1 ? yvar / (t - 1) : 1.0;
  const double ysd = std::clamp(std::sqrt(yvar), hspec.signal_sd_lo,
                                hspec.signal_sd_hi);
  Vec lo = data[0].theta;
  Vec hi = data[0].theta;
  for (const auto& e : data) {
    lo = lo.cwiseMin(e.theta);
    hi = hi.cwiseMax(e.theta);
  }
  GpHyperparams hp = default_hyperparams(p, ysd, 1.0);
  for (int i = 0; i < p; ++i)
    hp.lengthscales[i] = std::max(hi[i] - lo[i], 1e-3) / 3.0;
  if (hspec.estimate_noise_sd) {
    double nsd = 0.0;
    for (const auto& e : data) nsd += e.noise_sd;
    nsd /= t;
    if (!(nsd > 0.0)) nsd = 1.0;
    hp.noise_sd_global = std::clamp(nsd, hspec.noise_sd_lo, hspec.noise_sd_hi);
  }
  return hp;
}

void initialize_gp(GpRuntime* rt, const RunConfig& config) {
  rt->hspec = config.hyperprior;
  rt->hspec.seed = mix_seed(config.seed, stream::kFit);
  if (config.fixed_hyperparams) {
    rt->fixed = true;
    rt->hp = *config.fixed_hyperparams;
    rt->rebuild();
  } else {
    rt->hp = initial_guess(rt->data, rt->hspec);
    GpPosterior fitted =
        fit_map(rt->data, rt->hspec, rt->hp, /*warm_start_only=*/false);
    rt->hp = fitted.hyperparams();
    rt->gp = std::move(fitted);
    rt->refits = 1;
  }
}

ChainState make_chain_state(const RunConfig& config) {
  ChainState state;
  state.current = config.initial_point;
  state.initial_proposal_cov = config.initial_proposal_cov;
  state.n_adapt_start = config.n_adapt_start;
  state.adapt_jitter = config.adapt_jitter;
  refresh_proposal(state);
  return state;
}

}  // namespace

void refresh_proposal(ChainState& state) {
  const int p = static_cast<int>(state.current.size());
  if (state.iteration >= state.n_adapt_start && state.adaptation.n >= 2) {
    const double sd2 = 2.4 * 2.4 / p;
    const Mat cov = state.adaptation.scatter /
                    static_cast<double>(state.adaptation.n - 1);
    state.proposal_cov =
        sd2 * (cov + state.adapt_jitter * Mat::Identity(p, p));
  } else {
    state.proposal_cov = state.initial_proposal_cov;
  }
  state.proposal_chol = chol_lower_spd(state.proposal_cov);
}

const Mat& adapt_proposal(ChainState& state, const Vec& new_sample) {
  auto& a = state.adaptation;
  const int p = static_cast<int>(new_sample.size());
  if (a.n == 0) {
    a.mean = Vec::Zero(p);
    a.scatter = Mat::Zero(p, p);
  }
  a.n += 1;
  const Vec delta = new_sample - a.mean;
  a.mean += delta / static_cast<double>(a.n);
  a.scatter += delta * (new_sample - a.mean).transpose();
  refresh_proposal(state);
  return state.proposal_cov;
}

NoisyLogLikelihood deterministic_loglik(
    int dim, const Box& support,
    std::function<double(const Vec&)> logdensity) {
  NoisyLogLikelihood target;
  target.dim = dim;
  target.support = support;
  target.evaluate = [f = std::move(logdensity)](const Vec& theta) {
    EvalResult r;
    r.y = f(theta);
    r.noise_sd = 0.0;
    r.valid = std::isfinite(r.y);
    return r;
  };
  return target;
}

RunResult run_gp_mh(const NoisyLogLikelihood& target, const Prior& prior,
                    const RunConfig& config, const ValidityPolicy& policy) {
  const int p = static_cast<int>(config.initial_point.size());
  validate_config(config, p);
  if (prior.log(config.initial_point) == kNegInf)
    throw std::invalid_argument("initial point has zero prior mass");

  RunResult result;
  Diagnostics& diag = result.diagnostics;
  Rng init_rng(config.seed, stream::kInit);
  Rng chain_rng(config.seed, stream::kChain);
  Rng design_rng(config.seed, stream::kDesign);

  GpRuntime rt;
  rt.data = draw_initial_design(target, config, policy, init_rng, &diag);
  initialize_gp(&rt, config);
  result.t_init_used = static_cast<int>(rt.data.size());

  ChainState state = make_chain_state(config);
  const auto log_prior_fn = [&prior](const Vec& th) { return prior.log(th); };
  const long eval_cap = config.max_total_evals < 0
                            ? std::numeric_limits<long>::max()
                            : config.max_total_evals;
  result.samples.reserve(static_cast<std::size_t>(config.i_mh));
  result.eval_count_by_iteration.reserve(
      static_cast<std::size_t>(config.i_mh));
  std::size_t snap_idx = 0;
  bool terminated_early = false;

  for (long i = 1; i <= config.i_mh; ++i) {
    refresh_proposal(state);
    const Vec r = state.proposal_chol * draw_normals(chain_rng, p);
    const double u = chain_rng.uniform01();
    const Vec proposal = state.current + r;
    const double proposal_log_prior = prior.log(proposal);
    int iter_evals = 0;
    bool accepted = false;

    if (proposal_log_prior != kNegInf) {
      while (true) {
        const PairStats stats =
            pair_stats(*rt.gp, state.current, proposal, log_prior_fn);
        const DecideResult res = decide(stats, u, config.epsilon,
                                        config.error_kind);
        if (std::holds_alternative<Decision>(res)) {
          accepted = std::get<Decision>(res).accepted;
          break;
        }
        if (iter_evals >= config.max_evals_per_iteration ||
            state.eval_count >= eval_cap) {
          // Decision forced at the ratio's posterior median.
          accepted = stats.mu_t >= std::log(u);
          ++diag.forced_decisions;
          break;
        }
        DesignStrategy strat = config.strategy;
        if (rt.hp.noise_sd_global)
          strat.candidate_noise_sd = *rt.hp.noise_sd_global;
        Vec chosen = select_evaluation(*rt.gp, state.current, proposal, strat,
                                       prior.support, design_rng);
        EvalResult ev = target.evaluate(chosen);
        ++iter_evals;
        ++state.eval_count;
        if (!policy.is_valid(ev)) {
          ++diag.invalid_evals;
          if (same_point(chosen, proposal)) {
            ++diag.invalid_proposals;
            accepted = false;  // rejection without a surrogate update
            break;
          }
          if (same_point(chosen, state.current)) {
            terminated_early = true;
            break;
          }
          // Interior candidate: discard and retry once with the naive rule.
          ++diag.invalid_design_points;
          DesignStrategy naive = strat;
          naive.kind = StrategyKind::Naive;
          chosen = select_evaluation(*rt.gp, state.current, proposal, naive,
                                     prior.support, design_rng);
          ev = target.evaluate(chosen);
          ++iter_evals;
          ++state.eval_count;
          if (!policy.is_valid(ev)) {
            ++diag.invalid_evals;
            if (same_point(chosen, proposal)) {
              ++diag.invalid_proposals;
              accepted = false;
              break;
            }
            terminated_early = true;
            break;
          }
        }
        rt.add({chosen, ev.y, ev.noise_sd});
      }
    }
    if (terminated_early) {
      diag.termination = TerminationReason::invalid_current_point;
      diag.message = "evaluation at the current chain point was invalid at "
                     "iteration " +
                     std::to_string(i);
      break;
    }
    if (accepted) {
      state.current = proposal;
      adapt_proposal(state, state.current);
    }
    state.iteration = i;
    state.per_iteration_eval_counts.push_back(iter_evals);
    result.samples.push_back(state.current);
    result.eval_count_by_iteration.push_back(
        static_cast<long>(rt.data.size()));
    if (snap_idx < config.snapshot_schedule.size() &&
        i == config.snapshot_schedule[snap_idx]) {
      result.snapshots.push_back(
          {i, static_cast<long>(rt.data.size()), *rt.gp});
      ++snap_idx;
    }
  }

  diag.refits = rt.refits;
  result.per_iteration_eval_counts = state.per_iteration_eval_counts;
  result.evaluations = std::move(rt.data);
  result.gp = std::move(rt.gp);
  return result;
}

RunResult run_mh_blfi(const NoisyLogLikelihood& target, const Prior& prior,
                      const RunConfig& config, const ValidityPolicy& policy) {
  const int p = static_cast<int>(config.initial_point.size());
  validate_config(config, p);
  if (prior.log(config.initial_point) == kNegInf)
    throw std::invalid_argument("initial point has zero prior mass");
  if (config.s_mcmc < 0)
    throw std::invalid_argument("s_mcmc must be >= 0");

  RunResult result;
  Diagnostics& diag = result.diagnostics;
  Rng init_rng(config.seed, stream::kInit);
  Rng chain_rng(config.seed, stream::kChain);
  Rng design_rng(config.seed, stream::kDesign);

  GpRuntime rt;
  rt.data = draw_initial_design(target, config, policy, init_rng, &diag);
  initialize_gp(&rt, config);
  result.t_init_used = static_cast<int>(rt.data.size());
  if (config.t_max < result.t_init_used)
    throw std::invalid_argument("t_max must be >= the initial design size");

  ChainState state = make_chain_state(config);
  const auto log_prior_fn = [&prior](const Vec& th) { return prior.log(th); };
  std::size_t snap_idx = 0;
  const long invalid_guard =
      2 * std::max(0L, config.t_max - result.t_init_used) + 10;

  while (static_cast<long>(rt.data.size()) < config.t_max) {
    // Emulate the chain until a transition's decision error exceeds epsilon.
    bool found = false;
    Vec proposal;
    double u = 0.0;
    long attempts = 0;
    while (attempts < config.transition_search_cap) {
      ++attempts;
      ++diag.emulated_transitions;
      refresh_proposal(state);
      const Vec r = state.proposal_chol * draw_normals(chain_rng, p);
      u = chain_rng.uniform01();
      proposal = state.current + r;
      state.iteration += 1;
      if (prior.log(proposal) == kNegInf) continue;  // certain rejection
      const PairStats stats =
          pair_stats(*rt.gp, state.current, proposal, log_prior_fn);
      const DecideResult res =
          decide(stats, u, config.epsilon, config.error_kind);
      if (std::holds_alternative<NeedsEvaluation>(res)) {
        found = true;
        break;
      }
      if (std::get<Decision>(res).accepted) {
        state.current = proposal;
        adapt_proposal(state, state.current);
      }
    }
    if (!found) {
      diag.termination = TerminationReason::recursion_cap;
      diag.message = "transition search exhausted " +
                     std::to_string(config.transition_search_cap) +
                     " attempts without an uncertain transition";
      break;
    }

    DesignStrategy strat = config.strategy;
    if (rt.hp.noise_sd_global)
      strat.candidate_noise_sd = *rt.hp.noise_sd_global;
    Vec chosen = select_evaluation(*rt.gp, state.current, proposal, strat,
                                   prior.support, design_rng);
    EvalResult ev = target.evaluate(chosen);
    ++state.eval_count;
    bool added = false;
    if (!policy.is_valid(ev)) {
      ++diag.invalid_evals;
      if (same_point(chosen, state.current)) {
        diag.termination = TerminationReason::invalid_current_point;
        diag.message = "evaluation at the current chain point was invalid";
        break;
      }
      if (same_point(chosen, proposal)) {
        ++diag.invalid_proposals;
      } else {
        ++diag.invalid_design_points;
        DesignStrategy naive = strat;
        naive.kind = StrategyKind::Naive;
        chosen = select_evaluation(*rt.gp, state.current, proposal, naive,
                                   prior.support, design_rng);
        ev = target.evaluate(chosen);
        ++state.eval_count;
        if (!policy.is_valid(ev)) {
          ++diag.invalid_evals;
          if (same_point(chosen, state.current)) {
            diag.termination = TerminationReason::invalid_current_point;
            diag.message = "evaluation at the current chain point was invalid";
            break;
          }
          if (same_point(chosen, proposal)) ++diag.invalid_proposals;
        } else {
          rt.add({chosen, ev.y, ev.noise_sd});
          added = true;
        }
      }
    } else {
      rt.add({chosen, ev.y, ev.noise_sd});
      added = true;
    }
    if (added && snap_idx < config.snapshot_schedule.size() &&
        static_cast<long>(rt.data.size()) ==
            config.snapshot_schedule[snap_idx]) {
      result.snapshots.push_back({diag.emulated_transitions,
                                  static_cast<long>(rt.data.size()), *rt.gp});
      ++snap_idx;
    }
    if (diag.invalid_evals > invalid_guard) {
      diag.message = "too many invalid evaluations; stopping acquisition";
      break;
    }
  }

  diag.refits = rt.refits;
  result.evaluations = rt.data;
  result.gp = rt.gp;

  // Sample the surrogate posterior (mode estimator) with the reference
  // sampler, unless the run ended on an invalid current point.
  if (diag.termination != TerminationReason::invalid_current_point &&
      config.s_mcmc > 0) {
    auto surrogate = std::make_shared<GpPosterior>(*rt.gp);
    const NoisyLogLikelihood mode_target = deterministic_loglik(
        p, prior.support, [surrogate](const Vec& th) {
          return surrogate->mean(th) - surrogate->var(th);
        });
    result.samples = run_reference_mh(
        mode_target, prior, config.initial_point, config.initial_proposal_cov,
        config.s_mcmc, mix_seed(config.seed, stream::kSurrogateChain),
        /*adapt=*/true, config.n_adapt_start, policy);
  }
  return result;
}

std::vector<Vec> run_reference_mh(const NoisyLogLikelihood& target,
                                  const Prior& prior, const Vec& theta0,
                                  const Mat& initial_proposal_cov, long n,
                                  std::uint64_t seed, bool adapt,
                                  int n_adapt_start,
                                  const ValidityPolicy& policy) {
  const int p = static_cast<int>(theta0.size());
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  double cur_lp = prior.log(theta0);
  if (cur_lp == kNegInf)
    throw std::invalid_argument("initial point has zero prior mass");
  const EvalResult ev0 = target.evaluate(theta0);
  if (!policy.is_valid(ev0))
    throw std::runtime_error("invalid evaluation at the initial point");
  double cur_y = ev0.y;

  ChainState state;
  state.current = theta0;
  state.initial_proposal_cov = initial_proposal_cov;
  state.n_adapt_start =
      adapt ? n_adapt_start : std::numeric_limits<int>::max();
  refresh_proposal(state);

  Rng chain_rng(seed, stream::kChain);
  std::vector<Vec> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (long i = 1; i <= n; ++i) {
    refresh_proposal(state);
    const Vec r = state.proposal_chol * draw_normals(chain_rng, p);
    const double u = chain_rng.uniform01();
    const Vec proposal = state.current + r;
    const double proposal_lp = prior.log(proposal);
    bool accepted = false;
    EvalResult ev;
    if (proposal_lp != kNegInf) {
      ev = target.evaluate(proposal);
      if (policy.is_valid(ev)) {
        const double log_gamma = proposal_lp + ev.y - cur_lp - cur_y;
        accepted = log_gamma >= std::log(u);
      }
    }
    if (accepted) {
      state.current = proposal;
      cur_lp = proposal_lp;
      cur_y = ev.y;  // pseudo-marginal: this realisation is kept until
                     // the next acceptance
      if (adapt) adapt_proposal(state, state.current);
    }
    state.iteration = i;
    samples.push_back(state.current);
  }
  return samples;
}

MarkovPathResult markov_path_sampler(
    const GpPosterior& gp, const Vec& theta0,
    const std::vector<double>& u_stream, const std::vector<Vec>& r_stream,
    int n, Rng& rng, const std::function<double(const Vec&)>& log_prior) {
  if (static_cast<int>(u_stream.size()) < n ||
      static_cast<int>(r_stream.size()) < n)
    throw std::invalid_argument("u/r streams shorter than the path length");
  const std::function<double(const Vec&)> lp =
      log_prior ? log_prior : [](const Vec&) { return 0.0; };
  MarkovPathResult out;
  out.path.reserve(static_cast<std::size_t>(n) + 1);
  out.path.push_back(theta0);
  Vec current = theta0;
  for (int i = 0; i < n; ++i) {
    const Vec proposal = current + r_stream[static_cast<std::size_t>(i)];
    const double lu = std::log(u_stream[static_cast<std::size_t>(i)]);
    double accept_prob;
    if (lp(proposal) == kNegInf) {
      accept_prob = 0.0;
    } else {
      const PairStats stats = pair_stats(gp, current, proposal, lp);
      accept_prob = stats.sigma_t <= kSigmaFloor
                        ? (stats.mu_t >= lu ? 1.0 : 0.0)
                        : norm_cdf((stats.mu_t - lu) / stats.sigma_t);
    }
    const bool move = rng.uniform01() < accept_prob;
    out.log_probability += std::log(move ? accept_prob : 1.0 - accept_prob);
    if (move) current = proposal;
    out.path.push_back(current);
  }
  return out;
}

}  // namespace gpmh
