#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "gpmh/estimators.hpp"
#include "gpmh/io.hpp"

namespace gpmh::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kToySamplerStream = 0x600d;
constexpr std::uint64_t kSnapshotChainStream = 0xb1f1;

// ---- config parsing -------------------------------------------------------

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "problem",        "high_noise",
      "method",         "strategy",
      "epsilon",        "error_kind",
      "iterations",     "t_init",
      "t_max",          "s_mcmc",
      "snapshot_s_mcmc", "seeds",
      "output_dir",     "snapshot_schedule",
      "max_evals_per_iteration", "max_total_evals",
      "burn_in_fraction", "ground_truth_budget",
      "ground_truth_seed", "data_dir"};
  return keys;
}

}  // namespace

std::string config_schema_note() {
  return
      "config schema (JSON object):\n"
      "  problem: string, one of simple6d | banana6d | multimodal6d | ricker"
      " | theta_ricker (required)\n"
      "  high_noise: bool, doubles the toy evaluation noise (default false)\n"
      "  method: gp_mh | mh_blfi | reference_mcmc (default gp_mh)\n"
      "  strategy: epoe | epoer | naive (default epoe)\n"
      "  epsilon: number in (0, 0.5] (default 0.2)\n"
      "  error_kind: unconditional | conditional (default unconditional)\n"
      "  iterations: chain length; -1 uses the preset default\n"
      "  t_init: initial design size; -1 uses the preset default\n"
      "  t_max: evaluation budget for mh_blfi; -1 means t_init + 200\n"
      "  s_mcmc / snapshot_s_mcmc: surrogate-chain lengths for mh_blfi\n"
      "  seeds: non-empty array of unsigned integers (default [1])\n"
      "  output_dir: run directory relative to the output root (required)\n"
      "  snapshot_schedule: strictly increasing iteration numbers (gp_mh,\n"
      "    reference_mcmc) or evaluation counts (mh_blfi); empty = 10 even\n"
      "    points\n"
      "  max_evals_per_iteration (default 1000), max_total_evals (-1 = no\n"
      "    cap), burn_in_fraction (default 0.25)\n"
      "  ground_truth_budget: samples/iterations for the cached ground\n"
      "    truth; -1 = 200000 exact draws (toys) or 100000 MCMC iterations\n"
      "  ground_truth_seed (default 99991), data_dir (fixture override)\n";
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config is not valid JSON: ") +
                             e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
  for (const auto& item : j.items())
    if (!known_keys().count(item.key()))
      throw std::runtime_error("unknown config key: \"" + item.key() + "\"");

  ExperimentConfig c;
  auto require = [&](const char* key) {
    if (!j.contains(key))
      throw std::runtime_error(std::string("missing config key: \"") + key +
                               "\"");
  };
  require("problem");
  require("output_dir");
  c.problem = j.at("problem").get<std::string>();
  c.output_dir = j.at("output_dir").get<std::string>();
  if (c.output_dir.empty())
    throw std::runtime_error("output_dir must be non-empty");
  if (j.contains("high_noise")) c.high_noise = j.at("high_noise").get<bool>();
  if (j.contains("method")) c.method = j.at("method").get<std::string>();
  if (c.method != "gp_mh" && c.method != "mh_blfi" &&
      c.method != "reference_mcmc")
    throw std::runtime_error("method must be gp_mh, mh_blfi or "
                             "reference_mcmc");
  if (j.contains("strategy")) c.strategy = j.at("strategy").get<std::string>();
  if (c.strategy != "epoe" && c.strategy != "epoer" && c.strategy != "naive")
    throw std::runtime_error("strategy must be epoe, epoer or naive");
  if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
  if (!(c.epsilon > 0.0))
    throw std::runtime_error("epsilon must be positive");
  if (j.contains("error_kind"))
    c.error_kind = j.at("error_kind").get<std::string>();
  if (c.error_kind != "unconditional" && c.error_kind != "conditional")
    throw std::runtime_error("error_kind must be unconditional or "
                             "conditional");
  if (j.contains("iterations")) c.iterations = j.at("iterations").get<long>();
  if (j.contains("t_init")) c.t_init = j.at("t_init").get<int>();
  if (j.contains("t_max")) c.t_max = j.at("t_max").get<long>();
  if (j.contains("s_mcmc")) c.s_mcmc = j.at("s_mcmc").get<long>();
  if (j.contains("snapshot_s_mcmc"))
    c.snapshot_s_mcmc = j.at("snapshot_s_mcmc").get<long>();
  if (j.contains("seeds")) {
    c.seeds.clear();
    for (const auto& s : j.at("seeds"))
      c.seeds.push_back(s.get<std::uint64_t>());
  }
  if (c.seeds.empty()) throw std::runtime_error("seeds must be non-empty");
  if (j.contains("snapshot_schedule")) {
    for (const auto& s : j.at("snapshot_schedule"))
      c.snapshot_schedule.push_back(s.get<long>());
    for (std::size_t k = 1; k < c.snapshot_schedule.size(); ++k)
      if (c.snapshot_schedule[k] <= c.snapshot_schedule[k - 1])
        throw std::runtime_error(
            "snapshot_schedule must be strictly increasing");
  }
  if (j.contains("max_evals_per_iteration"))
    c.max_evals_per_iteration = j.at("max_evals_per_iteration").get<int>();
  if (c.max_evals_per_iteration < 1)
    throw std::runtime_error("max_evals_per_iteration must be >= 1");
  if (j.contains("max_total_evals"))
    c.max_total_evals = j.at("max_total_evals").get<long>();
  if (j.contains("burn_in_fraction"))
    c.burn_in_fraction = j.at("burn_in_fraction").get<double>();
  if (!(c.burn_in_fraction >= 0.0 && c.burn_in_fraction < 1.0))
    throw std::runtime_error("burn_in_fraction must be in [0, 1)");
  if (j.contains("ground_truth_budget"))
    c.ground_truth_budget = j.at("ground_truth_budget").get<long>();
  if (j.contains("ground_truth_seed"))
    c.ground_truth_seed = j.at("ground_truth_seed").get<std::uint64_t>();
  if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
  return c;
}

namespace {

// ---- exact toy ground-truth samplers --------------------------------------

// One 2D block draw for the given density; rejection keeps the draw exact on
// the truncated support.
Eigen::Vector2d draw_toy_block(ToyName name, Rng& rng) {
  const double rho = name == ToyName::Simple      ? 0.25
                     : name == ToyName::Banana    ? 0.9
                                                  : 0.5;
  const double w = std::sqrt(1.0 - rho * rho);
  while (true) {
    if (name == ToyName::Multimodal) {
      const double th1 = rng.uniform(-6.0, 6.0);
      const double th2 = rng.uniform(-6.0, 6.0);
      if (rng.uniform01() < std::exp(toy_logdensity_2d(name, th1, th2)))
        return {th1, th2};
      continue;
    }
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double v1 = z1;
    const double v2 = rho * z1 + w * z2;
    if (name == ToyName::Simple) {
      if (std::abs(v1) <= 16.0 && std::abs(v2) <= 16.0) return {v1, v2};
      continue;
    }
    // Banana: invert the bracket substitution.
    const double th1 = v1;
    const double th2 = v2 - th1 * th1 - 1.0;
    if (th1 >= -6.0 && th1 <= 6.0 && th2 >= -20.0 && th2 <= 2.0)
      return {th1, th2};
  }
}

std::vector<Vec> sample_toy_exact(ToyName name, long n, std::uint64_t seed) {
  Rng rng(seed, kToySamplerStream);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    Vec theta(6);
    for (int b = 0; b < 3; ++b)
      theta.segment<2>(2 * b) = draw_toy_block(name, rng);
    out.push_back(std::move(theta));
  }
  return out;
}

// ---- small helpers --------------------------------------------------------

Mat diag_squared(const Vec& sd) {
  Mat m = Mat::Zero(sd.size(), sd.size());
  for (int i = 0; i < sd.size(); ++i) m(i, i) = sd[i] * sd[i];
  return m;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

std::vector<Vec> read_samples_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  std::vector<Vec> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Vec v(static_cast<int>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i)
      v[static_cast<int>(i)] = row[i];
    out.push_back(std::move(v));
  }
  return out;
}

void write_samples_csv(const std::string& path, const std::vector<Vec>& xs,
                       const std::vector<std::string>& comments = {}) {
  if (xs.empty()) throw std::runtime_error("no samples to write: " + path);
  const int p = static_cast<int>(xs.front().size());
  std::vector<std::string> header;
  for (int d = 0; d < p; ++d) header.push_back("theta_" + std::to_string(d));
  CsvWriter w(path, header, comments);
  std::vector<double> row(static_cast<std::size_t>(p));
  for (const auto& x : xs) {
    for (int d = 0; d < p; ++d) row[static_cast<std::size_t>(d)] = x[d];
    w.row(row);
  }
  w.close();
}

std::vector<Vec> drop_burn_in(const std::vector<Vec>& xs, double fraction) {
  const auto burn = static_cast<std::size_t>(
      std::floor(static_cast<double>(xs.size()) * fraction));
  return {xs.begin() + static_cast<std::ptrdiff_t>(burn), xs.end()};
}

std::string termination_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::completed: return "completed";
    case TerminationReason::invalid_current_point:
      return "invalid_current_point";
    case TerminationReason::recursion_cap: return "recursion_cap";
  }
  return "unknown";
}

json preset_echo(const ProblemSpec& spec) {
  json p;
  p["name"] = spec.name;
  p["dim"] = spec.dim;
  p["prior_lo"] = std::vector<double>(spec.prior_box.lo.begin(),
                                      spec.prior_box.lo.end());
  p["prior_hi"] = std::vector<double>(spec.prior_box.hi.begin(),
                                      spec.prior_box.hi.end());
  p["theta0"] = std::vector<double>(spec.theta0.begin(), spec.theta0.end());
  p["sigma0_sd"] =
      std::vector<double>(spec.sigma0_sd.begin(), spec.sigma0_sd.end());
  p["t_init"] = spec.t_init;
  p["default_iterations"] = spec.default_iterations;
  p["is_sl"] = spec.is_sl;
  p["estimate_gp_noise"] = spec.estimate_gp_noise;
  if (!spec.is_sl) p["known_noise_sd"] = spec.known_noise_sd;
  if (spec.theta_true.size() > 0)
    p["theta_true"] =
        std::vector<double>(spec.theta_true.begin(), spec.theta_true.end());
  if (spec.is_sl) {
    p["n_reps"] = spec.sl.n_reps;
    p["n_bootstrap"] = spec.sl.n_bootstrap;
    p["series_length"] = static_cast<long>(spec.observed_series.size());
    p["fixture_path"] = spec.fixture_path;
    p["fixture_hash"] = spec.fixture_hash;
  }
  return p;
}

json config_echo(const ExperimentConfig& c, const ProblemSpec& spec,
                 const RunConfig& rc, std::uint64_t seed) {
  json j;
  j["problem"] = c.problem;
  j["high_noise"] = c.high_noise;
  j["method"] = c.method;
  j["strategy"] = c.strategy;
  j["epsilon"] = c.epsilon;
  j["error_kind"] = c.error_kind;
  j["iterations"] = rc.i_mh;
  j["t_init"] = rc.t_init;
  if (c.method == "mh_blfi") {
    j["t_max"] = rc.t_max;
    j["s_mcmc"] = rc.s_mcmc;
    j["snapshot_s_mcmc"] = c.snapshot_s_mcmc;
  }
  j["seed"] = seed;
  j["snapshot_schedule"] = rc.snapshot_schedule;
  j["max_evals_per_iteration"] = rc.max_evals_per_iteration;
  j["max_total_evals"] = c.max_total_evals;
  j["burn_in_fraction"] = rc.burn_in_fraction;
  j["ground_truth_budget"] = c.ground_truth_budget;
  j["ground_truth_seed"] = c.ground_truth_seed;
  j["preset"] = preset_echo(spec);
  return j;
}

StrategyKind strategy_from_string(const std::string& s) {
  if (s == "epoe") return StrategyKind::EPoE;
  if (s == "epoer") return StrategyKind::EPoEr;
  return StrategyKind::Naive;
}

RunConfig build_run_config(const ProblemSpec& spec,
                           const ExperimentConfig& c, std::uint64_t seed) {
  RunConfig rc;
  rc.epsilon = c.epsilon;
  rc.i_mh = c.iterations > 0 ? c.iterations : spec.default_iterations;
  rc.t_init = c.t_init > 0 ? c.t_init : spec.t_init;
  rc.strategy.kind = strategy_from_string(c.strategy);
  rc.strategy.candidate_noise_sd = spec.design_candidate_noise_sd;
  rc.error_kind = c.error_kind == "conditional" ? ErrorKind::conditional
                                                : ErrorKind::unconditional;
  rc.initial_point = spec.theta0;
  rc.initial_proposal_cov = diag_squared(spec.sigma0_sd);
  rc.hyperprior.estimate_noise_sd = spec.estimate_gp_noise;
  rc.max_evals_per_iteration = c.max_evals_per_iteration;
  rc.max_total_evals = c.max_total_evals;
  rc.burn_in_fraction = c.burn_in_fraction;
  rc.t_max = c.t_max > 0 ? c.t_max : rc.t_init + 200;
  rc.s_mcmc = c.s_mcmc;
  rc.seed = seed;
  if (!c.snapshot_schedule.empty()) {
    rc.snapshot_schedule = c.snapshot_schedule;
  } else if (c.method == "mh_blfi") {
    for (int k = 1; k <= 10; ++k) {
      const long point = rc.t_init + (rc.t_max - rc.t_init) * k / 10;
      if (point > rc.t_init &&
          (rc.snapshot_schedule.empty() ||
           point > rc.snapshot_schedule.back()))
        rc.snapshot_schedule.push_back(point);
    }
  } else {
    for (int k = 1; k <= 10; ++k) {
      const long point = rc.i_mh * k / 10;
      if (point > 0 && (rc.snapshot_schedule.empty() ||
                        point > rc.snapshot_schedule.back()))
        rc.snapshot_schedule.push_back(point);
    }
  }
  return rc;
}

struct MetricRow {
  long snapshot = 0;
  long iteration = 0;
  long eval_count = 0;
  double tv_mean = 0.0;
  std::vector<double> tv_dims;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::string status = "ok";
  std::string message;
  std::string termination = "completed";
  long n_samples = 0;
  long total_evals = 0;
  double final_tv = std::numeric_limits<double>::quiet_NaN();
  long forced_decisions = 0;
  long invalid_evals = 0;
  long refits = 0;
  std::vector<MetricRow> rows;
};

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricRow>& rows, int p) {
  std::vector<std::string> header = {"snapshot", "iteration", "eval_count",
                                     "tv_mean"};
  for (int d = 0; d < p; ++d) header.push_back("tv_" + std::to_string(d));
  CsvWriter w(path, header);
  for (const auto& r : rows) {
    std::vector<double> cells = {static_cast<double>(r.snapshot),
                                 static_cast<double>(r.iteration),
                                 static_cast<double>(r.eval_count), r.tv_mean};
    for (double v : r.tv_dims) cells.push_back(v);
    w.row(cells);
  }
  w.close();
}

void write_evaluations_csv(const std::string& path,
                           const std::vector<Evaluation>& evals, int p) {
  std::vector<std::string> header = {"index"};
  for (int d = 0; d < p; ++d) header.push_back("theta_" + std::to_string(d));
  header.push_back("y");
  header.push_back("noise_sd");
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < evals.size(); ++i) {
    std::vector<double> cells = {static_cast<double>(i)};
    for (int d = 0; d < p; ++d) cells.push_back(evals[i].theta[d]);
    cells.push_back(evals[i].y);
    cells.push_back(evals[i].noise_sd);
    w.row(cells);
  }
  w.close();
}

json diagnostics_json(const SeedOutcome& outcome, const RunResult* result,
                      double wall_seconds) {
  json d;
  d["seed"] = outcome.seed;
  d["status"] = outcome.status;
  d["message"] = outcome.message;
  d["termination"] = outcome.termination;
  d["n_samples"] = outcome.n_samples;
  d["total_evaluations"] = outcome.total_evals;
  d["wall_seconds"] = wall_seconds;
  if (result != nullptr) {
    const Diagnostics& g = result->diagnostics;
    d["t_init_used"] = result->t_init_used;
    d["forced_decisions"] = g.forced_decisions;
    d["invalid_evals"] = g.invalid_evals;
    d["invalid_proposals"] = g.invalid_proposals;
    d["invalid_design_points"] = g.invalid_design_points;
    d["refits"] = g.refits;
    d["init_attempts"] = g.init_attempts;
    d["emulated_transitions"] = g.emulated_transitions;
    if (result->gp) {
      const GpHyperparams& hp = result->gp->hyperparams();
      json h;
      h["signal_sd"] = hp.signal_sd;
      h["lengthscales"] = std::vector<double>(hp.lengthscales.begin(),
                                              hp.lengthscales.end());
      if (hp.noise_sd_global) h["noise_sd_global"] = *hp.noise_sd_global;
      d["final_hyperparams"] = h;
    }
  }
  return d;
}

SeedOutcome run_one_seed(const ProblemSpec& spec, const ExperimentConfig& c,
                         std::uint64_t seed,
                         const std::vector<Vec>& ground_truth,
                         const std::string& seed_dir) {
  SeedOutcome outcome;
  outcome.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig rc = build_run_config(spec, c, seed);
  const Prior prior{spec.prior_box, {}};
  ensure_dir(seed_dir);
  write_text_file(seed_dir + "/config.json",
                  config_echo(c, spec, rc, seed).dump(2) + "\n");

  RunResult result;
  std::vector<Vec> final_samples;
  try {
    if (c.method == "gp_mh" || c.method == "mh_blfi") {
      const NoisyLogLikelihood target = spec.make_target(seed);
      result = c.method == "gp_mh" ? run_gp_mh(target, prior, rc)
                                   : run_mh_blfi(target, prior, rc);
      outcome.termination = termination_string(result.diagnostics.termination);
      outcome.total_evals = static_cast<long>(result.evaluations.size());
      outcome.forced_decisions = result.diagnostics.forced_decisions;
      outcome.invalid_evals = result.diagnostics.invalid_evals;
      outcome.refits = result.diagnostics.refits;
      if (outcome.termination != "completed" && c.method == "gp_mh")
        outcome.status = "terminated";

      if (c.method == "gp_mh") {
        for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
          const GpSnapshot& snap = result.snapshots[k];
          const auto upto = static_cast<std::size_t>(snap.iteration);
          if (upto > result.samples.size()) break;
          const std::vector<Vec> prefix(result.samples.begin(),
                                        result.samples.begin() +
                                            static_cast<std::ptrdiff_t>(upto));
          const auto kept = drop_burn_in(prefix, rc.burn_in_fraction);
          if (kept.empty()) continue;
          const TvReport tv = marginal_tv(kept, ground_truth);
          outcome.rows.push_back({static_cast<long>(k), snap.iteration,
                                  snap.eval_count, tv.mean_tv,
                                  tv.per_dimension_tv});
        }
        final_samples = result.samples;
      } else {
        for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
          const GpSnapshot& snap = result.snapshots[k];
          auto surrogate = std::make_shared<GpPosterior>(snap.gp);
          const NoisyLogLikelihood mode_target = deterministic_loglik(
              spec.dim, spec.prior_box, [surrogate](const Vec& th) {
                return surrogate->mean(th) - surrogate->var(th);
              });
          const auto draws = run_reference_mh(
              mode_target, prior, rc.initial_point, rc.initial_proposal_cov,
              c.snapshot_s_mcmc,
              mix_seed(mix_seed(seed, kSnapshotChainStream),
                       static_cast<std::uint64_t>(k)));
          const auto kept = drop_burn_in(draws, rc.burn_in_fraction);
          if (kept.empty()) continue;
          const TvReport tv = marginal_tv(kept, ground_truth);
          outcome.rows.push_back({static_cast<long>(k), snap.iteration,
                                  snap.eval_count, tv.mean_tv,
                                  tv.per_dimension_tv});
        }
        final_samples = result.samples;
      }
    } else {  // reference_mcmc
      const NoisyLogLikelihood target = spec.make_target(seed);
      const Prior ref_prior{spec.prior_box, {}};
      const auto samples = run_reference_mh(
          target, ref_prior, spec.theta0, diag_squared(spec.sigma0_sd),
          c.iterations > 0 ? c.iterations : spec.default_iterations, seed);
      result.samples = samples;
      outcome.total_evals = static_cast<long>(samples.size());
      const RunConfig ref_rc = build_run_config(spec, c, seed);
      for (std::size_t k = 0; k < ref_rc.snapshot_schedule.size(); ++k) {
        const long it = ref_rc.snapshot_schedule[k];
        if (it > static_cast<long>(samples.size())) break;
        const std::vector<Vec> prefix(
            samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(it));
        const auto kept = drop_burn_in(prefix, c.burn_in_fraction);
        if (kept.empty()) continue;
        const TvReport tv = marginal_tv(kept, ground_truth);
        outcome.rows.push_back(
            {static_cast<long>(k), it, it, tv.mean_tv, tv.per_dimension_tv});
      }
      final_samples = samples;
    }

    // Final-sample TV (all methods).
    if (!final_samples.empty()) {
      const auto kept = drop_burn_in(final_samples, c.burn_in_fraction);
      if (!kept.empty())
        outcome.final_tv = marginal_tv(kept, ground_truth).mean_tv;
      outcome.n_samples = static_cast<long>(final_samples.size());
      write_samples_csv(seed_dir + "/samples.csv", final_samples);
    }
    if (!result.evaluations.empty())
      write_evaluations_csv(seed_dir + "/evaluations.csv", result.evaluations,
                            spec.dim);
    write_metrics_csv(seed_dir + "/metrics.csv", outcome.rows, spec.dim);
  } catch (const std::exception& e) {
    outcome.status = "error";
    outcome.message = e.what();
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_text_file(
      seed_dir + "/diagnostics.json",
      diagnostics_json(outcome, outcome.status == "error" ? nullptr : &result,
                       wall)
              .dump(2) +
          "\n");
  return outcome;
}

void write_summary(const std::string& run_dir,
                   const std::vector<SeedOutcome>& outcomes) {
  // Aggregate by snapshot index: median and middle-75% band of the mean TV.
  std::size_t max_rows = 0;
  for (const auto& o : outcomes) max_rows = std::max(max_rows, o.rows.size());
  CsvWriter summary(run_dir + "/summary.csv",
                    {"snapshot", "iteration", "eval_count_median", "n_seeds",
                     "tv_median", "tv_lo", "tv_hi"});
  for (std::size_t k = 0; k < max_rows; ++k) {
    std::vector<double> tvs;
    std::vector<double> evals;
    long iteration = 0;
    for (const auto& o : outcomes) {
      if (o.status == "error" || k >= o.rows.size()) continue;
      tvs.push_back(o.rows[k].tv_mean);
      evals.push_back(static_cast<double>(o.rows[k].eval_count));
      iteration = o.rows[k].iteration;
    }
    if (tvs.empty()) continue;
    std::sort(tvs.begin(), tvs.end());
    std::sort(evals.begin(), evals.end());
    summary.row({static_cast<double>(k), static_cast<double>(iteration),
                 quantile_sorted(evals, 0.5),
                 static_cast<double>(tvs.size()), quantile_sorted(tvs, 0.5),
                 quantile_sorted(tvs, 0.125), quantile_sorted(tvs, 0.875)});
  }
  summary.close();

  CsvWriter seeds(run_dir + "/seeds.csv",
                  {"seed", "ok", "n_samples", "total_evals", "final_tv",
                   "forced_decisions", "invalid_evals", "refits"});
  for (const auto& o : outcomes)
    seeds.row({static_cast<double>(o.seed), o.status == "ok" ? 1.0 : 0.0,
               static_cast<double>(o.n_samples),
               static_cast<double>(o.total_evals), o.final_tv,
               static_cast<double>(o.forced_decisions),
               static_cast<double>(o.invalid_evals),
               static_cast<double>(o.refits)});
  seeds.close();
}

}  // namespace

std::vector<Vec> ensure_ground_truth(const ProblemSpec& spec, long budget,
                                     std::uint64_t seed,
                                     const std::string& output_root,
                                     bool refresh, std::string* path_out) {
  if (budget <= 0) budget = spec.is_sl ? 100000 : 200000;
  const std::string dir = output_root + "/ground_truth/" + spec.name;
  const std::string samples_path = dir + "/samples.csv";
  const std::string meta_path = dir + "/meta.json";
  if (path_out != nullptr) *path_out = samples_path;

  if (!refresh && file_exists(samples_path) && file_exists(meta_path)) {
    const json meta = json::parse(read_text_file(meta_path));
    const std::string stored_hash = meta.value("fixture_hash", "");
    if (stored_hash != spec.fixture_hash)
      throw std::runtime_error(
          "cached ground truth at " + dir +
          " was built from a different data fixture (hash " + stored_hash +
          " vs " + spec.fixture_hash +
          "); rerun `gpmh ground-truth --refresh` to rebuild it");
    if (meta.value("seed", std::uint64_t{0}) == seed &&
        meta.value("budget", long{0}) == budget)
      return read_samples_csv(samples_path);
  }

  std::vector<Vec> samples;
  std::string sampler_name;
  if (!spec.is_sl) {
    ToyName toy;
    if (spec.name.rfind("simple", 0) == 0) toy = ToyName::Simple;
    else if (spec.name.rfind("banana", 0) == 0) toy = ToyName::Banana;
    else toy = ToyName::Multimodal;
    samples = sample_toy_exact(toy, budget, seed);
    sampler_name = "exact";
  } else {
    const NoisyLogLikelihood target = spec.make_reference_target(seed);
    const Prior prior{spec.prior_box, {}};
    const auto chain =
        run_reference_mh(target, prior, spec.theta0,
                         diag_squared(spec.sigma0_sd), budget, seed);
    samples = drop_burn_in(chain, 0.25);
    sampler_name = "sl_mcmc";
  }

  ensure_dir(dir);
  write_samples_csv(samples_path, samples);
  json meta;
  meta["problem"] = spec.name;
  meta["seed"] = seed;
  meta["budget"] = budget;
  meta["fixture_hash"] = spec.fixture_hash;
  meta["sampler"] = sampler_name;
  meta["stored_samples"] = static_cast<long>(samples.size());
  write_text_file(meta_path, meta.dump(2) + "\n");
  return samples;
}

int run_experiment(const std::string& config_path,
                   const std::string& output_root, int jobs) {
  ExperimentConfig config;
  try {
    config = parse_config(read_text_file(config_path));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n\n"
              << config_schema_note();
    return 2;
  }
  const ProblemSpec spec =
      make_problem(config.problem, config.high_noise, config.data_dir);
  const std::vector<Vec> ground_truth =
      ensure_ground_truth(spec, config.ground_truth_budget,
                          config.ground_truth_seed, output_root,
                          /*refresh=*/false);

  const std::string run_dir = output_root + "/" + config.output_dir;
  ensure_dir(run_dir);

  std::vector<SeedOutcome> outcomes(config.seeds.size());
  std::atomic<std::size_t> next{0};
  const int n_workers = std::max(
      1, std::min(jobs, static_cast<int>(config.seeds.size())));
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config.seeds.size()) break;
      const std::uint64_t seed = config.seeds[i];
      const std::string seed_dir =
          run_dir + "/seed_" + std::to_string(seed);
      outcomes[i] = run_one_seed(spec, config, seed, ground_truth, seed_dir);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  write_summary(run_dir, outcomes);
  int failures = 0;
  for (const auto& o : outcomes) {
    if (o.status == "error") {
      ++failures;
      std::cerr << "seed " << o.seed << " failed: " << o.message << "\n";
    }
  }
  std::cout << "wrote " << run_dir << " (" << outcomes.size() - failures
            << "/" << outcomes.size() << " seeds ok)\n";
  return failures == static_cast<int>(outcomes.size()) && !outcomes.empty()
             ? 1
             : 0;
}

int cmd_ground_truth(const std::string& preset, bool high_noise, long budget,
                     std::uint64_t seed, const std::string& output_root,
                     const std::string& data_dir, bool refresh) {
  const ProblemSpec spec = make_problem(preset, high_noise, data_dir);
  std::string path;
  const auto samples =
      ensure_ground_truth(spec, budget, seed, output_root, refresh, &path);
  std::cout << path << " (" << samples.size() << " samples)\n";
  return 0;
}

int cmd_bounds(double sigma_s, double sigma_n_bar, int p, double s2,
               const std::vector<long>& n_values,
               const std::vector<double>& eps_values, int n_mc,
               std::uint64_t seed, const std::string& out_path) {
  CsvWriter w(out_path,
              {"n", "epsilon", "c_n", "bound_conditional",
               "bound_unconditional", "mc_conditional", "mc_unconditional"});
  for (long n : n_values) {
    for (double eps : eps_values) {
      Rng rng_c(seed, 0xb0c1);
      Rng rng_u(seed, 0xb0c2);
      w.row({static_cast<double>(n), eps, noise_scale_c_n(sigma_s,
                                                          sigma_n_bar, n),
             bound_conditional(eps, sigma_s, sigma_n_bar, n),
             bound_unconditional(sigma_s, sigma_n_bar, n),
             bound_conditional_mc(eps, sigma_s, sigma_n_bar, n, p, s2, n_mc,
                                  rng_c),
             bound_unconditional_mc(sigma_s, sigma_n_bar, n, p, s2, n_mc,
                                    rng_u)});
    }
  }
  w.close();
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_validate(const std::string& config_path) {
  try {
    const ExperimentConfig config = parse_config(read_text_file(config_path));
    make_problem(config.problem, config.high_noise, config.data_dir);
    std::cout << "ok\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n\n"
              << config_schema_note();
    return 2;
  }
}

}  // namespace gpmh::cli
