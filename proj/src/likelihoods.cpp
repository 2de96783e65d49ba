#include "gpmh/likelihoods.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "gpmh/io.hpp"

namespace gpmh {

namespace {

// Substream tag for likelihood-evaluation randomness; keeps evaluator draws
// off the chain/design streams.
constexpr std::uint64_t kEvalStream = 0x7a26e701;

double neg_quad_form_2d(double v1, double v2, double rho) {
  // -0.5 * v' S^-1 v for S = [[1, rho], [rho, 1]].
  const double det = 1.0 - rho * rho;
  return -(v1 * v1 - 2.0 * rho * v1 * v2 + v2 * v2) / (2.0 * det);
}

}  // namespace

ToyName toy_name_from_string(const std::string& s) {
  if (s == "simple") return ToyName::Simple;
  if (s == "banana") return ToyName::Banana;
  if (s == "multimodal") return ToyName::Multimodal;
  throw std::invalid_argument("unknown toy density: " + s);
}

std::string to_string(ToyName name) {
  switch (name) {
    case ToyName::Simple: return "simple";
    case ToyName::Banana: return "banana";
    case ToyName::Multimodal: return "multimodal";
  }
  throw std::logic_error("unreachable");
}

double toy_logdensity_2d(ToyName name, double th1, double th2) {
  switch (name) {
    case ToyName::Simple:
      return neg_quad_form_2d(th1, th2, 0.25);
    case ToyName::Banana:
      return neg_quad_form_2d(th1, th2 + th1 * th1 + 1.0, 0.9);
    case ToyName::Multimodal:
      return neg_quad_form_2d(th1, th2 * th2 - 2.0, 0.5);
  }
  throw std::logic_error("unreachable");
}

double toy_logdensity_noiseless(ToyName name, const Vec& theta6) {
  if (theta6.size() != 6)
    throw std::invalid_argument("toy densities are 6-dimensional");
  double f = 0.0;
  for (int b = 0; b < 3; ++b)
    f += toy_logdensity_2d(name, theta6[2 * b], theta6[2 * b + 1]);
  return f;
}

EvalResult toy_logdensity(ToyName name, const Vec& theta6, double noise_sd,
                          Rng& rng) {
  EvalResult out;
  out.y = toy_logdensity_noiseless(name, theta6) + rng.normal(0.0, noise_sd);
  out.noise_sd = noise_sd;
  out.valid = std::isfinite(out.y);
  return out;
}

Box toy_prior_box(ToyName name) {
  Box box;
  box.lo = Vec::Zero(6);
  box.hi = Vec::Zero(6);
  for (int b = 0; b < 3; ++b) {
    double lo1, hi1, lo2, hi2;
    switch (name) {
      case ToyName::Simple:
        lo1 = lo2 = -16.0;
        hi1 = hi2 = 16.0;
        break;
      case ToyName::Banana:
        lo1 = -6.0;
        hi1 = 6.0;
        lo2 = -20.0;
        hi2 = 2.0;
        break;
      case ToyName::Multimodal:
        lo1 = lo2 = -6.0;
        hi1 = hi2 = 6.0;
        break;
      default:
        throw std::logic_error("unreachable");
    }
    box.lo[2 * b] = lo1;
    box.hi[2 * b] = hi1;
    box.lo[2 * b + 1] = lo2;
    box.hi[2 * b + 1] = hi2;
  }
  return box;
}

NoisyLogLikelihood make_toy_loglik(ToyName name, double noise_sd,
                                   std::uint64_t seed) {
  NoisyLogLikelihood target;
  target.dim = 6;
  target.support = toy_prior_box(name);
  auto rng = std::make_shared<Rng>(seed, kEvalStream);
  target.evaluate = [name, noise_sd, rng](const Vec& theta) {
    return toy_logdensity(name, theta, noise_sd, *rng);
  };
  return target;
}

// ---------------------------------------------------------------------------

SimResult ricker_simulate(const RickerParams& params, int T, Rng& rng) {
  ThetaRickerParams general;
  general.log_r = params.log_r;
  general.theta_exp = 1.0;
  general.K = params.log_r;  // N exp(log_r (1 - N/log_r)) = r N exp(-N)
  general.phi = params.phi;
  general.sigma_eps = params.sigma_eps;
  return theta_ricker_simulate(general, T, rng);
}

SimResult theta_ricker_simulate(const ThetaRickerParams& params, int T,
                                Rng& rng) {
  SimResult out;
  if (T < 1 || !std::isfinite(params.log_r) || !std::isfinite(params.phi) ||
      !std::isfinite(params.sigma_eps) || !std::isfinite(params.K) ||
      !std::isfinite(params.theta_exp) || params.K <= 0.0 ||
      params.phi < 0.0) {
    out.valid = false;
    return out;
  }
  out.x.reserve(static_cast<std::size_t>(T));
  const double se = std::abs(params.sigma_eps);
  double latent = 1.0;
  for (int t = 0; t < T; ++t) {
    const double eps = rng.normal(0.0, se);
    const double growth =
        params.log_r * (1.0 - std::pow(latent / params.K, params.theta_exp));
    latent *= std::exp(growth + eps);
    const double obs_mean = params.phi * latent;
    if (!std::isfinite(latent) || latent < 0.0 || obs_mean > 1e9) {
      out.valid = false;
      return out;
    }
    out.x.push_back(static_cast<double>(rng.poisson(obs_mean)));
  }
  return out;
}

// ---------------------------------------------------------------------------

SummaryResult wood_summaries(const std::vector<double>& series) {
  SummaryResult out;
  out.s = Vec::Zero(13);
  const int T = static_cast<int>(series.size());
  if (T < 7) {
    out.valid = false;
    return out;
  }
  double mean = 0.0;
  int zeros = 0;
  for (double v : series) {
    mean += v;
    if (v == 0.0) ++zeros;
  }
  mean /= T;
  out.s[0] = mean;
  out.s[12] = zeros;
  for (int k = 0; k <= 5; ++k) {
    double acc = 0.0;
    for (int t = 0; t + k < T; ++t)
      acc += (series[t] - mean) * (series[t + k] - mean);
    out.s[1 + k] = acc / T;
  }

  // Cubic regression (no intercept) of the sorted first differences on
  // standard normal order scores.
  const int nd = T - 1;
  std::vector<double> diffs(static_cast<std::size_t>(nd));
  for (int t = 0; t < nd; ++t) diffs[t] = series[t + 1] - series[t];
  std::sort(diffs.begin(), diffs.end());
  Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
  Eigen::Vector3d xty = Eigen::Vector3d::Zero();
  for (int i = 0; i < nd; ++i) {
    const double z = norm_quantile((i + 0.5) / nd);
    const Eigen::Vector3d x(z, z * z, z * z * z);
    xtx += x * x.transpose();
    xty += x * diffs[static_cast<std::size_t>(i)];
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu3(xtx);
  if (lu3.rank() < 3) {
    out.valid = false;
  } else {
    out.s.segment<3>(7) = lu3.solve(xty);
  }

  // Growth regression (no intercept): x_{t+1}^0.3 on (x_t^0.3, x_t^0.6).
  Eigen::Matrix2d gtg = Eigen::Matrix2d::Zero();
  Eigen::Vector2d gty = Eigen::Vector2d::Zero();
  for (int t = 0; t + 1 < T; ++t) {
    const double a = std::pow(series[t], 0.3);
    const Eigen::Vector2d g(a, a * a);
    gtg += g * g.transpose();
    gty += g * std::pow(series[t + 1], 0.3);
  }
  Eigen::FullPivLU<Eigen::Matrix2d> lu2(gtg);
  if (lu2.rank() < 2) {
    out.valid = false;
  } else {
    out.s.segment<2>(10) = lu2.solve(gty);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Gaussian log-density of `diff` under covariance `cov`, with one retry after
// adding the relative ridge 1e-8 * trace / dim when the factorization fails.
bool gaussian_logpdf_with_ridge(const Mat& cov, const Vec& diff, double* y) {
  const int s = static_cast<int>(cov.rows());
  Eigen::LLT<Mat> llt(cov);
  Mat ridged;
  const Mat* use = &cov;
  if (llt.info() != Eigen::Success) {
    ridged = cov + (1e-8 * cov.trace() / s) * Mat::Identity(s, s);
    llt.compute(ridged);
    if (llt.info() != Eigen::Success) return false;
    use = &ridged;
  }
  (void)use;
  double logdet = 0.0;
  for (int i = 0; i < s; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  logdet *= 2.0;
  const double quad = diff.dot(llt.solve(diff));
  *y = -0.5 * (s * kLog2Pi + logdet + quad);
  return std::isfinite(*y);
}

}  // namespace

EvalResult synthetic_loglik(
    const std::function<SimResult(Rng&)>& simulate,
    const std::function<SummaryResult(const std::vector<double>&)>& summary,
    const Vec& observed_summary, const SlConfig& config, Rng& rng) {
  const int n = config.n_reps;
  const int s = static_cast<int>(observed_summary.size());
  if (n < s + 2)
    throw std::invalid_argument(
        "synthetic likelihood needs n_reps >= summary dim + 2");
  EvalResult out;
  out.valid = false;

  Mat sims(n, s);
  for (int i = 0; i < n; ++i) {
    const SimResult sim = simulate(rng);
    if (!sim.valid) return out;
    const SummaryResult sm = summary(sim.x);
    if (!sm.valid || sm.s.size() != s) return out;
    sims.row(i) = sm.s.transpose();
  }

  const Vec mu = sims.colwise().mean();
  const Mat centered = sims.rowwise() - mu.transpose();
  const Mat cov = centered.transpose() * centered / (n - 1);
  double y = 0.0;
  if (!gaussian_logpdf_with_ridge(cov, observed_summary - mu, &y)) return out;
  out.y = y;
  if (std::abs(y) > config.abs_y_max) return out;

  if (config.n_bootstrap > 0) {
    std::vector<double> replicate_y;
    replicate_y.reserve(static_cast<std::size_t>(config.n_bootstrap));
    Mat resampled(n, s);
    for (int b = 0; b < config.n_bootstrap; ++b) {
      for (int i = 0; i < n; ++i) {
        const int idx =
            std::min(static_cast<int>(rng.uniform01() * n), n - 1);
        resampled.row(i) = sims.row(idx);
      }
      const Vec bmu = resampled.colwise().mean();
      const Mat bcentered = resampled.rowwise() - bmu.transpose();
      const Mat bcov = bcentered.transpose() * bcentered / (n - 1);
      double by = 0.0;
      if (gaussian_logpdf_with_ridge(bcov, observed_summary - bmu, &by))
        replicate_y.push_back(by);
    }
    if (static_cast<int>(replicate_y.size()) < config.n_bootstrap / 2)
      return out;
    double bm = 0.0;
    for (double v : replicate_y) bm += v;
    bm /= static_cast<double>(replicate_y.size());
    double ss = 0.0;
    for (double v : replicate_y) ss += (v - bm) * (v - bm);
    out.noise_sd =
        std::sqrt(ss / (static_cast<double>(replicate_y.size()) - 1.0));
    if (!(out.noise_sd <= config.noise_sd_max)) return out;
  }
  out.valid = true;
  return out;
}

// ---------------------------------------------------------------------------

std::string find_data_dir(const std::string& override_dir) {
  std::vector<std::string> candidates;
  if (!override_dir.empty()) candidates.push_back(override_dir);
  if (const char* env = std::getenv("GPMH_DATA_DIR")) candidates.push_back(env);
  candidates.push_back("data");
  candidates.push_back("../data");
  candidates.push_back("../../data");
#ifdef GPMH_SOURCE_DIR
  candidates.push_back(std::string(GPMH_SOURCE_DIR) + "/data");
#endif
  for (const auto& c : candidates)
    if (file_exists(c + "/ricker_observed.csv")) return c;
  throw std::runtime_error(
      "cannot locate the data/ fixture directory; set GPMH_DATA_DIR");
}

namespace {

std::vector<double> load_observed_series(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int col = table.column("x");
  if (col < 0) throw std::runtime_error("fixture missing 'x' column: " + path);
  std::vector<double> x;
  x.reserve(table.rows.size());
  for (const auto& row : table.rows) x.push_back(row[static_cast<std::size_t>(col)]);
  return x;
}

ProblemSpec make_toy_problem(ToyName name, bool high_noise) {
  ProblemSpec spec;
  spec.name = to_string(name) + "6d" + (high_noise ? "_high_noise" : "");
  spec.dim = 6;
  spec.prior_box = toy_prior_box(name);
  spec.theta0 = Vec::Constant(6, name == ToyName::Simple ? -8.0 : -3.0);
  spec.sigma0_sd = Vec::Ones(6);
  spec.t_init = 10;
  spec.default_iterations = 100000;
  spec.is_sl = false;
  spec.estimate_gp_noise = true;
  const double base_sd = (name == ToyName::Simple) ? 2.0 : 1.0;
  spec.known_noise_sd = base_sd * (high_noise ? 2.0 : 1.0);
  const double sd = spec.known_noise_sd;
  spec.make_target = [name, sd](std::uint64_t seed) {
    return make_toy_loglik(name, sd, seed);
  };
  spec.exact_logdensity = [name](const Vec& th) {
    return toy_logdensity_noiseless(name, th);
  };
  const Box support = spec.prior_box;
  spec.make_reference_target = [name, support](std::uint64_t) {
    NoisyLogLikelihood target;
    target.dim = 6;
    target.support = support;
    target.evaluate = [name](const Vec& theta) {
      EvalResult r;
      r.y = toy_logdensity_noiseless(name, theta);
      r.valid = std::isfinite(r.y);
      return r;
    };
    return target;
  };
  return spec;
}

ProblemSpec make_sl_problem(const std::string& preset,
                            const std::string& data_dir) {
  const bool theta_variant = (preset == "theta_ricker");
  ProblemSpec spec;
  spec.name = preset;
  spec.is_sl = true;
  spec.estimate_gp_noise = false;
  spec.design_candidate_noise_sd = 0.1;
  spec.sl = SlConfig{};

  const std::string dir = find_data_dir(data_dir);
  spec.fixture_path = dir + "/" + preset + "_observed.csv";
  const std::string bytes = read_text_file(spec.fixture_path);
  spec.fixture_hash = fnv1a64_hex(bytes);
  spec.observed_series = load_observed_series(spec.fixture_path);

  const SummaryResult obs = wood_summaries(spec.observed_series);
  if (!obs.valid)
    throw std::runtime_error("observed series gives degenerate summaries: " +
                             spec.fixture_path);
  spec.observed_summary = obs.s;

  if (theta_variant) {
    spec.dim = 5;
    spec.prior_box.lo = Vec(5);
    spec.prior_box.hi = Vec(5);
    spec.prior_box.lo << 2.0, 0.01, 1.0, 4.0, 0.0;
    spec.prior_box.hi << 5.0, 2.0, 5.0, 20.0, 0.8;
    spec.theta0 = Vec(5);
    spec.theta0 << 3.4, 0.9, 3.0, 8.0, 0.3;
    spec.sigma0_sd = Vec(5);
    spec.sigma0_sd << 0.05, 0.1, 0.25, 0.5, 0.05;
    spec.theta_true = Vec(5);
    spec.theta_true << 3.5, 1.0, 3.5, 10.0, 0.3;
    spec.t_init = 20;
    spec.default_iterations = 200000;
  } else {
    spec.dim = 3;
    spec.prior_box.lo = Vec(3);
    spec.prior_box.hi = Vec(3);
    spec.prior_box.lo << 3.0, 4.0, 0.0;
    spec.prior_box.hi << 5.0, 20.0, 0.8;
    spec.theta0 = Vec(3);
    spec.theta0 << 3.4, 8.0, 0.15;
    spec.sigma0_sd = Vec(3);
    spec.sigma0_sd << 0.1, 1.0, 0.1;
    spec.theta_true = Vec(3);
    spec.theta_true << 3.8, 10.0, 0.3;
    spec.t_init = 10;
    spec.default_iterations = 100000;
  }

  const int T = static_cast<int>(spec.observed_series.size());
  const Vec observed_summary = spec.observed_summary;
  const Box support = spec.prior_box;
  const int dim = spec.dim;
  const auto make_evaluator = [theta_variant, T, observed_summary, support,
                               dim](const SlConfig& sl) {
    return [theta_variant, T, observed_summary, support, dim,
            sl](std::uint64_t seed) {
      NoisyLogLikelihood target;
      target.dim = dim;
      target.support = support;
      auto rng = std::make_shared<Rng>(seed, kEvalStream);
      target.evaluate = [theta_variant, T, observed_summary, sl,
                         rng](const Vec& theta) {
        auto simulate = [&theta, theta_variant, T](Rng& r) {
          if (theta_variant) {
            ThetaRickerParams p;
            p.log_r = theta[0];
            p.theta_exp = theta[1];
            p.K = theta[2];
            p.phi = theta[3];
            p.sigma_eps = theta[4];
            return theta_ricker_simulate(p, T, r);
          }
          RickerParams p;
          p.log_r = theta[0];
          p.phi = theta[1];
          p.sigma_eps = theta[2];
          return ricker_simulate(p, T, r);
        };
        return synthetic_loglik(simulate, wood_summaries, observed_summary,
                                sl, *rng);
      };
      return target;
    };
  };
  spec.make_target = make_evaluator(spec.sl);
  SlConfig no_bootstrap = spec.sl;
  no_bootstrap.n_bootstrap = 0;
  spec.make_reference_target = make_evaluator(no_bootstrap);
  return spec;
}

}  // namespace

ProblemSpec make_problem(const std::string& preset, bool high_noise,
                         const std::string& data_dir) {
  if (preset == "simple6d") return make_toy_problem(ToyName::Simple, high_noise);
  if (preset == "banana6d") return make_toy_problem(ToyName::Banana, high_noise);
  if (preset == "multimodal6d")
    return make_toy_problem(ToyName::Multimodal, high_noise);
  if (preset == "ricker" || preset == "theta_ricker") {
    if (high_noise)
      throw std::invalid_argument(
          "high_noise variants exist only for the toy presets");
    return make_sl_problem(preset, data_dir);
  }
  throw std::invalid_argument("unknown problem preset: " + preset);
}

}  // namespace gpmh
