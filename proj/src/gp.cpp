#include "gpmh/gp.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

namespace gpmh {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Jitter escalation shared by the Gram and candidate factorizations:
// starts at 1e-10 * signal_sd^2, grows x10 up to 1e-4 * signal_sd^2.
template <typename FailError>
Eigen::LLT<Mat> chol_with_jitter(Mat m, double signal_sd, double* jitter_used,
                                 const char* what) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() == Eigen::Success) {
    if (jitter_used) *jitter_used = 0.0;
    return llt;
  }
  const double s2 = signal_sd * signal_sd;
  for (double jitter = 1e-10 * s2; jitter <= 1e-4 * s2 * (1.0 + 1e-12);
       jitter *= 10.0) {
    Mat mj = m + jitter * Mat::Identity(m.rows(), m.cols());
    llt.compute(mj);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt;
    }
  }
  throw FailError(what);
}

}  // namespace

GpHyperparams default_hyperparams(int p, double signal_sd, double lengthscale) {
  GpHyperparams hp;
  hp.signal_sd = signal_sd;
  hp.lengthscales = Vec::Constant(p, lengthscale);
  const int q = 2 * p + 1;
  hp.basis_prior_mean = Vec::Zero(q);
  hp.basis_prior_cov = 900.0 * Mat::Identity(q, q);
  return hp;
}

GpHyperparams kernel_only_hyperparams(int p, double signal_sd,
                                      double lengthscale) {
  GpHyperparams hp;
  hp.signal_sd = signal_sd;
  hp.lengthscales = Vec::Constant(p, lengthscale);
  hp.basis_prior_mean = Vec(0);
  hp.basis_prior_cov = Mat(0, 0);
  return hp;
}

Vec basis_vector(const Vec& theta, int q) {
  if (q == 0) return Vec(0);
  const int p = static_cast<int>(theta.size());
  if (q != 2 * p + 1)
    throw std::invalid_argument("basis_vector: q must be 0 or 2p+1");
  Vec h(q);
  h[0] = 1.0;
  h.segment(1, p) = theta;
  h.segment(1 + p, p) = theta.array().square();
  return h;
}

GpPosterior::GpPosterior(GpHyperparams hp, std::vector<Evaluation> data)
    : hp_(std::move(hp)), data_(std::move(data)) {
  const int p = hp_.dim();
  const int q = hp_.basis_size();
  const int t = static_cast<int>(data_.size());
  if (hp_.signal_sd <= 0.0)
    throw std::invalid_argument("GpPosterior: signal_sd must be > 0");
  for (int i = 0; i < p; ++i)
    if (!(hp_.lengthscales[i] > 0.0))
      throw std::invalid_argument("GpPosterior: lengthscales must be > 0");
  if (q != 0 && q != 2 * p + 1)
    throw std::invalid_argument("GpPosterior: basis size must be 0 or 2p+1");

  X_.resize(t, p);
  Vec y(t), noise2(t);
  for (int i = 0; i < t; ++i) {
    if (static_cast<int>(data_[i].theta.size()) != p)
      throw std::invalid_argument("GpPosterior: data dimension mismatch");
    X_.row(i) = data_[i].theta.transpose();
    y[i] = data_[i].y;
    const double sd =
        hp_.noise_sd_global ? *hp_.noise_sd_global : data_[i].noise_sd;
    noise2[i] = sd * sd;
  }

  if (t == 0) {
    if (q > 0) beta_bar_ = hp_.basis_prior_mean;
    return;
  }

  Mat K(t, t);
  for (int i = 0; i < t; ++i) {
    K(i, i) = hp_.signal_sd * hp_.signal_sd + noise2[i];
    for (int j = i + 1; j < t; ++j) {
      K(i, j) = K(j, i) = kernel(data_[i].theta, data_[j].theta);
    }
  }
  llt_ = chol_with_jitter<DegenerateDataError>(
      K, hp_.signal_sd, &jitter_,
      "GpPosterior: Gram matrix not positive definite after jitter escalation");

  if (q > 0) {
    H_.resize(q, t);
    for (int i = 0; i < t; ++i) H_.col(i) = basis_vector(data_[i].theta, q);
    W_ = llt_.solve(H_.transpose());  // t x q
    Eigen::LLT<Mat> bllt(hp_.basis_prior_cov);
    if (bllt.info() != Eigen::Success)
      throw std::invalid_argument("GpPosterior: basis_prior_cov not SPD");
    Mat Binv = bllt.solve(Mat::Identity(q, q));
    Mat A = Binv + H_ * W_;
    allt_.compute(A);
    if (allt_.info() != Eigen::Success)
      throw DegenerateDataError("GpPosterior: basis Gram not positive definite");
    beta_bar_ = allt_.solve(H_ * llt_.solve(y) + Binv * hp_.basis_prior_mean);
    alpha_ = llt_.solve(y - H_.transpose() * beta_bar_);
  } else {
    alpha_ = llt_.solve(y);
  }
}

double GpPosterior::kernel(const Vec& a, const Vec& b) const {
  double d2 = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / hp_.lengthscales[i];
    d2 += d * d;
  }
  return hp_.signal_sd * hp_.signal_sd * std::exp(-0.5 * d2);
}

Vec GpPosterior::kernel_vec(const Vec& theta) const {
  Vec k(t());
  for (int i = 0; i < t(); ++i) k[i] = kernel(data_[i].theta, theta);
  return k;
}

double GpPosterior::mean(const Vec& theta) const {
  const int q = hp_.basis_size();
  double m = 0.0;
  if (q > 0) m += basis_vector(theta, q).dot(beta_bar_);
  if (t() > 0) m += kernel_vec(theta).dot(alpha_);
  return m;
}

double GpPosterior::cov(const Vec& a, const Vec& b) const {
  const int q = hp_.basis_size();
  double c = kernel(a, b);
  if (t() == 0) {
    if (q > 0) {
      c += basis_vector(a, q).dot(hp_.basis_prior_cov * basis_vector(b, q));
    }
    return c;
  }
  const Vec ka = kernel_vec(a);
  const Vec kb = kernel_vec(b);
  const auto L = llt_.matrixLLT().triangularView<Eigen::Lower>();
  const Vec va = L.solve(ka);
  const Vec vb = L.solve(kb);
  c -= va.dot(vb);
  if (q > 0) {
    const Vec Ra = basis_vector(a, q) - W_.transpose() * ka;
    const Vec Rb = basis_vector(b, q) - W_.transpose() * kb;
    const auto La = allt_.matrixLLT().triangularView<Eigen::Lower>();
    const Vec ga = La.solve(Ra);
    const Vec gb = La.solve(Rb);
    c += ga.dot(gb);
  }
  return c;
}

double GpPosterior::var(const Vec& theta) const {
  return std::max(0.0, cov(theta, theta));
}

PairGaussian GpPosterior::predict_pair(const Vec& theta,
                                       const Vec& theta_prime) const {
  PairGaussian out;
  out.mean << mean(theta), mean(theta_prime);
  const double off = cov(theta, theta_prime);
  out.cov << var(theta), off, off, var(theta_prime);
  return out;
}

double sigma_t2(const GpPosterior& gp, const Vec& theta,
                const Vec& theta_prime) {
  const double v =
      gp.var(theta) + gp.var(theta_prime) - 2.0 * gp.cov(theta, theta_prime);
  return std::max(0.0, v);
}

double lookahead_xi2(const GpPosterior& gp, const Vec& theta,
                     const Vec& theta_prime, const Mat& candidates,
                     const Vec& candidate_noise_sds) {
  const int b = static_cast<int>(candidates.cols());
  if (b < 1) throw std::invalid_argument("lookahead_xi2: need b >= 1");
  if (candidate_noise_sds.size() != b)
    throw std::invalid_argument("lookahead_xi2: noise vector size mismatch");
  Vec d(b);
  Mat C(b, b);
  for (int j = 0; j < b; ++j) {
    const Vec cj = candidates.col(j);
    d[j] = gp.cov(theta, cj) - gp.cov(theta_prime, cj);
    for (int k = j; k < b; ++k) {
      C(j, k) = C(k, j) = gp.cov(cj, candidates.col(k));
    }
    C(j, j) += candidate_noise_sds[j] * candidate_noise_sds[j];
  }
  Eigen::LLT<Mat> llt = chol_with_jitter<DegenerateCandidateError>(
      C, gp.hyperparams().signal_sd, nullptr,
      "lookahead_xi2: candidate covariance singular after jitter escalation");
  const Vec v = llt.matrixLLT().triangularView<Eigen::Lower>().solve(d);
  return std::max(0.0, v.squaredNorm());
}

// ---------------------------------------------------------------------------
// PairContext: b = 1 fast path with analytic candidate gradient.

struct PairContext::StarWork {
  Vec kstar;   // k_t(theta*)
  Vec hstar;   // h(theta*)
  Vec wstar;   // K^-1 k_t(theta*)
  Vec Rstar;   // h(theta*) - W' k_t(theta*)
  Vec aRstar;  // A^-1 Rstar (B Rstar when t = 0)
  double c_x[2];  // c_t(theta, theta*), c_t(theta', theta*)
  double s2;      // s_t^2(theta*)
};

PairContext::PairContext(const GpPosterior& gp, const Vec& theta,
                         const Vec& theta_prime)
    : gp_(gp), theta_(theta), theta_prime_(theta_prime) {
  const int q = gp.hyperparams().basis_size();
  const Vec* pts[2] = {&theta_, &theta_prime_};
  for (int i = 0; i < 2; ++i) {
    if (gp.t() > 0) {
      const Vec kx = gp.kernel_vec(*pts[i]);
      u_[i] = gp.gram_llt().solve(kx);
      if (q > 0) {
        const Vec Rx = basis_vector(*pts[i], q) - gp.gram_inv_basis().transpose() * kx;
        r_[i] = gp.basis_gram_llt().solve(Rx);
        wr_[i] = gp.gram_inv_basis() * r_[i];
      }
    } else if (q > 0) {
      r_[i] = gp.hyperparams().basis_prior_cov * basis_vector(*pts[i], q);
    }
  }
  sigma_t2_ = gpmh::sigma_t2(gp, theta, theta_prime);
}

void PairContext::star_work(const Vec& theta_star, StarWork& w) const {
  const int q = gp_.hyperparams().basis_size();
  const int t = gp_.t();
  const double s2_signal =
      gp_.hyperparams().signal_sd * gp_.hyperparams().signal_sd;
  w.hstar = basis_vector(theta_star, q);
  if (t > 0) {
    w.kstar = gp_.kernel_vec(theta_star);
    w.wstar = gp_.gram_llt().solve(w.kstar);
    if (q > 0) w.Rstar = w.hstar - gp_.gram_inv_basis().transpose() * w.kstar;
  } else {
    w.kstar = Vec(0);
    w.wstar = Vec(0);
    if (q > 0) w.Rstar = w.hstar;
  }
  if (q > 0) {
    w.aRstar = (t > 0) ? Vec(gp_.basis_gram_llt().solve(w.Rstar))
                       : Vec(gp_.hyperparams().basis_prior_cov * w.Rstar);
  }
  const Vec* pts[2] = {&theta_, &theta_prime_};
  for (int i = 0; i < 2; ++i) {
    double c = gp_.kernel(*pts[i], theta_star);
    if (t > 0) c -= w.kstar.dot(u_[i]);
    if (q > 0) c += (t > 0 ? w.Rstar.dot(r_[i]) : w.hstar.dot(r_[i]));
    w.c_x[i] = c;
  }
  double s2 = s2_signal;
  if (t > 0) s2 -= w.kstar.dot(w.wstar);
  if (q > 0) s2 += w.Rstar.dot(w.aRstar);
  w.s2 = s2;
}

double PairContext::xi2(const Vec& theta_star, double star_noise_sd) const {
  StarWork w;
  star_work(theta_star, w);
  const double den = w.s2 + star_noise_sd * star_noise_sd;
  if (den <= 1e-300) return 0.0;
  const double num = w.c_x[0] - w.c_x[1];
  return num * num / den;
}

double PairContext::xi2_grad(const Vec& theta_star, double star_noise_sd,
                             Vec& grad) const {
  const int p = gp_.dim();
  const int q = gp_.hyperparams().basis_size();
  const int t = gp_.t();
  StarWork w;
  star_work(theta_star, w);
  const double den = w.s2 + star_noise_sd * star_noise_sd;
  grad = Vec::Zero(p);
  if (den <= 1e-300) return 0.0;
  const double num = w.c_x[0] - w.c_x[1];

  const Vec inv_l2 =
      gp_.hyperparams().lengthscales.array().square().inverse().matrix();
  // Jacobian of k_t(theta*) w.r.t. theta*: row j = k(X_j, theta*) *
  // Lambda (X_j - theta*).
  Mat Jk(t, p);
  for (int j = 0; j < t; ++j) {
    Jk.row(j) = w.kstar[j] *
                ((gp_.points().row(j).transpose() - theta_star).array() *
                 inv_l2.array())
                    .matrix()
                    .transpose();
  }
  // Jacobian of h(theta*): rows [0; I; 2 diag(theta*)].
  auto jh_t_times = [&](const Vec& v) -> Vec {
    // Returns J_h' v (a p-vector) without materializing J_h.
    Vec out = Vec::Zero(p);
    if (q == 0) return out;
    out += v.segment(1, p);
    out += 2.0 * (theta_star.array() * v.segment(1 + p, p).array()).matrix();
    return out;
  };

  Vec grad_c[2];
  for (int i = 0; i < 2; ++i) {
    const Vec& x = (i == 0) ? theta_ : theta_prime_;
    Vec g = gp_.kernel(x, theta_star) *
            ((x - theta_star).array() * inv_l2.array()).matrix();
    if (t > 0) g -= Jk.transpose() * u_[i];
    if (q > 0) {
      g += jh_t_times(r_[i]);
      if (t > 0) g -= Jk.transpose() * wr_[i];
    }
    grad_c[i] = g;
  }
  Vec grad_s2 = Vec::Zero(p);
  if (t > 0) grad_s2 -= 2.0 * (Jk.transpose() * w.wstar);
  if (q > 0) {
    grad_s2 += 2.0 * jh_t_times(w.aRstar);
    if (t > 0) grad_s2 -= 2.0 * (Jk.transpose() * (gp_.gram_inv_basis() * w.aRstar));
  }

  const Vec grad_num = grad_c[0] - grad_c[1];
  grad = (2.0 * num * grad_num * den - num * num * grad_s2) / (den * den);
  return num * num / den;
}

// ---------------------------------------------------------------------------
// MAP hyperparameter fitting.

namespace {

struct FitProblem {
  Mat X;       // t x p
  Vec y;
  Vec noise2_fixed;  // per-evaluation variance (unused when estimating)
  Mat HtB_H;   // H' B H (constant across hyperparameter values)
  Mat Hmean;   // H' b as a vector (t)
  bool estimate_noise;
  int t, p;

  // Squared distances per dimension, cached once.
  std::vector<Mat> d2;

  double objective(const Vec& x, Vec* grad) const {
    const double sig = std::exp(x[0]);
    const double sig2 = sig * sig;
    Mat E(t, t);
    for (int i = 0; i < t; ++i) {
      E(i, i) = 1.0;
      for (int j = i + 1; j < t; ++j) {
        double s = 0.0;
        for (int k = 0; k < p; ++k)
          s += d2[k](i, j) * std::exp(-2.0 * x[1 + k]);
        E(i, j) = E(j, i) = std::exp(-0.5 * s);
      }
    }
    Mat C = sig2 * E + HtB_H;
    if (estimate_noise) {
      const double sn = std::exp(x[1 + p]);
      C.diagonal().array() += sn * sn;
    } else {
      C.diagonal() += noise2_fixed;
    }
    Eigen::LLT<Mat> llt(C);
    if (llt.info() != Eigen::Success) return kNegInf;
    const Vec resid = y - Hmean;
    const Vec alpha = llt.solve(resid);
    double logdet = 0.0;
    for (int i = 0; i < t; ++i) logdet += std::log(llt.matrixLLT()(i, i));
    const double obj =
        -0.5 * resid.dot(alpha) - logdet - 0.5 * t * kLog2Pi;
    if (!std::isfinite(obj)) return kNegInf;
    if (grad) {
      const Mat Cinv = llt.solve(Mat::Identity(t, t));
      const Mat M = alpha * alpha.transpose() - Cinv;
      // d/d log(sig): dC = 2 sig^2 E
      (*grad)[0] = (M.array() * (sig2 * E).array()).sum();
      for (int k = 0; k < p; ++k) {
        // d/d log(l_k): dC = sig^2 E .* d2_k / l_k^2
        const double inv_lk2 = std::exp(-2.0 * x[1 + k]);
        (*grad)[1 + k] =
            0.5 * (M.array() * (sig2 * E.array() * d2[k].array() * inv_lk2))
                      .sum();
      }
      if (estimate_noise) {
        const double sn = std::exp(x[1 + p]);
        (*grad)[1 + p] = sn * sn * M.trace();
      }
    }
    return obj;
  }
};

}  // namespace

double log_marginal_likelihood(const std::vector<Evaluation>& data,
                               const GpHyperparams& hp, bool use_global_noise) {
  const int t = static_cast<int>(data.size());
  const int p = hp.dim();
  const int q = hp.basis_size();
  FitProblem prob;
  prob.t = t;
  prob.p = p;
  prob.estimate_noise = use_global_noise;
  prob.X.resize(t, p);
  prob.y.resize(t);
  prob.noise2_fixed.resize(t);
  for (int i = 0; i < t; ++i) {
    prob.X.row(i) = data[i].theta.transpose();
    prob.y[i] = data[i].y;
    prob.noise2_fixed[i] = data[i].noise_sd * data[i].noise_sd;
  }
  prob.d2.assign(p, Mat::Zero(t, t));
  for (int k = 0; k < p; ++k)
    for (int i = 0; i < t; ++i)
      for (int j = i + 1; j < t; ++j) {
        const double d = prob.X(i, k) - prob.X(j, k);
        prob.d2[k](i, j) = prob.d2[k](j, i) = d * d;
      }
  if (q > 0) {
    Mat H(q, t);
    for (int i = 0; i < t; ++i) H.col(i) = basis_vector(data[i].theta, q);
    prob.HtB_H = H.transpose() * hp.basis_prior_cov * H;
    prob.Hmean = H.transpose() * hp.basis_prior_mean;
  } else {
    prob.HtB_H = Mat::Zero(t, t);
    prob.Hmean = Vec::Zero(t);
  }
  Vec x(1 + p + (use_global_noise ? 1 : 0));
  x[0] = std::log(hp.signal_sd);
  for (int k = 0; k < p; ++k) x[1 + k] = std::log(hp.lengthscales[k]);
  if (use_global_noise) {
    if (!hp.noise_sd_global)
      throw std::invalid_argument(
          "log_marginal_likelihood: noise_sd_global not set");
    x[1 + p] = std::log(*hp.noise_sd_global);
  }
  return prob.objective(x, nullptr);
}

GpPosterior fit_map(std::vector<Evaluation> data, const HyperpriorSpec& spec,
                    const GpHyperparams& init, bool warm_start_only) {
  if (data.empty()) throw std::invalid_argument("fit_map: empty data");
  const int p = static_cast<int>(data[0].theta.size());
  const int q = init.basis_size();
  const int t = static_cast<int>(data.size());

  FitProblem prob;
  prob.t = t;
  prob.p = p;
  prob.estimate_noise = spec.estimate_noise_sd;
  prob.X.resize(t, p);
  prob.y.resize(t);
  prob.noise2_fixed.resize(t);
  for (int i = 0; i < t; ++i) {
    prob.X.row(i) = data[i].theta.transpose();
    prob.y[i] = data[i].y;
    prob.noise2_fixed[i] = data[i].noise_sd * data[i].noise_sd;
  }
  prob.d2.assign(p, Mat::Zero(t, t));
  for (int k = 0; k < p; ++k)
    for (int i = 0; i < t; ++i)
      for (int j = i + 1; j < t; ++j) {
        const double d = prob.X(i, k) - prob.X(j, k);
        prob.d2[k](i, j) = prob.d2[k](j, i) = d * d;
      }
  if (q > 0) {
    Mat H(q, t);
    for (int i = 0; i < t; ++i) H.col(i) = basis_vector(data[i].theta, q);
    prob.HtB_H = H.transpose() * init.basis_prior_cov * H;
    prob.Hmean = H.transpose() * init.basis_prior_mean;
  } else {
    prob.HtB_H = Mat::Zero(t, t);
    prob.Hmean = Vec::Zero(t);
  }

  const int n = 1 + p + (spec.estimate_noise_sd ? 1 : 0);
  Vec lo(n), hi(n);
  lo[0] = std::log(spec.signal_sd_lo);
  hi[0] = std::log(spec.signal_sd_hi);
  for (int k = 0; k < p; ++k) {
    double range = prob.X.col(k).maxCoeff() - prob.X.col(k).minCoeff();
    if (!(range > 0.0)) range = 1.0;
    lo[1 + k] = std::log(spec.lengthscale_lo_factor * range);
    hi[1 + k] = std::log(spec.lengthscale_hi_factor * range);
  }
  if (spec.estimate_noise_sd) {
    lo[1 + p] = std::log(spec.noise_sd_lo);
    hi[1 + p] = std::log(spec.noise_sd_hi);
  }
  auto clip = [&](Vec x) {
    for (int i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
    return x;
  };

  Vec x0(n);
  x0[0] = std::log(init.signal_sd);
  for (int k = 0; k < p; ++k) x0[1 + k] = std::log(init.lengthscales[k]);
  if (spec.estimate_noise_sd)
    x0[1 + p] = std::log(init.noise_sd_global.value_or(1.0));

  std::vector<Vec> starts;
  starts.push_back(clip(x0));
  if (!warm_start_only) {
    Rng rng(spec.seed, /*stream=*/0xf17);
    for (int s = 1; s < spec.multistarts; ++s) {
      Vec xs(n);
      for (int i = 0; i < n; ++i) xs[i] = rng.uniform(lo[i], hi[i]);
      starts.push_back(xs);
    }
  }

  double best_f = kNegInf;
  Vec best_x;
  for (const Vec& start : starts) {
    Vec x = start;
    Vec g(n);
    double f = prob.objective(x, &g);
    if (f == kNegInf) continue;
    double step = 0.1;
    for (int iter = 0; iter < spec.max_iterations; ++iter) {
      if (g.lpNorm<Eigen::Infinity>() < 1e-7) break;
      bool moved = false;
      while (step >= 1e-14) {
        Vec xn = clip(x + step * g);
        const Vec dx = xn - x;
        if (dx.lpNorm<Eigen::Infinity>() < 1e-12) break;
        const double fn = prob.objective(xn, nullptr);
        if (fn > f + 1e-4 * std::max(0.0, g.dot(dx))) {
          x = xn;
          f = prob.objective(x, &g);
          step *= 1.5;
          moved = true;
          break;
        }
        step *= 0.4;
      }
      if (!moved) break;
    }
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  if (best_f == kNegInf)
    throw FitFailureError("fit_map: objective non-finite at every start", init);

  GpHyperparams out = init;
  out.signal_sd = std::exp(best_x[0]);
  for (int k = 0; k < p; ++k) out.lengthscales[k] = std::exp(best_x[1 + k]);
  if (spec.estimate_noise_sd) out.noise_sd_global = std::exp(best_x[1 + p]);
  return GpPosterior(std::move(out), std::move(data));
}

// ---------------------------------------------------------------------------
// Serialization.

std::string gp_to_json(const GpPosterior& gp) {
  nlohmann::json j;
  const GpHyperparams& hp = gp.hyperparams();
  j["signal_sd"] = hp.signal_sd;
  j["lengthscales"] = std::vector<double>(
      hp.lengthscales.data(), hp.lengthscales.data() + hp.lengthscales.size());
  if (hp.noise_sd_global)
    j["noise_sd_global"] = *hp.noise_sd_global;
  else
    j["noise_sd_global"] = nullptr;
  j["basis_prior_mean"] = std::vector<double>(
      hp.basis_prior_mean.data(),
      hp.basis_prior_mean.data() + hp.basis_prior_mean.size());
  std::vector<std::vector<double>> bcov;
  for (int i = 0; i < hp.basis_prior_cov.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(hp.basis_prior_cov.cols()));
    for (int k = 0; k < hp.basis_prior_cov.cols(); ++k)
      row[static_cast<std::size_t>(k)] = hp.basis_prior_cov(i, k);
    bcov.push_back(std::move(row));
  }
  j["basis_prior_cov"] = bcov;
  nlohmann::json jdata = nlohmann::json::array();
  for (const Evaluation& e : gp.data()) {
    nlohmann::json je;
    je["theta"] =
        std::vector<double>(e.theta.data(), e.theta.data() + e.theta.size());
    je["y"] = e.y;
    je["noise_sd"] = e.noise_sd;
    jdata.push_back(je);
  }
  j["data"] = jdata;
  return j.dump(2);
}

GpPosterior gp_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  GpHyperparams hp;
  hp.signal_sd = j.at("signal_sd").get<double>();
  const auto ls = j.at("lengthscales").get<std::vector<double>>();
  hp.lengthscales = Eigen::Map<const Vec>(ls.data(), ls.size());
  if (!j.at("noise_sd_global").is_null())
    hp.noise_sd_global = j.at("noise_sd_global").get<double>();
  const auto bm = j.at("basis_prior_mean").get<std::vector<double>>();
  hp.basis_prior_mean = Eigen::Map<const Vec>(bm.data(), bm.size());
  const auto bc = j.at("basis_prior_cov").get<std::vector<std::vector<double>>>();
  hp.basis_prior_cov.resize(bc.size(), bc.size());
  for (size_t i = 0; i < bc.size(); ++i)
    for (size_t k = 0; k < bc[i].size(); ++k)
      hp.basis_prior_cov(i, k) = bc[i][k];
  std::vector<Evaluation> data;
  for (const auto& je : j.at("data")) {
    Evaluation e;
    const auto th = je.at("theta").get<std::vector<double>>();
    e.theta = Eigen::Map<const Vec>(th.data(), th.size());
    e.y = je.at("y").get<double>();
    e.noise_sd = je.at("noise_sd").get<double>();
    data.push_back(std::move(e));
  }
  return GpPosterior(std::move(hp), std::move(data));
}

}  // namespace gpmh
