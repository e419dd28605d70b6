#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "svidr/autodiff.hpp"
#include "svidr/model.hpp"
#include "svidr/rng.hpp"
#include "svidr/variational.hpp"

namespace svidr {

enum class VFamily { local_full, local_bd, classic, classic_joint };
enum class TauMode { point, hyper };

inline std::string vfamily_name(VFamily f) {
  switch (f) {
    case VFamily::local_full:
      return "svi_local";
    case VFamily::local_bd:
      return "svi_local_bd";
    case VFamily::classic:
      return "svi_classic";
    case VFamily::classic_joint:
      return "svi_classic_joint";
  }
  return "?";
}

inline VFamily vfamily_from_name(const std::string& s) {
  if (s == "svi_local" || s == "local_full") return VFamily::local_full;
  if (s == "svi_local_bd" || s == "local_bd") return VFamily::local_bd;
  if (s == "svi_classic" || s == "classic") return VFamily::classic;
  if (s == "svi_classic_joint" || s == "classic_joint") return VFamily::classic_joint;
  throw ConfigError("unknown variational family: " + s);
}

struct FitConfig {
  VFamily family = VFamily::local_full;
  TauMode tau_mode = TauMode::point;
  bool bd_correction = false;
  int epochs = 8000;
  int elbo_samples = 64;  // S in point mode (also hyper stage 1)
  int beta_samples = 32;  // S_beta in hyper stage 2
  int tau_samples = 2;    // S_tau in hyper stage 2
  int stage1_epochs = -1;  // hyper mode; defaults to 3/4 of epochs
  double learning_rate = 0.01;
  double learning_rate_decay = 1.0;  // per-epoch multiplicative step-size decay
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  // Evaluate the entropy term with detached variational parameters
  // ("sticking the landing", Roeder et al. 2017). Same ELBO value, same
  // gradient in expectation, but the gradient noise vanishes as the
  // variational family reaches the target.
  bool stick_the_landing = false;
  bool optimize_tau = true;       // point mode: update tau alongside phi
  Vec<double> tau_init;           // empty -> zeros
  std::vector<int> checkpoint_epochs;

  int resolved_stage1() const {
    return stage1_epochs >= 0 ? stage1_epochs : (epochs * 3) / 4;
  }
};

// Offsets of each variational-parameter piece in the flat vector.
struct ParamLayout {
  VFamily family = VFamily::local_full;
  TauMode tau_mode = TauMode::point;
  bool optimize_tau = true;
  bool bd_correction = false;
  std::size_t n = 0, P = 0, Q = 0, n_blocks = 0, n_tau = 0;
  std::size_t mu_off = 0, l_off = 0, logsigma_off = 0;
  std::size_t corr_beta_off = 0, corr_lower_off = 0, corr_diag_off = 0;
  std::size_t mean_off = 0, chol_off = 0;
  std::size_t tau_off = 0, tau_loc_off = 0, tau_logscale_off = 0;
  std::size_t total = 0;

  std::size_t joint_dim() const { return Q + n_tau; }
};

inline ParamLayout make_layout(const Model& m, VFamily family, TauMode tau_mode,
                               bool optimize_tau, bool bd_correction) {
  const Design& d = m.design;
  ParamLayout lay;
  lay.family = family;
  lay.tau_mode = tau_mode;
  lay.optimize_tau = optimize_tau;
  lay.bd_correction = bd_correction;
  lay.n = d.n;
  lay.P = d.P;
  lay.Q = d.Q;
  lay.n_blocks = d.blocks.size();
  lay.n_tau = d.n_tau;

  std::size_t off = 0;
  switch (family) {
    case VFamily::local_full:
      lay.mu_off = off;
      off += d.n * d.P;
      lay.l_off = off;
      off += d.n * packed_size(d.P);
      break;
    case VFamily::local_bd:
      lay.mu_off = off;
      off += d.n * lay.n_blocks;
      lay.logsigma_off = off;
      off += d.n * lay.n_blocks;
      if (bd_correction) {
        lay.corr_beta_off = off;
        off += d.Q;
        lay.corr_lower_off = off;
        off += d.Q * (d.Q - 1) / 2;
        lay.corr_diag_off = off;
        off += d.Q;
      }
      break;
    case VFamily::classic:
      lay.mean_off = off;
      off += d.Q;
      lay.chol_off = off;
      off += packed_size(d.Q);
      break;
    case VFamily::classic_joint: {
      const std::size_t dim = lay.joint_dim();
      lay.mean_off = off;
      off += dim;
      lay.chol_off = off;
      off += packed_size(dim);
      break;
    }
  }
  if (family != VFamily::classic_joint) {
    if (tau_mode == TauMode::point) {
      if (optimize_tau) {
        lay.tau_off = off;
        off += d.n_tau;
      }
    } else {
      lay.tau_loc_off = off;
      off += d.n_tau;
      lay.tau_logscale_off = off;
      off += d.n_tau;
    }
  }
  lay.total = off;
  return lay;
}

namespace detail {

// crude link-transformed predictor values used to place the initial state
inline Mat<double> crude_eta(const Model& m) {
  const std::size_t n = m.design.n, p_count = m.design.P;
  double mean = 0.0, var = 0.0;
  for (double y : m.y) mean += y;
  mean /= n;
  for (double y : m.y) var += (y - mean) * (y - mean);
  var = std::max(var / std::max<std::size_t>(n - 1, 1), 1e-6);

  Mat<double> eta(n, p_count);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = m.y[i];
    switch (m.spec.family) {
      case FamilyKind::gaussian:
        eta(i, 0) = y;
        eta(i, 1) = 0.5 * std::log(var);
        break;
      case FamilyKind::gaussian_known_sd:
        eta(i, 0) = y;
        break;
      case FamilyKind::bernoulli_logit: {
        const double p = std::clamp(y, 0.05, 0.95);
        eta(i, 0) = std::log(p / (1.0 - p));
        break;
      }
      case FamilyKind::gamma_meanvar:
        eta(i, 0) = std::log(std::max(y, 1e-6));
        eta(i, 1) = std::log(var);
        break;
      case FamilyKind::negbin_meandisp:
        eta(i, 0) = std::log(y + 0.5);
        eta(i, 1) = 0.0;
        break;
    }
  }
  return eta;
}

template <class T>
Vec<T> slice(const Vec<T>& v, std::size_t off, std::size_t len) {
  return Vec<T>(v.begin() + off, v.begin() + off + len);
}

template <class T>
Mat<T> slice_matrix(const Vec<T>& v, std::size_t off, std::size_t rows, std::size_t cols) {
  Mat<T> m(rows, cols);
  std::copy(v.begin() + off, v.begin() + off + rows * cols, m.data().begin());
  return m;
}

template <class T>
GaussianPosteriorT<T> build_family_posterior(const Vec<T>& params, const Vec<T>& tau,
                                             const ParamLayout& lay, const Design& d) {
  switch (lay.family) {
    case VFamily::local_full: {
      Mat<T> mu = slice_matrix(params, lay.mu_off, lay.n, lay.P);
      Mat<T> l = slice_matrix(params, lay.l_off, lay.n, packed_size(lay.P));
      return build_local_full(mu, l, tau, d);
    }
    case VFamily::local_bd: {
      Mat<T> mu = slice_matrix(params, lay.mu_off, lay.n, lay.n_blocks);
      Mat<T> ls = slice_matrix(params, lay.logsigma_off, lay.n, lay.n_blocks);
      if (lay.bd_correction) {
        BDCorrection<T> corr;
        corr.beta_c = slice(params, lay.corr_beta_off, lay.Q);
        corr.strict_lower = slice(params, lay.corr_lower_off, lay.Q * (lay.Q - 1) / 2);
        corr.log_diag = slice(params, lay.corr_diag_off, lay.Q);
        return build_local_bd(mu, ls, tau, d, &corr);
      }
      return build_local_bd(mu, ls, tau, d);
    }
    case VFamily::classic: {
      Vec<T> mean = slice(params, lay.mean_off, lay.Q);
      Vec<T> l = slice(params, lay.chol_off, packed_size(lay.Q));
      return build_classic(mean, l);
    }
    case VFamily::classic_joint: {
      const std::size_t dim = lay.joint_dim();
      Vec<T> mean = slice(params, lay.mean_off, dim);
      Vec<T> l = slice(params, lay.chol_off, packed_size(dim));
      return build_classic(mean, l);
    }
  }
  throw Error("unreachable");
}

inline Vec<double> resolved_tau_init(const FitConfig& cfg, std::size_t n_tau) {
  if (cfg.tau_init.empty()) return Vec<double>(n_tau, 0.0);
  if (cfg.tau_init.size() != n_tau)
    throw ConfigError("tau_init length does not match the number of penalized blocks");
  return cfg.tau_init;
}

}  // namespace detail

inline Vec<double> init_params(const Model& m, const FitConfig& cfg, const ParamLayout& lay) {
  Vec<double> params(lay.total, 0.0);
  const Mat<double> eta0 = detail::crude_eta(m);
  const Design& d = m.design;

  switch (lay.family) {
    case VFamily::local_full:
      for (std::size_t i = 0; i < lay.n; ++i)
        for (std::size_t p = 0; p < lay.P; ++p)
          params[lay.mu_off + i * lay.P + p] = eta0(i, p);
      break;
    case VFamily::local_bd:
      // all signal starts in the intercept block of each parameter
      for (std::size_t b = 0; b < d.blocks.size(); ++b) {
        if (d.blocks[b].col_offset != d.param_offset[d.blocks[b].param]) continue;
        for (std::size_t i = 0; i < lay.n; ++i)
          params[lay.mu_off + i * lay.n_blocks + b] = eta0(i, d.blocks[b].param);
      }
      break;
    case VFamily::classic:
    case VFamily::classic_joint:
      break;  // zero mean, identity precision
  }

  const Vec<double> tau0 = detail::resolved_tau_init(cfg, lay.n_tau);
  if (lay.family != VFamily::classic_joint) {
    if (lay.tau_mode == TauMode::point) {
      if (lay.optimize_tau)
        std::copy(tau0.begin(), tau0.end(), params.begin() + lay.tau_off);
    } else {
      std::copy(tau0.begin(), tau0.end(), params.begin() + lay.tau_loc_off);
      std::fill(params.begin() + lay.tau_logscale_off,
                params.begin() + lay.tau_logscale_off + lay.n_tau, -2.0);
    }
  }
  return params;
}

namespace detail {

// Constant (off-tape) copies of variational parameters for the STL entropy.
template <class T>
GaussianPosteriorT<T> detach(const GaussianPosteriorT<T>& p) {
  GaussianPosteriorT<T> out;
  out.mean.reserve(p.mean.size());
  for (const T& x : p.mean) out.mean.push_back(T(value(x)));
  out.L = LowerTriangular<T>(p.L.dim);
  for (std::size_t k = 0; k < p.L.entries.size(); ++k)
    out.L.entries[k] = T(value(p.L.entries[k]));
  return out;
}

template <class T>
TauVariationalT<T> detach(const TauVariationalT<T>& tv) {
  TauVariationalT<T> out;
  for (const T& x : tv.location) out.location.push_back(T(value(x)));
  for (const T& x : tv.log_scale) out.log_scale.push_back(T(value(x)));
  return out;
}

}  // namespace detail

// Per-sample log ratios ln p - ln q. Shared by the value and gradient paths;
// the epsilon stream is a function of sample_seed only, so evaluations with
// T=double and T=Var under the same seed use common random numbers.
template <class T>
Vec<T> elbo_log_ratios(const Vec<T>& params, const Model& m, const ParamLayout& lay,
                       const FitConfig& cfg, std::uint64_t sample_seed) {
  const Design& d = m.design;
  Rng rng(sample_seed);
  Vec<T> ratios;

  auto draw = [&rng](std::size_t k) {
    Vec<double> eps(k);
    for (auto& e : eps) e = rng.normal();
    return eps;
  };

  if (lay.family == VFamily::classic_joint) {
    const GaussianPosteriorT<T> post = detail::build_family_posterior(params, Vec<T>{}, lay, d);
    const GaussianPosteriorT<T> q_eval =
        cfg.stick_the_landing ? detail::detach(post) : post;
    ratios.reserve(cfg.elbo_samples);
    for (int s = 0; s < cfg.elbo_samples; ++s) {
      const Vec<T> gamma = sample_gaussian(post, draw(lay.joint_dim()));
      const Vec<T> beta(gamma.begin(), gamma.begin() + lay.Q);
      const Vec<T> tau(gamma.begin() + lay.Q, gamma.end());
      ratios.push_back(log_joint(m, beta, tau) - log_density_gaussian(q_eval, gamma));
    }
    return ratios;
  }

  if (lay.tau_mode == TauMode::point) {
    Vec<T> tau;
    if (lay.optimize_tau) {
      tau = detail::slice(params, lay.tau_off, lay.n_tau);
    } else {
      const Vec<double> t0 = detail::resolved_tau_init(cfg, lay.n_tau);
      tau.assign(t0.begin(), t0.end());
    }
    const GaussianPosteriorT<T> post = detail::build_family_posterior(params, tau, lay, d);
    const GaussianPosteriorT<T> q_eval =
        cfg.stick_the_landing ? detail::detach(post) : post;
    const T hyper = log_hyperprior(tau, m.spec.hyper_concentration, m.spec.hyper_rate);
    ratios.reserve(cfg.elbo_samples);
    for (int s = 0; s < cfg.elbo_samples; ++s) {
      const Vec<T> beta = sample_gaussian(post, draw(lay.Q));
      ratios.push_back(log_likelihood(m, beta) + log_prior_beta(beta, tau, d) + hyper -
                       log_density_gaussian(q_eval, beta));
    }
    return ratios;
  }

  // hyper mode: sample tau from its variational normal, then beta given tau
  TauVariationalT<T> tv;
  tv.location = detail::slice(params, lay.tau_loc_off, lay.n_tau);
  tv.log_scale = detail::slice(params, lay.tau_logscale_off, lay.n_tau);
  ratios.reserve(static_cast<std::size_t>(cfg.tau_samples) * cfg.beta_samples);
  const TauVariationalT<T> tv_eval = cfg.stick_the_landing ? detail::detach(tv) : tv;
  for (int st = 0; st < cfg.tau_samples; ++st) {
    const Vec<T> tau = sample_tau(tv, draw(lay.n_tau));
    const GaussianPosteriorT<T> post = detail::build_family_posterior(params, tau, lay, d);
    const GaussianPosteriorT<T> q_eval =
        cfg.stick_the_landing ? detail::detach(post) : post;
    const T lq_tau = log_density_tau(tv_eval, tau);
    for (int sb = 0; sb < cfg.beta_samples; ++sb) {
      const Vec<T> beta = sample_gaussian(post, draw(lay.Q));
      ratios.push_back(log_joint(m, beta, tau) - log_density_gaussian(q_eval, beta) - lq_tau);
    }
  }
  return ratios;
}

inline double elbo_estimate(const Vec<double>& params, const Model& m,
                            const ParamLayout& lay, const FitConfig& cfg,
                            std::uint64_t sample_seed) {
  const Vec<double> r = elbo_log_ratios(params, m, lay, cfg, sample_seed);
  return std::accumulate(r.begin(), r.end(), 0.0) / r.size();
}

// Reparameterized ELBO gradient via the reverse-mode tape. Returns the
// gradient over all free parameters; *value_out and *se_out receive the
// estimate and its Monte Carlo standard error.
inline Vec<double> elbo_gradient(const Vec<double>& params, const Model& m,
                                 const ParamLayout& lay, const FitConfig& cfg,
                                 std::uint64_t sample_seed, double* value_out = nullptr,
                                 double* se_out = nullptr, Tape* tape = nullptr) {
  Tape local_tape;
  Tape& t = tape != nullptr ? *tape : local_tape;
  t.clear();

  Vec<Var> leaves;
  leaves.reserve(params.size());
  for (double p : params) leaves.emplace_back(&t, p);

  const Vec<Var> ratios = elbo_log_ratios(leaves, m, lay, cfg, sample_seed);
  Var elbo = Var(0.0);
  for (const Var& r : ratios) elbo += r;
  elbo = elbo / static_cast<double>(ratios.size());

  if (value_out != nullptr) *value_out = elbo.v;
  if (se_out != nullptr) {
    double var = 0.0;
    for (const Var& r : ratios) var += (r.v - elbo.v) * (r.v - elbo.v);
    var /= ratios.size() > 1 ? (ratios.size() - 1.0) : 1.0;
    *se_out = std::sqrt(var / ratios.size());
  }

  const Vec<double> adj = t.adjoints(elbo.id);
  Vec<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) grad[i] = adj[leaves[i].id];
  return grad;
}

// Adam in ascent form with bias correction.
struct AdamState {
  Vec<double> m1, m2;
  long step = 0;
  double alpha = 0.01, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit AdamState(std::size_t n, double lr = 0.01, double b1 = 0.9, double b2 = 0.999,
                     double e = 1e-8)
      : m1(n, 0.0), m2(n, 0.0), alpha(lr), beta1(b1), beta2(b2), eps(e) {}

  void ascend(Vec<double>& params, const Vec<double>& grad,
              const std::vector<std::uint8_t>* mask = nullptr) {
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (mask != nullptr && (*mask)[i] == 0) continue;
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] += alpha * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
    }
  }
};

struct PosteriorSnapshot {
  GaussianPosterior posterior;  // over beta, or (beta, tau) for classic_joint
  Vec<double> tau;              // point estimate / variational location
};

inline PosteriorSnapshot extract_posterior(const Vec<double>& params, const Model& m,
                                           const ParamLayout& lay, const FitConfig& cfg) {
  PosteriorSnapshot snap;
  if (lay.family == VFamily::classic_joint) {
    snap.posterior = detail::build_family_posterior(params, Vec<double>{}, lay, m.design);
    for (std::size_t k = 0; k < lay.n_tau; ++k)
      snap.tau.push_back(snap.posterior.mean[lay.Q + k]);
    return snap;
  }
  if (lay.tau_mode == TauMode::point)
    snap.tau = lay.optimize_tau ? detail::slice(params, lay.tau_off, lay.n_tau)
                                : detail::resolved_tau_init(cfg, lay.n_tau);
  else
    snap.tau = detail::slice(params, lay.tau_loc_off, lay.n_tau);
  snap.posterior = detail::build_family_posterior(params, snap.tau, lay, m.design);
  return snap;
}

struct FitResult {
  GaussianPosterior posterior;
  std::vector<std::string> labels;
  Vec<double> tau_hat;
  TauVariational tau_variational;
  bool has_tau_variational = false;
  Vec<double> elbo_trace;
  Vec<double> elbo_se_trace;
  int epochs_run = 0;
  bool diverged = false;
  std::uint64_t seed = 0;
  std::map<int, PosteriorSnapshot> checkpoints;
  Vec<double> final_params;
  ParamLayout layout;
};

namespace detail {

// One optimization stage: epochs of Adam ascent on the ELBO gradient.
// Returns false if the objective was nonfinite for 3 consecutive epochs.
inline bool run_stage(Vec<double>& params, const Model& m, const ParamLayout& lay,
                      const FitConfig& cfg, int epochs, int epoch_base, FitResult& result,
                      const std::vector<std::uint8_t>* mask) {
  AdamState adam(params.size(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                 cfg.adam_eps);
  Tape tape;
  int nonfinite_streak = 0;
  for (int t = 0; t < epochs; ++t) {
    const int epoch = epoch_base + t;
    const std::uint64_t sample_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch));
    double value = 0.0, se = 0.0;
    bool finite = true;
    Vec<double> grad;
    try {
      grad = elbo_gradient(params, m, lay, cfg, sample_seed, &value, &se, &tape);
      if (!std::isfinite(value)) finite = false;
      for (double g : grad)
        if (!std::isfinite(g)) {
          finite = false;
          break;
        }
    } catch (const NotPositiveDefinite&) {
      finite = false;
    }
    if (!finite) {
      result.elbo_trace.push_back(std::numeric_limits<double>::quiet_NaN());
      result.elbo_se_trace.push_back(std::numeric_limits<double>::quiet_NaN());
      ++result.epochs_run;
      if (++nonfinite_streak >= 3) return false;
      continue;
    }
    nonfinite_streak = 0;
    adam.ascend(params, grad, mask);
    adam.alpha *= cfg.learning_rate_decay;
    result.elbo_trace.push_back(value);
    result.elbo_se_trace.push_back(se);
    ++result.epochs_run;
    const int done = epoch + 1;
    if (std::find(cfg.checkpoint_epochs.begin(), cfg.checkpoint_epochs.end(), done) !=
        cfg.checkpoint_epochs.end())
      result.checkpoints[done] = extract_posterior(params, m, lay, cfg);
  }
  return true;
}

}  // namespace detail

// Trains the chosen variational family. Point mode is joint Adam ascent over
// (phi, tau); hyper mode first point-estimates tau, then freezes the normal
// locations at the stage-1 estimate and learns only the log scales.
inline FitResult fit(const Model& m, const FitConfig& cfg) {
  FitResult result;
  result.seed = cfg.seed;
  result.labels = m.design.coef_labels;
  if (cfg.family == VFamily::classic_joint)
    for (const auto& tl : m.design.tau_labels) result.labels.push_back(tl);

  const bool two_stage =
      cfg.tau_mode == TauMode::hyper && cfg.family != VFamily::classic_joint && m.design.n_tau > 0;

  if (!two_stage) {
    const TauMode mode =
        (cfg.family == VFamily::classic_joint || m.design.n_tau == 0) ? TauMode::point
                                                                      : cfg.tau_mode;
    ParamLayout lay = make_layout(m, cfg.family, mode, cfg.optimize_tau, cfg.bd_correction);
    Vec<double> params = init_params(m, cfg, lay);
    result.diverged = !detail::run_stage(params, m, lay, cfg, cfg.epochs, 0, result, nullptr);
    const PosteriorSnapshot snap = extract_posterior(params, m, lay, cfg);
    result.posterior = snap.posterior;
    result.tau_hat = snap.tau;
    result.final_params = params;
    result.layout = lay;
    return result;
  }

  // stage 1: point estimate of tau
  const int stage1 = std::min(cfg.resolved_stage1(), cfg.epochs);
  FitConfig cfg1 = cfg;
  cfg1.tau_mode = TauMode::point;
  ParamLayout lay1 = make_layout(m, cfg.family, TauMode::point, true, cfg.bd_correction);
  Vec<double> params1 = init_params(m, cfg1, lay1);
  result.diverged = !detail::run_stage(params1, m, lay1, cfg1, stage1, 0, result, nullptr);
  const Vec<double> tau_hat = detail::slice(params1, lay1.tau_off, lay1.n_tau);

  if (result.diverged) {
    const PosteriorSnapshot snap = extract_posterior(params1, m, lay1, cfg1);
    result.posterior = snap.posterior;
    result.tau_hat = snap.tau;
    result.final_params = params1;
    result.layout = lay1;
    return result;
  }

  // stage 2: normal variational for tau; locations frozen at tau_hat
  ParamLayout lay2 = make_layout(m, cfg.family, TauMode::hyper, true, cfg.bd_correction);
  Vec<double> params2(lay2.total, 0.0);
  std::copy(params1.begin(), params1.begin() + lay1.tau_off, params2.begin());
  std::copy(tau_hat.begin(), tau_hat.end(), params2.begin() + lay2.tau_loc_off);
  std::fill(params2.begin() + lay2.tau_logscale_off,
            params2.begin() + lay2.tau_logscale_off + lay2.n_tau, -2.0);
  std::vector<std::uint8_t> mask(lay2.total, 1);
  for (std::size_t k = 0; k < lay2.n_tau; ++k) mask[lay2.tau_loc_off + k] = 0;

  result.diverged =
      !detail::run_stage(params2, m, lay2, cfg, cfg.epochs - stage1, stage1, result, &mask);

  const PosteriorSnapshot snap = extract_posterior(params2, m, lay2, cfg);
  result.posterior = snap.posterior;
  result.tau_hat = snap.tau;
  result.tau_variational.location = detail::slice(params2, lay2.tau_loc_off, lay2.n_tau);
  result.tau_variational.log_scale = detail::slice(params2, lay2.tau_logscale_off, lay2.n_tau);
  result.has_tau_variational = true;
  result.final_params = params2;
  result.layout = lay2;
  return result;
}

}  // namespace svidr
