#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "svidr/evaluation.hpp"
#include "svidr/linalg.hpp"
#include "svidr/model.hpp"
#include "svidr/rng.hpp"
#include "svidr/variational.hpp"

namespace svidr {

// Desk-scale ground-truth posteriors: exact conjugate solutions, dense grid
// quadrature for tiny targets, and adaptive random-walk Metropolis.
struct ReferencePosterior {
  enum class Kind { analytic, grid, mcmc };
  Kind kind = Kind::analytic;
  SampleSet samples;
  Vec<double> exact_mean;   // analytic and grid kinds
  Mat<double> exact_cov;    // analytic and grid kinds
  double log_normalizer = 0.0;  // grid kind
  double acceptance_rate = 0.0; // mcmc kind
};

using LogTarget = std::function<double(const Vec<double>&)>;

// Exact posterior (X'X/sd^2 + K_tau)^{-1} X'y/sd^2 for a Gaussian response
// with known noise sd; draws sampled exactly from the resulting Gaussian.
inline ReferencePosterior conjugate_gaussian_posterior(const Design& d, const Vec<double>& y,
                                                       double noise_sd, const Vec<double>& tau,
                                                       std::size_t n_draws,
                                                       std::uint64_t seed) {
  if (d.P != 1) throw DimensionMismatch("conjugate posterior: one-parameter family only");
  const Mat<double>& x = d.Xp[0];
  const double inv_var = 1.0 / (noise_sd * noise_sd);

  Mat<double> lambda(d.Q, d.Q);
  Vec<double> rhs(d.Q, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double* row = x.row(i);
    for (std::size_t a = 0; a < d.Q; ++a) {
      if (row[a] == 0.0) continue;
      rhs[a] += inv_var * row[a] * y[i];
      for (std::size_t b = a; b < d.Q; ++b) lambda(a, b) += inv_var * row[a] * row[b];
    }
  }
  for (std::size_t a = 0; a < d.Q; ++a)
    for (std::size_t b = a + 1; b < d.Q; ++b) lambda(b, a) = lambda(a, b);
  detail::add_prior_precision(lambda, tau, d);

  GaussianPosterior post;
  post.L = cholesky(lambda);
  const Vec<double> z = solve_triangular(post.L, rhs, TriSolveMode::lower);
  post.mean = solve_triangular(post.L, z, TriSolveMode::lower_transposed);

  ReferencePosterior ref;
  ref.kind = ReferencePosterior::Kind::analytic;
  ref.exact_mean = post.mean;
  ref.exact_cov = posterior_covariance(post);
  Rng rng(seed);
  ref.samples = draw_samples(post, d.coef_labels, n_draws, rng);
  return ref;
}

inline GaussianPosterior conjugate_gaussian_exact(const Design& d, const Vec<double>& y,
                                                  double noise_sd, const Vec<double>& tau) {
  ReferencePosterior ref = conjugate_gaussian_posterior(d, y, noise_sd, tau, 1, 0);
  GaussianPosterior post;
  post.mean = ref.exact_mean;
  // recover the factor from the covariance inverse is unnecessary; callers
  // needing L should refactor exact_cov themselves. Provide precision factor:
  Mat<double> prec(ref.exact_cov.rows(), ref.exact_cov.cols());
  // invert covariance via Cholesky of covariance
  LowerTriangular<double> lc = cholesky(ref.exact_cov);
  Vec<double> e(prec.rows(), 0.0);
  for (std::size_t j = 0; j < prec.cols(); ++j) {
    e[j] = 1.0;
    Vec<double> w = solve_triangular(lc, e, TriSolveMode::lower);
    Vec<double> col = solve_triangular(lc, w, TriSolveMode::lower_transposed);
    for (std::size_t i = 0; i < prec.rows(); ++i) prec(i, j) = col[i];
    e[j] = 0.0;
  }
  post.L = cholesky(prec);
  return post;
}

// Dense quadrature reference on an axis-aligned box, dimension <= 3.
// resolution = number of grid nodes per dimension. Draws are inverse-CDF
// over grid cells with uniform jitter inside each cell; exact grid moments
// are also reported.
inline ReferencePosterior grid_posterior(const LogTarget& log_target,
                                         const std::vector<std::pair<double, double>>& box,
                                         std::size_t resolution, std::size_t n_draws,
                                         std::uint64_t seed,
                                         const std::vector<std::string>& labels = {}) {
  const std::size_t dim = box.size();
  if (dim == 0 || dim > 3) throw DimensionTooHigh("grid_posterior: dimension must be 1..3");

  std::vector<Vec<double>> axes(dim);
  Vec<double> step(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    step[k] = (box[k].second - box[k].first) / (resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i)
      axes[k].push_back(box[k].first + i * step[k]);
  }

  std::size_t n_cells = 1;
  for (std::size_t k = 0; k < dim; ++k) n_cells *= resolution;

  Vec<double> logw(n_cells);
  double max_logw = -std::numeric_limits<double>::infinity();
  Vec<double> point(dim);
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::size_t rest = c;
    for (std::size_t k = 0; k < dim; ++k) {
      point[k] = axes[k][rest % resolution];
      rest /= resolution;
    }
    logw[c] = log_target(point);
    max_logw = std::max(max_logw, logw[c]);
  }

  Vec<double> w(n_cells);
  double total = 0.0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    w[c] = std::exp(logw[c] - max_logw);
    total += w[c];
  }
  double cell_volume = 1.0;
  for (std::size_t k = 0; k < dim; ++k) cell_volume *= step[k];

  ReferencePosterior ref;
  ref.kind = ReferencePosterior::Kind::grid;
  ref.log_normalizer = max_logw + std::log(total * cell_volume);

  // exact grid moments
  ref.exact_mean.assign(dim, 0.0);
  ref.exact_cov = Mat<double>(dim, dim);
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::size_t rest = c;
    for (std::size_t k = 0; k < dim; ++k) {
      point[k] = axes[k][rest % resolution];
      rest /= resolution;
    }
    for (std::size_t k = 0; k < dim; ++k) ref.exact_mean[k] += w[c] / total * point[k];
  }
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::size_t rest = c;
    for (std::size_t k = 0; k < dim; ++k) {
      point[k] = axes[k][rest % resolution];
      rest /= resolution;
    }
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b)
        ref.exact_cov(a, b) +=
            w[c] / total * (point[a] - ref.exact_mean[a]) * (point[b] - ref.exact_mean[b]);
  }

  // inverse-CDF draws over cells
  Vec<double> cdf(n_cells);
  double acc = 0.0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    acc += w[c] / total;
    cdf[c] = acc;
  }
  Rng rng(seed);
  ref.samples.labels = labels;
  if (ref.samples.labels.empty())
    for (std::size_t k = 0; k < dim; ++k)
      ref.samples.labels.push_back("x" + std::to_string(k + 1));
  ref.samples.draws = Mat<double>(n_draws, dim);
  for (std::size_t s = 0; s < n_draws; ++s) {
    const double u = rng.uniform();
    const std::size_t c =
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    std::size_t rest = std::min(c, n_cells - 1);
    for (std::size_t k = 0; k < dim; ++k) {
      const double center = axes[k][rest % resolution];
      rest /= resolution;
      const double v = center + (rng.uniform() - 0.5) * step[k];
      ref.samples.draws(s, k) = std::clamp(v, box[k].first, box[k].second);
    }
  }
  return ref;
}

struct RwmhConfig {
  std::size_t n_draws = 50000;
  std::size_t n_warmup = 10000;
  std::size_t thin = 1;
  double target_acceptance_1d = 0.44;
  double target_acceptance_nd = 0.234;
};

// Adaptive random-walk Metropolis with a joint Gaussian proposal. During
// warmup the proposal covariance tracks the running chain covariance and the
// global scale is tuned toward the target acceptance rate; both are frozen
// afterwards so the post-warmup chain has the exact stationary target.
inline ReferencePosterior rwmh_sample(const LogTarget& log_target, const Vec<double>& init,
                                      const RwmhConfig& cfg, std::uint64_t seed,
                                      const std::vector<std::string>& labels = {}) {
  const std::size_t dim = init.size();
  Rng rng(seed);

  Vec<double> state = init;
  double state_lp = log_target(state);
  if (!std::isfinite(state_lp))
    throw NonFiniteValue("rwmh_sample: log target not finite at init");

  const double target_acc = dim == 1 ? cfg.target_acceptance_1d : cfg.target_acceptance_nd;
  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(dim)));

  // running moments for covariance adaptation
  Vec<double> run_mean(dim, 0.0);
  Mat<double> run_cov(dim, dim);
  std::size_t run_n = 0;
  LowerTriangular<double> prop_chol = LowerTriangular<double>::identity(dim);

  auto refresh_chol = [&]() {
    if (run_n < 2 * dim + 10) return;
    Mat<double> c = run_cov;
    const double ridge = 1e-8;
    for (std::size_t i = 0; i < dim; ++i)
      c(i, i) = c(i, i) / (run_n - 1) + ridge;
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        if (i != j) c(i, j) /= (run_n - 1);
    try {
      prop_chol = cholesky(c);
    } catch (const NotPositiveDefinite&) {
      // keep previous proposal
    }
  };

  Vec<double> z(dim), prop(dim);
  std::size_t kept = 0, accepted_post = 0, attempted_post = 0;

  ReferencePosterior ref;
  ref.kind = ReferencePosterior::Kind::mcmc;
  ref.samples.labels = labels;
  if (ref.samples.labels.empty())
    for (std::size_t k = 0; k < dim; ++k)
      ref.samples.labels.push_back("x" + std::to_string(k + 1));
  ref.samples.draws = Mat<double>(cfg.n_draws, dim);

  const std::size_t total_iters = cfg.n_warmup + cfg.n_draws * cfg.thin;
  for (std::size_t t = 0; t < total_iters; ++t) {
    const bool warmup = t < cfg.n_warmup;
    for (auto& v : z) v = rng.normal();
    const double s = std::exp(log_scale);
    for (std::size_t i = 0; i < dim; ++i) {
      double step = 0.0;
      for (std::size_t j = 0; j <= i; ++j) step += prop_chol.at(i, j) * z[j];
      prop[i] = state[i] + s * step;
    }
    const double prop_lp = log_target(prop);
    const bool accept =
        std::isfinite(prop_lp) && std::log(rng.uniform()) < prop_lp - state_lp;
    if (accept) {
      state = prop;
      state_lp = prop_lp;
    }

    if (warmup) {
      // Robbins-Monro scale tuning
      const double rate = 1.0 / std::sqrt(static_cast<double>(t + 1));
      log_scale += rate * ((accept ? 1.0 : 0.0) - target_acc);
      // Welford covariance update
      ++run_n;
      Vec<double> delta(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        delta[i] = state[i] - run_mean[i];
        run_mean[i] += delta[i] / run_n;
      }
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          run_cov(i, j) += delta[i] * (state[j] - run_mean[j]);
      if ((t + 1) % 200 == 0) refresh_chol();
    } else {
      ++attempted_post;
      if (accept) ++accepted_post;
      const std::size_t since = t - cfg.n_warmup;
      if ((since + 1) % cfg.thin == 0 && kept < cfg.n_draws) {
        std::copy(state.begin(), state.end(), ref.samples.draws.row(kept));
        ++kept;
      }
    }
  }

  ref.acceptance_rate = attempted_post > 0
                            ? static_cast<double>(accepted_post) / attempted_post
                            : 0.0;
  if (ref.acceptance_rate < 0.01)
    throw StuckChain("rwmh_sample: post-warmup acceptance below 1%");
  return ref;
}

// Log joint in beta with tau held fixed (the beta-comparison target).
inline LogTarget beta_log_target(const Model& m, const Vec<double>& tau) {
  return [&m, tau](const Vec<double>& beta) {
    return log_likelihood(m, beta) + log_prior_beta(beta, tau, m.design);
  };
}

// Log joint over (beta, tau) stacked, for joint tau comparisons.
inline LogTarget joint_log_target(const Model& m) {
  return [&m](const Vec<double>& v) {
    const Vec<double> beta(v.begin(), v.begin() + m.design.Q);
    const Vec<double> tau(v.begin() + m.design.Q, v.end());
    return log_joint(m, beta, tau);
  };
}

}  // namespace svidr
