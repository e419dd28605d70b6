#pragma once

#include <cmath>
#include <vector>

#include "svidr/basis.hpp"
#include "svidr/linalg.hpp"
#include "svidr/rng.hpp"

namespace svidr {

// Gaussian with mean beta_tilde and precision Lambda = L L^T.
template <class T>
struct GaussianPosteriorT {
  Vec<T> mean;
  LowerTriangular<T> L;
};
using GaussianPosterior = GaussianPosteriorT<double>;

namespace detail {
// Lambda += exp(tau_b) * K_b for every penalized block; unpenalized blocks
// have zero prior precision.
template <class T>
void add_prior_precision(Mat<T>& lambda, const Vec<T>& tau, const Design& d) {
  using std::exp;
  for (const auto& b : d.blocks) {
    if (b.tau_index < 0) continue;
    const T lam2 = exp(tau[b.tau_index]);
    for (std::size_t i = 0; i < b.K.rows(); ++i)
      for (std::size_t j = 0; j < b.K.cols(); ++j) {
        if (b.K(i, j) == 0.0) continue;
        lambda(b.col_offset + i, b.col_offset + j) += lam2 * b.K(i, j);
      }
  }
}
}  // namespace detail

// Local-full family: per observation i a P-dimensional Gaussian with mean
// mu_i and precision factor L_i (log-Cholesky parametrized). Assembles
//   Lambda = sum_i X_i^T L_i L_i^T X_i + K_tau
//   beta_tilde = Lambda^{-1} sum_i X_i^T L_i L_i^T mu_i
// where X_i is the P x Q block row of the design.
template <class T>
GaussianPosteriorT<T> build_local_full(const Mat<T>& mu, const Mat<T>& l,
                                       const Vec<T>& tau, const Design& d) {
  const std::size_t n = d.n, p_count = d.P, q = d.Q;
  if (mu.rows() != n || mu.cols() != p_count || l.rows() != n ||
      l.cols() != packed_size(p_count))
    throw DimensionMismatch("build_local_full: state shape");

  Mat<T> lambda(q, q);
  Vec<T> rhs(q, T(0));
  Mat<T> m(p_count, p_count);  // M_i = L_i L_i^T, reused per observation

  for (std::size_t i = 0; i < n; ++i) {
    Vec<T> lrow(l.row(i), l.row(i) + l.cols());
    const LowerTriangular<T> li = log_chol_expand(lrow, p_count);
    for (std::size_t a = 0; a < p_count; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        T s = T(0);
        for (std::size_t k = 0; k <= b; ++k) s += li.at(a, k) * li.at(b, k);
        m(a, b) = s;
        m(b, a) = s;
      }

    for (std::size_t a = 0; a < p_count; ++a) {
      const double* xa = d.Xp[a].row(i);
      const std::size_t qa = d.Xp[a].cols();
      const std::size_t offa = d.param_offset[a];
      // rhs contribution: (sum_b M(a,b) mu_b) * x_{i,a}
      T c = T(0);
      for (std::size_t b = 0; b < p_count; ++b) c += m(a, b) * mu(i, b);
      for (std::size_t ja = 0; ja < qa; ++ja) {
        if (xa[ja] == 0.0) continue;
        rhs[offa + ja] += c * xa[ja];
      }
      // precision contribution: M(a,b) x_{i,a} x_{i,b}^T, upper triangle over (a,b)
      for (std::size_t b = a; b < p_count; ++b) {
        const double* xb = d.Xp[b].row(i);
        const std::size_t qb = d.Xp[b].cols();
        const std::size_t offb = d.param_offset[b];
        const T& w = m(a, b);
        for (std::size_t ja = 0; ja < qa; ++ja) {
          if (xa[ja] == 0.0) continue;
          const T wx = w * xa[ja];
          const std::size_t jb0 = (a == b) ? ja : std::size_t{0};
          for (std::size_t jb = jb0; jb < qb; ++jb) {
            if (xb[jb] == 0.0) continue;
            lambda(offa + ja, offb + jb) += wx * xb[jb];
          }
        }
      }
    }
  }
  // mirror the upper triangle filled above
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i + 1; j < q; ++j) lambda(j, i) = lambda(i, j);

  detail::add_prior_precision(lambda, tau, d);

  GaussianPosteriorT<T> post;
  post.L = cholesky(lambda);
  const Vec<T> z = solve_triangular(post.L, rhs, TriSolveMode::lower);
  post.mean = solve_triangular(post.L, z, TriSolveMode::lower_transposed);
  return post;
}

// Optional correction for the block-diagonal family. Strict-lower entries
// add linearly to the stacked factor; the diagonal is corrected on the log
// scale so the factor keeps a positive diagonal for any parameter value.
template <class T>
struct BDCorrection {
  Vec<T> beta_c;        // Q
  Vec<T> strict_lower;  // Q(Q-1)/2, packed row-major
  Vec<T> log_diag;      // Q
};

// Block-diagonal family: per observation and term block a scalar Gaussian
// N(mu_{i,b}, sigma^2_{i,b}) on the smooth-term value, combined per block:
//   Lambda_b = sum_i x_{i,b} x_{i,b}^T / sigma^2_{i,b} + exp(tau_b) K_b.
template <class T>
GaussianPosteriorT<T> build_local_bd(const Mat<T>& mu, const Mat<T>& log_sigma,
                                     const Vec<T>& tau, const Design& d,
                                     const BDCorrection<T>* correction = nullptr) {
  using std::exp;
  using std::log;
  const std::size_t n = d.n, q = d.Q;
  const std::size_t n_blocks = d.blocks.size();
  if (mu.rows() != n || mu.cols() != n_blocks || log_sigma.rows() != n ||
      log_sigma.cols() != n_blocks)
    throw DimensionMismatch("build_local_bd: state shape");

  GaussianPosteriorT<T> post;
  post.mean.assign(q, T(0));
  post.L = LowerTriangular<T>(q);

  for (std::size_t bi = 0; bi < n_blocks; ++bi) {
    const auto& b = d.blocks[bi];
    const std::size_t qb = b.X.cols();
    Mat<T> lam(qb, qb);
    Vec<T> rhs(qb, T(0));
    for (std::size_t i = 0; i < n; ++i) {
      const T inv_var = exp(-2.0 * log_sigma(i, bi));
      const double* x = b.X.row(i);
      for (std::size_t a = 0; a < qb; ++a) {
        if (x[a] == 0.0) continue;
        const T wx = inv_var * x[a];
        rhs[a] += mu(i, bi) * wx;
        for (std::size_t c = a; c < qb; ++c) lam(a, c) += wx * x[c];
      }
    }
    for (std::size_t a = 0; a < qb; ++a)
      for (std::size_t c = a + 1; c < qb; ++c) lam(c, a) = lam(a, c);
    if (b.tau_index >= 0) {
      const T lam2 = exp(tau[b.tau_index]);
      for (std::size_t a = 0; a < qb; ++a)
        for (std::size_t c = 0; c < qb; ++c)
          if (b.K(a, c) != 0.0) lam(a, c) += lam2 * b.K(a, c);
    }
    LowerTriangular<T> lb = cholesky(lam);
    Vec<T> z = solve_triangular(lb, rhs, TriSolveMode::lower);
    Vec<T> mb = solve_triangular(lb, z, TriSolveMode::lower_transposed);
    for (std::size_t a = 0; a < qb; ++a) {
      post.mean[b.col_offset + a] = mb[a];
      for (std::size_t c = 0; c <= a; ++c)
        post.L.at(b.col_offset + a, b.col_offset + c) = lb.at(a, c);
    }
  }

  if (correction != nullptr) {
    if (correction->beta_c.size() != q || correction->log_diag.size() != q ||
        correction->strict_lower.size() != q * (q - 1) / 2)
      throw DimensionMismatch("build_local_bd: correction shape");
    std::size_t k = 0;
    for (std::size_t i = 0; i < q; ++i) {
      post.mean[i] += correction->beta_c[i];
      for (std::size_t j = 0; j < i; ++j)
        post.L.at(i, j) += correction->strict_lower[k++];
      post.L.at(i, i) = post.L.at(i, i) * exp(correction->log_diag[i]);
    }
  }
  return post;
}

// Classic family: free mean and log-Cholesky precision factor.
template <class T>
GaussianPosteriorT<T> build_classic(const Vec<T>& beta_tilde, const Vec<T>& l) {
  GaussianPosteriorT<T> post;
  post.mean = beta_tilde;
  post.L = log_chol_expand(l, beta_tilde.size());
  return post;
}

// beta = beta_tilde + L^{-T} eps
template <class T>
Vec<T> sample_gaussian(const GaussianPosteriorT<T>& post, const Vec<double>& eps) {
  if (eps.size() != post.L.dim) throw DimensionMismatch("sample_gaussian: eps length");
  Vec<T> e(eps.begin(), eps.end());
  Vec<T> shift = solve_triangular(post.L, e, TriSolveMode::lower_transposed);
  for (std::size_t i = 0; i < shift.size(); ++i) shift[i] += post.mean[i];
  return shift;
}

// exact Gaussian log-density: sum_k ln L_kk - Q/2 ln 2pi - 1/2 |L^T (b - mean)|^2
template <class T>
T log_density_gaussian(const GaussianPosteriorT<T>& post, const Vec<T>& beta) {
  using std::log;
  const std::size_t q = post.L.dim;
  if (beta.size() != q) throw DimensionMismatch("log_density_gaussian: beta length");
  T out = T(-0.5 * kLogTwoPi * static_cast<double>(q));
  for (std::size_t k = 0; k < q; ++k) out += log(post.L.at(k, k));
  for (std::size_t j = 0; j < q; ++j) {
    T u = T(0);
    for (std::size_t i = j; i < q; ++i)
      u += post.L.at(i, j) * (beta[i] - post.mean[i]);
    out -= 0.5 * u * u;
  }
  return out;
}

// Independent normal variational family on the tau = log lambda^2 scale
// (a log-normal on lambda^2).
template <class T>
struct TauVariationalT {
  Vec<T> location;
  Vec<T> log_scale;
};
using TauVariational = TauVariationalT<double>;

template <class T>
Vec<T> sample_tau(const TauVariationalT<T>& tv, const Vec<double>& eps) {
  using std::exp;
  if (eps.size() != tv.location.size()) throw DimensionMismatch("sample_tau: eps length");
  Vec<T> tau(tv.location.size());
  for (std::size_t k = 0; k < tau.size(); ++k)
    tau[k] = tv.location[k] + exp(tv.log_scale[k]) * eps[k];
  return tau;
}

template <class T>
T log_density_tau(const TauVariationalT<T>& tv, const Vec<T>& tau) {
  using std::exp;
  T out = T(-0.5 * kLogTwoPi * static_cast<double>(tau.size()));
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const T r = (tau[k] - tv.location[k]) * exp(-tv.log_scale[k]);
    out -= tv.log_scale[k] + 0.5 * r * r;
  }
  return out;
}

}  // namespace svidr
