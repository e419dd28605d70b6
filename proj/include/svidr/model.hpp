#pragma once

#include <cmath>
#include <vector>

#include "svidr/basis.hpp"
#include "svidr/family.hpp"
#include "svidr/linalg.hpp"

namespace svidr {

// Response family + assembled design + data: the target every fitter and
// reference sampler works against.
struct Model {
  ModelSpec spec;
  Design design;
  Vec<double> y;
};

inline Model build_model(const ModelSpec& spec, const Dataset& data) {
  Model m;
  m.spec = spec;
  m.design = assemble_design(spec, data);
  m.y = data.at("y");
  for (double v : m.y) check_support(spec.family, v);
  return m;
}

// eta(i, p) = x_{i,p} . beta_p
template <class T>
Mat<T> predictor_matrix(const Design& d, const Vec<T>& beta) {
  if (beta.size() != d.Q) throw DimensionMismatch("predictor_matrix: beta length");
  Mat<T> eta(d.n, d.P);
  for (std::size_t p = 0; p < d.P; ++p) {
    const Mat<double>& xp = d.Xp[p];
    const std::size_t off = d.param_offset[p];
    for (std::size_t i = 0; i < d.n; ++i) {
      T s = T(0);
      const double* row = xp.row(i);
      for (std::size_t j = 0; j < xp.cols(); ++j) s += row[j] * beta[off + j];
      eta(i, p) = s;
    }
  }
  return eta;
}

template <class T>
T log_likelihood(const Model& m, const Mat<T>& eta) {
  if (eta.rows() != m.design.n || eta.cols() != m.design.P)
    throw DimensionMismatch("log_likelihood: eta shape");
  T total = T(0);
  std::vector<T> row(m.design.P);
  for (std::size_t i = 0; i < m.design.n; ++i) {
    for (std::size_t p = 0; p < m.design.P; ++p) row[p] = eta(i, p);
    total += log_pdf_one(m.spec.family, m.y[i], row.data(), m.spec.known_sd);
  }
  return total;
}

template <class T>
T log_likelihood(const Model& m, const Vec<T>& beta) {
  return log_likelihood(m, predictor_matrix(m.design, beta));
}

// sum over penalized blocks of (rank/2) tau - (exp(tau)/2) beta' K beta.
// The rank-scaled normalizer is kept so gradients in tau have the right
// fixed point; unpenalized blocks contribute a flat prior.
template <class T>
T log_prior_beta(const Vec<T>& beta, const Vec<T>& tau, const Design& d) {
  using std::exp;
  T total = T(0);
  for (const auto& b : d.blocks) {
    if (b.tau_index < 0) continue;
    const std::size_t q = b.K.rows();
    T quad = T(0);
    for (std::size_t i = 0; i < q; ++i) {
      const T bi = beta[b.col_offset + i];
      for (std::size_t j = 0; j < q; ++j)
        quad += bi * b.K(i, j) * beta[b.col_offset + j];
    }
    const T& t = tau[b.tau_index];
    total += 0.5 * static_cast<double>(b.penalty_rank) * t - 0.5 * exp(t) * quad;
  }
  return total;
}

// Log-Gamma prior density on each tau_k = log(lambda^2_k), including the
// normalizing constant.
template <class T>
T log_hyperprior(const Vec<T>& tau, double concentration, double rate) {
  using std::exp;
  T total = T(0);
  for (const auto& t : tau) total += concentration * t - rate * exp(t);
  const double log_norm = std::lgamma(concentration) - concentration * std::log(rate);
  return total - static_cast<double>(tau.size()) * log_norm;
}

template <class T>
T log_joint(const Model& m, const Vec<T>& beta, const Vec<T>& tau) {
  return log_likelihood(m, beta) + log_prior_beta(beta, tau, m.design) +
         log_hyperprior(tau, m.spec.hyper_concentration, m.spec.hyper_rate);
}

}  // namespace svidr
