#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "svidr/basis.hpp"
#include "svidr/linalg.hpp"
#include "svidr/rng.hpp"
#include "svidr/variational.hpp"

namespace svidr {

// Posterior draws: rows are draws, columns are labelled coordinates.
struct SampleSet {
  Mat<double> draws;
  std::vector<std::string> labels;

  std::size_t size() const { return draws.rows(); }
  std::size_t dim() const { return draws.cols(); }
};

inline SampleSet draw_samples(const GaussianPosterior& post,
                              const std::vector<std::string>& labels, std::size_t n_draws,
                              Rng& rng) {
  const std::size_t q = post.L.dim;
  SampleSet s;
  s.labels = labels;
  s.draws = Mat<double>(n_draws, q);
  Vec<double> eps(q);
  for (std::size_t k = 0; k < n_draws; ++k) {
    for (auto& e : eps) e = rng.normal();
    const Vec<double> b = sample_gaussian(post, eps);
    std::copy(b.begin(), b.end(), s.draws.row(k));
  }
  return s;
}

// Keep a seeded without-replacement subsample of m rows.
inline SampleSet subsample(const SampleSet& s, std::size_t m, std::uint64_t seed) {
  if (m >= s.size()) return s;
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i)
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  SampleSet out;
  out.labels = s.labels;
  out.draws = Mat<double>(m, s.dim());
  for (std::size_t i = 0; i < m; ++i)
    std::copy(s.draws.row(idx[i]), s.draws.row(idx[i]) + s.dim(), out.draws.row(i));
  return out;
}

struct W1Report {
  Vec<double> per_coordinate;
  double aggregate = 0.0;  // mean over coordinates
};

// Exact one-dimensional W1 per coordinate: mean absolute difference between
// sorted equal-size samples. Unequal sizes are reconciled by a seeded
// subsample of the larger set.
inline W1Report wasserstein1_marginals(const SampleSet& a_in, const SampleSet& b_in,
                                       std::uint64_t subsample_seed = 0) {
  if (a_in.labels != b_in.labels)
    throw LabelMismatch("wasserstein1_marginals: coordinate labels differ");
  const std::size_t m = std::min(a_in.size(), b_in.size());
  const SampleSet a = subsample(a_in, m, derive_seed(subsample_seed, 1));
  const SampleSet b = subsample(b_in, m, derive_seed(subsample_seed, 2));

  W1Report report;
  report.per_coordinate.resize(a.dim());
  Vec<double> xa(m), xb(m);
  for (std::size_t j = 0; j < a.dim(); ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      xa[k] = a.draws(k, j);
      xb[k] = b.draws(k, j);
    }
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += std::fabs(xa[k] - xb[k]);
    report.per_coordinate[j] = s / m;
  }
  report.aggregate =
      std::accumulate(report.per_coordinate.begin(), report.per_coordinate.end(), 0.0) /
      report.per_coordinate.size();
  return report;
}

struct CoordinateSummary {
  std::string label;
  double mean = 0.0, sd = 0.0;
  double q025 = 0.0, q50 = 0.0, q975 = 0.0;
};

inline constexpr double kNormalQ975 = 1.959963984540054;

inline double empirical_quantile(Vec<double> sorted, double q) {
  const double h = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

inline std::vector<CoordinateSummary> posterior_summary(const SampleSet& s) {
  std::vector<CoordinateSummary> out(s.dim());
  Vec<double> col(s.size());
  for (std::size_t j = 0; j < s.dim(); ++j) {
    for (std::size_t k = 0; k < s.size(); ++k) col[k] = s.draws(k, j);
    CoordinateSummary& c = out[j];
    c.label = s.labels[j];
    c.mean = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
    double var = 0.0;
    for (double v : col) var += (v - c.mean) * (v - c.mean);
    c.sd = std::sqrt(var / (col.size() - 1));
    std::sort(col.begin(), col.end());
    c.q025 = empirical_quantile(col, 0.025);
    c.q50 = empirical_quantile(col, 0.5);
    c.q975 = empirical_quantile(col, 0.975);
  }
  return out;
}

// Full covariance (L L^T)^{-1} by triangular solves against unit vectors.
inline Mat<double> posterior_covariance(const GaussianPosterior& post) {
  const std::size_t q = post.L.dim;
  Mat<double> cov(q, q);
  Vec<double> e(q, 0.0);
  for (std::size_t j = 0; j < q; ++j) {
    e[j] = 1.0;
    const Vec<double> w = solve_triangular(post.L, e, TriSolveMode::lower);
    const Vec<double> col = solve_triangular(post.L, w, TriSolveMode::lower_transposed);
    for (std::size_t i = 0; i < q; ++i) cov(i, j) = col[i];
    e[j] = 0.0;
  }
  return cov;
}

inline std::vector<CoordinateSummary> posterior_summary(
    const GaussianPosterior& post, const std::vector<std::string>& labels) {
  const Mat<double> cov = posterior_covariance(post);
  std::vector<CoordinateSummary> out(post.L.dim);
  for (std::size_t j = 0; j < post.L.dim; ++j) {
    CoordinateSummary& c = out[j];
    c.label = labels[j];
    c.mean = post.mean[j];
    c.sd = std::sqrt(cov(j, j));
    c.q025 = c.mean - kNormalQ975 * c.sd;
    c.q50 = c.mean;
    c.q975 = c.mean + kNormalQ975 * c.sd;
  }
  return out;
}

struct EffectCurve {
  Vec<double> grid;
  Vec<double> mean;
  Vec<double> lower, upper;
  double level = 0.95;
};

namespace detail {
inline Mat<double> grid_design(const DesignBlock& block, const Vec<double>& grid) {
  if (!block.is_spline) throw Error("effect_curve: block is not a spline term");
  for (double g : grid)
    if (g < block.basis.x_min || g > block.basis.x_max)
      throw GridOutOfRange("effect_curve: grid point outside training range");
  return mat_ab(block.basis.eval(grid), block.Zb);
}
}  // namespace detail

// Posterior effect curve f(grid) with pointwise credible band, from the
// exact Gaussian posterior.
inline EffectCurve effect_curve(const GaussianPosterior& post, const DesignBlock& block,
                                const Vec<double>& grid, double level = 0.95) {
  const Mat<double> xg = detail::grid_design(block, grid);
  const Mat<double> cov = posterior_covariance(post);
  const std::size_t qb = xg.cols();

  EffectCurve curve;
  curve.grid = grid;
  curve.level = level;
  const double z =
      boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - (1.0 - level) / 2.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double mean = 0.0, var = 0.0;
    for (std::size_t a = 0; a < qb; ++a) {
      mean += xg(g, a) * post.mean[block.col_offset + a];
      for (std::size_t b = 0; b < qb; ++b)
        var += xg(g, a) * cov(block.col_offset + a, block.col_offset + b) * xg(g, b);
    }
    curve.mean.push_back(mean);
    curve.lower.push_back(mean - z * std::sqrt(std::max(var, 0.0)));
    curve.upper.push_back(mean + z * std::sqrt(std::max(var, 0.0)));
  }
  return curve;
}

// Same from posterior draws; band from per-point empirical quantiles.
inline EffectCurve effect_curve(const SampleSet& samples, const DesignBlock& block,
                                const Vec<double>& grid, double level = 0.95) {
  const Mat<double> xg = detail::grid_design(block, grid);
  const std::size_t qb = xg.cols();
  EffectCurve curve;
  curve.grid = grid;
  curve.level = level;
  Vec<double> fs(samples.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t k = 0; k < samples.size(); ++k) {
      double f = 0.0;
      for (std::size_t a = 0; a < qb; ++a)
        f += xg(g, a) * samples.draws(k, block.col_offset + a);
      fs[k] = f;
    }
    curve.mean.push_back(std::accumulate(fs.begin(), fs.end(), 0.0) / fs.size());
    Vec<double> sorted = fs;
    std::sort(sorted.begin(), sorted.end());
    curve.lower.push_back(empirical_quantile(sorted, (1.0 - level) / 2.0));
    curve.upper.push_back(empirical_quantile(sorted, 1.0 - (1.0 - level) / 2.0));
  }
  return curve;
}

}  // namespace svidr
