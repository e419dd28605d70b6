#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "svidr/evaluation.hpp"
#include "svidr/reference.hpp"
#include "svidr/rng.hpp"

using namespace svidr;

namespace {

Design plain_design(const Mat<double>& x) {
  Design d;
  d.n = x.rows();
  d.P = 1;
  d.Q = x.cols();
  d.n_tau = 0;
  d.Xp = {x};
  d.param_offset = {0};
  DesignBlock b;
  b.X = x;
  b.K = Mat<double>(x.cols(), x.cols());
  b.penalty_rank = 0;
  b.tau_index = -1;  // unpenalized
  b.col_offset = 0;
  d.blocks.push_back(b);
  for (std::size_t j = 0; j < d.Q; ++j) d.coef_labels.push_back("b" + std::to_string(j));
  return d;
}

}  // namespace

TEST_CASE("conjugate posterior with flat prior and orthonormal design") {
  // columns of X orthonormal, sigma = 1, K = 0 -> mean = X'y
  const std::size_t n = 4;
  Mat<double> x(n, 2);
  x(0, 0) = 1; x(1, 0) = 0; x(2, 0) = 0; x(3, 0) = 0;
  x(0, 1) = 0; x(1, 1) = 1; x(2, 1) = 0; x(3, 1) = 0;
  Design d = plain_design(x);
  Vec<double> y = {2.0, -3.0, 1.0, 4.0};
  auto ref = conjugate_gaussian_posterior(d, y, 1.0, {}, 10, 1);
  CHECK(ref.exact_mean[0] == Catch::Approx(2.0));
  CHECK(ref.exact_mean[1] == Catch::Approx(-3.0));

  Vec<double> zero(n, 0.0);
  auto ref0 = conjugate_gaussian_posterior(d, zero, 1.0, {}, 10, 1);
  for (double v : ref0.exact_mean) CHECK(std::fabs(v) < 1e-14);
}

TEST_CASE("conjugate posterior draws have the exact moments") {
  Rng rng(8);
  Mat<double> x(50, 3);
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal();
  Design d = plain_design(x);
  d.blocks[0].K = Mat<double>::identity(3);
  d.blocks[0].penalty_rank = 3;
  d.blocks[0].tau_index = 0;
  d.n_tau = 1;
  Vec<double> y(50);
  for (auto& v : y) v = rng.normal();
  auto ref = conjugate_gaussian_posterior(d, y, 0.7, {0.2}, 50000, 3);
  REQUIRE(ref.samples.size() == 50000);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0;
    for (std::size_t k = 0; k < ref.samples.size(); ++k) mean += ref.samples.draws(k, j);
    mean /= ref.samples.size();
    const double se = std::sqrt(ref.exact_cov(j, j) / ref.samples.size());
    CHECK(std::fabs(mean - ref.exact_mean[j]) < 5 * se);
  }
}

TEST_CASE("grid posterior recovers standard normal moments") {
  auto target = [](const Vec<double>& v) { return -0.5 * v[0] * v[0]; };
  auto ref = grid_posterior(target, {{-8.0, 8.0}}, 2001, 2000, 5);
  CHECK(std::fabs(ref.exact_mean[0]) <= 1e-6);
  CHECK(std::fabs(std::sqrt(ref.exact_cov(0, 0)) - 1.0) <= 1e-5);
}

TEST_CASE("grid posterior uniform target gives uniform draws") {
  auto flat = [](const Vec<double>&) { return 0.0; };
  auto ref = grid_posterior(flat, {{0.0, 1.0}}, 401, 20000, 11);
  // chi-square over 10 equal bins at the 1% level (critical value 21.67, df 9)
  Vec<double> counts(10, 0.0);
  for (std::size_t k = 0; k < ref.samples.size(); ++k) {
    const double v = ref.samples.draws(k, 0);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    counts[std::min<std::size_t>(9, static_cast<std::size_t>(v * 10))] += 1;
  }
  double chi2 = 0;
  const double expect = 2000.0;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 21.67);
}

TEST_CASE("grid posterior recovers 2-D correlation") {
  const double rho = 0.6;
  auto target = [&](const Vec<double>& v) {
    return -0.5 * (v[0] * v[0] - 2 * rho * v[0] * v[1] + v[1] * v[1]) / (1 - rho * rho);
  };
  auto ref = grid_posterior(target, {{-6.0, 6.0}, {-6.0, 6.0}}, 201, 1000, 13);
  const double corr =
      ref.exact_cov(0, 1) / std::sqrt(ref.exact_cov(0, 0) * ref.exact_cov(1, 1));
  CHECK(std::fabs(corr - rho) < 0.01);

  CHECK_THROWS_AS(grid_posterior(target, {{0, 1}, {0, 1}, {0, 1}, {0, 1}}, 5, 10, 1),
                  DimensionTooHigh);
}

TEST_CASE("rwmh recovers standard normal moments and symmetry") {
  auto target = [](const Vec<double>& v) { return -0.5 * v[0] * v[0]; };
  RwmhConfig cfg;
  cfg.n_draws = 50000;
  cfg.n_warmup = 5000;
  auto ref = rwmh_sample(target, {0.0}, cfg, 17);
  REQUIRE(ref.samples.size() == 50000);
  CHECK(ref.acceptance_rate > 0.2);
  CHECK(ref.acceptance_rate < 0.7);

  double mean = 0, m2 = 0, m3 = 0;
  const std::size_t n = ref.samples.size();
  for (std::size_t k = 0; k < n; ++k) mean += ref.samples.draws(k, 0);
  mean /= n;
  for (std::size_t k = 0; k < n; ++k) {
    const double c = ref.samples.draws(k, 0) - mean;
    m2 += c * c;
    m3 += c * c * c;
  }
  m2 /= n;
  m3 /= n;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(std::sqrt(m2) - 1.0) < 0.03);
  CHECK(std::fabs(m3 / std::pow(m2, 1.5)) < 0.05);
}

TEST_CASE("rwmh agrees with the grid oracle on a 2-coefficient logistic posterior") {
  // logistic regression with intercept + slope on a small dataset
  Rng rng(23);
  const std::size_t n = 40;
  Vec<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-2.0, 2.0);
    const double p = 1.0 / (1.0 + std::exp(-(0.4 + 0.9 * x[i])));
    y[i] = rng.uniform() < p ? 1.0 : 0.0;
  }
  auto target = [&](const Vec<double>& b) {
    double ll = -0.5 * (b[0] * b[0] + b[1] * b[1]) / 25.0;  // weak N(0,25) prior
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = b[0] + b[1] * x[i];
      ll += y[i] * eta - std::log1p(std::exp(eta));
    }
    return ll;
  };

  auto grid = grid_posterior(target, {{-3.0, 4.0}, {-2.0, 5.0}}, 301, 100000, 29,
                             {"b0", "b1"});
  RwmhConfig cfg;
  cfg.n_draws = 100000;
  cfg.n_warmup = 10000;
  auto mcmc = rwmh_sample(target, {0.0, 0.0}, cfg, 31, {"b0", "b1"});

  auto report = wasserstein1_marginals(grid.samples, mcmc.samples, 7);
  for (double w : report.per_coordinate) CHECK(w <= 0.02);
}

TEST_CASE("rwmh raises StuckChain on a pathological target") {
  // target that rejects every move away from the initial point
  auto target = [](const Vec<double>& v) {
    return v[0] == 0.0 ? 0.0 : -1e18;
  };
  RwmhConfig cfg;
  cfg.n_draws = 500;
  cfg.n_warmup = 200;
  CHECK_THROWS_AS(rwmh_sample(target, {0.0}, cfg, 3), StuckChain);
}

TEST_CASE("conjugate and grid oracles agree for Q = 2") {
  Rng rng(37);
  Mat<double> x(30, 2);
  for (std::size_t i = 0; i < 30; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = rng.uniform(-1.0, 1.0);
  }
  Design d = plain_design(x);
  d.blocks[0].K = Mat<double>::identity(2);
  d.blocks[0].penalty_rank = 2;
  d.blocks[0].tau_index = 0;
  d.n_tau = 1;
  Vec<double> y(30);
  for (std::size_t i = 0; i < 30; ++i) y[i] = 0.5 + 0.8 * x(i, 1) + 0.6 * rng.normal();

  const double sigma = 0.6;
  Vec<double> tau = {0.0};
  auto conj = conjugate_gaussian_posterior(d, y, sigma, tau, 50000, 41);

  auto target = [&](const Vec<double>& b) {
    double ll = -0.5 * (b[0] * b[0] + b[1] * b[1]);  // K=I, tau=0
    for (std::size_t i = 0; i < 30; ++i) {
      const double r = y[i] - b[0] - b[1] * x(i, 1);
      ll -= 0.5 * r * r / (sigma * sigma);
    }
    return ll;
  };
  const double s0 = std::sqrt(conj.exact_cov(0, 0)), s1 = std::sqrt(conj.exact_cov(1, 1));
  auto grid = grid_posterior(target,
                             {{conj.exact_mean[0] - 7 * s0, conj.exact_mean[0] + 7 * s0},
                              {conj.exact_mean[1] - 7 * s1, conj.exact_mean[1] + 7 * s1}},
                             301, 50000, 43);
  CHECK(std::fabs(grid.exact_mean[0] - conj.exact_mean[0]) < 1e-4);
  CHECK(std::fabs(grid.exact_mean[1] - conj.exact_mean[1]) < 1e-4);
  CHECK(std::fabs(grid.exact_cov(0, 1) - conj.exact_cov(0, 1)) < 1e-4);
}
