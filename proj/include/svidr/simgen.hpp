#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "svidr/basis.hpp"
#include "svidr/rng.hpp"

namespace svidr {

// Deterministic scenario generators. Each variable draws from its own
// sub-stream derived from the scenario seed, so adding observations or
// reordering draws in one variable never perturbs another.

namespace detail {
// Marsaglia-Tsang gamma sampler, deterministic given the stream.
inline double gamma_draw(Rng& rng, double shape, double rate) {
  double boost_u = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost_u = std::pow(rng.uniform(), 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
      return boost_u * d * v / rate;
  }
}
}  // namespace detail

struct LogisticScenario {
  Dataset data;             // columns y, x1, x2
  Vec<double> probability;  // true success probabilities (after clamping)
  double clamp_rate = 0.0;  // share of observations whose raw signal left [0,1]
  std::uint64_t seed = 0;
};

// Binary scenario: x1 from a three-component uniform mixture on (0, pi) with
// weights 9/20, 2/20, 9/20; z2 from a two-component mixture on (-pi, 0) with
// weights 18/20, 2/20; x2 = rho x1 + sqrt(1-rho^2) z2 with rho = -0.7;
// y ~ Bernoulli(clamp(sin(1.75 x1) + cos(-1.75 x2))). The raw signal can
// leave [0,1], so it is clamped to [1e-6, 1-1e-6] and the clamp rate is
// reported.
inline LogisticScenario gen_logistic(std::size_t n, std::uint64_t seed) {
  constexpr double pi = 3.14159265358979323846;
  constexpr double rho = -0.7;
  Rng rng_x1(derive_seed(seed, 1));
  Rng rng_z2(derive_seed(seed, 2));
  Rng rng_y(derive_seed(seed, 3));

  LogisticScenario out;
  out.seed = seed;
  Vec<double> y(n), x1(n), x2(n);
  out.probability.resize(n);
  std::size_t clamped = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = rng_x1.uniform();
    if (u1 < 9.0 / 20.0)
      x1[i] = rng_x1.uniform(0.0, pi / 3.0);
    else if (u1 < 11.0 / 20.0)
      x1[i] = rng_x1.uniform(pi / 3.0, 2.0 * pi / 3.0);
    else
      x1[i] = rng_x1.uniform(2.0 * pi / 3.0, pi);

    const double u2 = rng_z2.uniform();
    const double z2 = u2 < 18.0 / 20.0 ? rng_z2.uniform(-pi, -pi / 3.0)
                                       : rng_z2.uniform(-pi / 3.0, 0.0);
    x2[i] = rho * x1[i] + std::sqrt(1.0 - rho * rho) * z2;

    const double raw = std::sin(1.75 * x1[i]) + std::cos(-1.75 * x2[i]);
    double p = raw;
    if (raw < 1e-6 || raw > 1.0 - 1e-6) {
      p = std::clamp(raw, 1e-6, 1.0 - 1e-6);
      ++clamped;
    }
    out.probability[i] = p;
    y[i] = rng_y.uniform() < p ? 1.0 : 0.0;
  }

  out.clamp_rate = static_cast<double>(clamped) / n;
  out.data.n = n;
  out.data.names = {"y", "x1", "x2"};
  out.data.columns = {std::move(y), std::move(x1), std::move(x2)};
  return out;
}

struct GammaScenario {
  Dataset data;  // columns y, x
  Vec<double> true_mean;
  Vec<double> true_variance;
  std::uint64_t seed = 0;
};

// Gamma distributional regression scenario: x ~ U(0, pi),
// mu = 3 + exp(sin(1.75 x)), sigma^2 = exp(cos(-2x))^2,
// y ~ Gamma(shape mu^2/sigma^2, rate mu/sigma^2).
inline GammaScenario gen_gamma(std::size_t n, std::uint64_t seed) {
  constexpr double pi = 3.14159265358979323846;
  Rng rng_x(derive_seed(seed, 1));
  Rng rng_y(derive_seed(seed, 2));

  GammaScenario out;
  out.seed = seed;
  Vec<double> y(n), x(n);
  out.true_mean.resize(n);
  out.true_variance.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng_x.uniform(0.0, pi);
    const double mu = 3.0 + std::exp(std::sin(1.75 * x[i]));
    const double e = std::exp(std::cos(-2.0 * x[i]));
    const double var = e * e;
    out.true_mean[i] = mu;
    out.true_variance[i] = var;
    y[i] = detail::gamma_draw(rng_y, mu * mu / var, mu / var);
  }

  out.data.n = n;
  out.data.names = {"y", "x"};
  out.data.columns = {std::move(y), std::move(x)};
  return out;
}

}  // namespace svidr
