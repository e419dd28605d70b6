#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "svidr/autodiff.hpp"
#include "svidr/errors.hpp"

namespace svidr {

// Response families. gaussian_known_sd is the conjugate oracle family: a
// Gaussian likelihood with fixed noise standard deviation and a single
// identity-linked location parameter.
enum class FamilyKind {
  gaussian,         // P=2: identity-linked mean, log-linked sd
  bernoulli_logit,  // P=1: logistic-linked probability
  gamma_meanvar,    // P=2: log-linked mean and variance
  negbin_meandisp,  // P=2: log-linked mean and dispersion, Var = mu + mu^2/delta
  gaussian_known_sd  // P=1: identity-linked mean, sd fixed in the model spec
};

inline std::size_t family_param_count(FamilyKind k) {
  switch (k) {
    case FamilyKind::bernoulli_logit:
    case FamilyKind::gaussian_known_sd:
      return 1;
    default:
      return 2;
  }
}

inline std::vector<std::string> family_param_names(FamilyKind k) {
  switch (k) {
    case FamilyKind::gaussian:
      return {"loc", "scale"};
    case FamilyKind::bernoulli_logit:
      return {"prob"};
    case FamilyKind::gamma_meanvar:
      return {"mu", "sigma2"};
    case FamilyKind::negbin_meandisp:
      return {"mu", "delta"};
    case FamilyKind::gaussian_known_sd:
      return {"loc"};
  }
  return {};
}

inline std::string family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::gaussian:
      return "gaussian";
    case FamilyKind::bernoulli_logit:
      return "bernoulli_logit";
    case FamilyKind::gamma_meanvar:
      return "gamma_meanvar";
    case FamilyKind::negbin_meandisp:
      return "negbin_meandisp";
    case FamilyKind::gaussian_known_sd:
      return "gaussian_known_sd";
  }
  return "?";
}

inline FamilyKind family_from_name(const std::string& s) {
  if (s == "gaussian") return FamilyKind::gaussian;
  if (s == "bernoulli_logit") return FamilyKind::bernoulli_logit;
  if (s == "gamma_meanvar") return FamilyKind::gamma_meanvar;
  if (s == "negbin_meandisp") return FamilyKind::negbin_meandisp;
  if (s == "gaussian_known_sd") return FamilyKind::gaussian_known_sd;
  throw ConfigError("unknown response family: " + s);
}

inline void check_support(FamilyKind k, double y) {
  switch (k) {
    case FamilyKind::gaussian:
    case FamilyKind::gaussian_known_sd:
      if (!std::isfinite(y)) throw SupportViolation("gaussian: nonfinite response");
      break;
    case FamilyKind::bernoulli_logit:
      if (y != 0.0 && y != 1.0)
        throw SupportViolation("bernoulli: response must be 0 or 1");
      break;
    case FamilyKind::gamma_meanvar:
      if (!(y > 0.0)) throw SupportViolation("gamma: response must be positive");
      break;
    case FamilyKind::negbin_meandisp:
      if (!(y >= 0.0) || y != std::floor(y))
        throw SupportViolation("negbin: response must be a nonnegative integer");
      break;
  }
}

namespace detail {
// log(1 + exp(x)) without overflow
template <class T>
T softplus(const T& x) {
  using std::exp;
  using std::log1p;
  if (value(x) > 0.0) return x + log1p(exp(-x));
  return log1p(exp(x));
}
}  // namespace detail

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Log-density of one observation given its P-row of predictor values.
// Links are applied internally: gaussian (identity mean, log sd), bernoulli
// (logistic), gamma (log mean, log variance -> shape mu^2/sigma^2, rate
// mu/sigma^2), negbin (log mean, log dispersion).
template <class T>
T log_pdf_one(FamilyKind k, double y, const T* eta, double known_sd = 1.0) {
  using std::exp;
  using std::lgamma;
  using std::log;
  switch (k) {
    case FamilyKind::gaussian: {
      const T r = T(y) - eta[0];
      return T(-0.5 * kLogTwoPi) - eta[1] - 0.5 * r * r * exp(-2.0 * eta[1]);
    }
    case FamilyKind::gaussian_known_sd: {
      const T r = (T(y) - eta[0]) * (1.0 / known_sd);
      return T(-0.5 * kLogTwoPi - std::log(known_sd)) - 0.5 * r * r;
    }
    case FamilyKind::bernoulli_logit:
      return T(y) * eta[0] - detail::softplus(eta[0]);
    case FamilyKind::gamma_meanvar: {
      // shape a = mu^2/sigma^2, rate b = mu/sigma^2
      const T a = exp(2.0 * eta[0] - eta[1]);
      const T log_b = eta[0] - eta[1];
      return a * log_b - lgamma(a) + (a - 1.0) * std::log(y) - exp(log_b) * y;
    }
    case FamilyKind::negbin_meandisp: {
      const T mu = exp(eta[0]);
      const T delta = exp(eta[1]);
      const T log_total = log(delta + mu);
      return lgamma(T(y) + delta) - lgamma(delta) - std::lgamma(y + 1.0) +
             delta * (eta[1] - log_total) + y * (eta[0] - log_total);
    }
  }
  return T(0);
}

}  // namespace svidr
