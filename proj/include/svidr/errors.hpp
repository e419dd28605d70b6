#pragma once

#include <stdexcept>
#include <string>

namespace svidr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct NonPositiveDiagonal : Error {
  using Error::Error;
};
struct ZeroVector : Error {
  using Error::Error;
};
struct DegenerateRange : Error {
  using Error::Error;
};
struct OrderTooLarge : Error {
  using Error::Error;
};
struct MissingCovariate : Error {
  using Error::Error;
};
struct NonFiniteValue : Error {
  using Error::Error;
};
struct SupportViolation : Error {
  using Error::Error;
};
struct NonFiniteObjective : Error {
  using Error::Error;
};
struct NonFiniteGradient : Error {
  using Error::Error;
};
struct DimensionTooHigh : Error {
  using Error::Error;
};
struct StuckChain : Error {
  using Error::Error;
};
struct LabelMismatch : Error {
  using Error::Error;
};
struct GridOutOfRange : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};

}  // namespace svidr
