#pragma once

#include <stdexcept>
#include <string>

namespace dgpal {

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateUpdate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyTrace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientSamples : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLikelihood : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExternalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad config file / unknown key; maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dgpal
