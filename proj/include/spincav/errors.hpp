#pragma once

#include <stdexcept>
#include <string>

namespace spincav {

class SpincavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

// The Liouvillian kernel is not one-dimensional.
class SingularGenerator : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

class QuadratureNotConverged : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

class NoConvergence : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

class MultistableSuspected : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

class NoSteadyState : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

class PeaksUnresolved : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

class FitDiverged : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

class ConfigError : public SpincavError {
 public:
  using SpincavError::SpincavError;
};

}  // namespace spincav
