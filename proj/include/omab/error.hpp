#pragma once

#include <stdexcept>
#include <string>

namespace omab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class MalformedTrace : public Error {
 public:
  using Error::Error;
};

/// The agent lacks a field the reward model needs (features, cluster label).
class ModelMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class EmptyPopulation : public Error {
 public:
  using Error::Error;
};

class InvalidWeights : public Error {
 public:
  using Error::Error;
};

/// Commit-after-burn-in saw an arm with no burn-in samples.
class UndefinedEstimate : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A runtime lemma check or internal invariant failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace omab
