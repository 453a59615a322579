#pragma once

#include <stdexcept>
#include <string>

namespace vuix {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (case files, model files).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A parameter outside the domain an operation accepts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition failed on otherwise well-formed input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

#define VUIX_DEFINE_ERROR(Name, Base) \
  class Name : public Base {          \
   public:                            \
    using Base::Base;                 \
  };

// grid_model
VUIX_DEFINE_ERROR(MalformedCase, InputError)
VUIX_DEFINE_ERROR(InvalidTopology, InputError)
VUIX_DEFINE_ERROR(NonpositiveReactance, InputError)
VUIX_DEFINE_ERROR(NoInServiceBranch, InputError)

// stochastic_model
VUIX_DEFINE_ERROR(InvalidRho, ConfigError)
VUIX_DEFINE_ERROR(DimensionMismatch, InputError)
VUIX_DEFINE_ERROR(DegenerateSignal, NumericalError)
VUIX_DEFINE_ERROR(NotPositiveDefinite, NumericalError)

// attack_theory
VUIX_DEFINE_ERROR(IndexAttacked, ConfigError)
VUIX_DEFINE_ERROR(LambdaBelowOne, ConfigError)
VUIX_DEFINE_ERROR(NegativeDiscriminant, NumericalError)

// vuix
VUIX_DEFINE_ERROR(EmptyFreeSet, ConfigError)
VUIX_DEFINE_ERROR(InvalidK, ConfigError)
VUIX_DEFINE_ERROR(InvalidTrials, ConfigError)

#undef VUIX_DEFINE_ERROR

}  // namespace vuix
