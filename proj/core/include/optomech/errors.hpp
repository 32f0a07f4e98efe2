#pragma once

#include <stdexcept>
#include <string>

namespace optomech {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The drift matrix is not Hurwitz, so no stationary covariance exists.
class InstabilityError : public Error {
 public:
  InstabilityError() : Error("parametric instability: no steady state") {}
  using Error::Error;
};

}  // namespace optomech
