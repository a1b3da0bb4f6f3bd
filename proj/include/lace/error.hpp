#pragma once

#include <stdexcept>
#include <string>

namespace lace {

// Base for every error raised by the library. The CLI maps subclasses to
// exit codes (IoError -> 2, ParseError/ValidationError -> 3, rest -> 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Synthetic data could not satisfy its spacing constraint.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Raised when the training loss stops being finite.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int epoch, double last_finite_loss)
      : Error(what), epoch_(epoch), last_finite_loss_(last_finite_loss) {}
  int epoch() const { return epoch_; }
  double last_finite_loss() const { return last_finite_loss_; }

 private:
  int epoch_;
  double last_finite_loss_;
};

}  // namespace lace
