#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace itpl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (z = 0 for a logarithm, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Evaluation at a pole of the Gamma function or of a regularised transform.
class PoleError : public Error {
  public:
    using Error::Error;
};

/// A requested accuracy could not be reached. Carries the best estimate.
class AccuracyError : public Error {
  public:
    AccuracyError(const std::string& what, std::complex<double> best, double err)
        : Error(what), best_(best), err_(err) {}
    std::complex<double> best_estimate() const noexcept { return best_; }
    double error_estimate() const noexcept { return err_; }

  private:
    std::complex<double> best_;
    double err_;
};

/// The Dirichlet series is evaluated outside its region of absolute convergence.
class RegionError : public Error {
  public:
    using Error::Error;
};

/// A form cannot be evaluated at the requested point with the data at hand.
class EvaluationRegionError : public Error {
  public:
    using Error::Error;
};

/// Nesting depth or word length above the supported limit.
class CostGuardError : public Error {
  public:
    using Error::Error;
};

/// Input data violates an invariant (c_0 != 0, empty coefficient list, ...).
class ValidationError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

  private:
    int line_;
};

/// Missing or inconsistent configuration (no Fricke sign, no base point, ...).
class ConfigurationError : public Error {
  public:
    using Error::Error;
};

}  // namespace itpl
