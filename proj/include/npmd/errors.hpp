#ifndef NPMD_ERRORS_HPP
#define NPMD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace npmd {

// Base of every error thrown by the library. The CLI maps ConfigError to
// exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (t outside (0,1),
// lambda at or beyond the mgf boundary, y <= -1 for h).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Construction parameter outside its admissible set (r outside (0, 1/2),
// overlapping counterexample pieces, malformed distributions).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Density 1 + theta * a fails to be positive.
class ValidityError : public Error {
 public:
  ValidityError(const std::string& what, double margin)
      : Error(what), margin_(margin) {}
  // 1 + theta * essential_min; nonpositive when thrown by validate_model.
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

// Adaptive quadrature ran out of subdivisions.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double partial, double err_est)
      : Error(what), partial_(partial), err_est_(err_est) {}
  double partial() const noexcept { return partial_; }
  double err_est() const noexcept { return err_est_; }

 private:
  double partial_;
  double err_est_;
};

// Tilt target unreachable inside the mgf domain.
class RangeError : public Error {
 public:
  RangeError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace npmd

#endif  // NPMD_ERRORS_HPP
