#pragma once

#include <stdexcept>
#include <string>

namespace qdwdm {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical quantity outside its admissible window (pump wavelength,
/// crystal temperature, extrapolated calibration).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument combination, e.g. a zero factor in a denominator.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A least-squares fit that cannot be solved.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Nothing reaches the detectors (t_HV + t_VH == 0).
class NoSignalError : public Error {
 public:
  using Error::Error;
};

/// A correlation or CHSH estimate is missing required counts.
class IncompleteDataError : public Error {
 public:
  using Error::Error;
};

/// Requested channel pair is not adjacent in the bank.
class AdjacencyError : public Error {
 public:
  using Error::Error;
};

/// Operation undefined for the detector's trigger mode.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent scenario configuration. `field` holds the
/// dotted path of the offending entry when known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string field = {})
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace qdwdm
