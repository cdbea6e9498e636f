#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace oamspdc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the range a model supports (e.g. a wavelength
/// outside the Sellmeier band).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A configuration value failed validation. `field()` names the offending key
/// using dotted notation ("pump.waist_um").
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The azimuthal sample count cannot represent the requested mode cutoff.
class AliasingError : public Error {
 public:
  using Error::Error;
};

/// A visibility grid is too coarse for the requested mode cutoff.
class NyquistError : public Error {
 public:
  NyquistError(const std::string& message, double required_step_deg, int max_supported_n)
      : Error(message), required_step_deg_(required_step_deg), max_supported_n_(max_supported_n) {}

  double required_step_deg() const noexcept { return required_step_deg_; }
  int max_supported_n() const noexcept { return max_supported_n_; }

 private:
  double required_step_deg_;
  int max_supported_n_;
};

/// A computation produced an undefined or non-convergent result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace oamspdc
