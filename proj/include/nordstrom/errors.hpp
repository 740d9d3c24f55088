#pragma once

#include <stdexcept>
#include <string>

namespace nordstrom {

/// Array or field shapes do not agree with the grid they are used on.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the domain where an operation is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Coefficients that should describe a real field violate conjugate symmetry.
class CorruptFieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters the formulas do not cover (e.g. kappa outside (0,1)).
class UnsupportedParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid experiment configuration; the message carries the field path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace nordstrom
