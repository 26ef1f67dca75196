#pragma once

#include <stdexcept>
#include <string>

namespace mra {

/// Raised for numerical preconditions the caller could not have checked
/// cheaply (zero reference signal, insufficient bispectrum support, ...).
class MraError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed configuration or input files.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace mra
